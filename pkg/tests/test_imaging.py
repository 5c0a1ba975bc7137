from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from PIL import Image

from shadowtrack import imaging
from shadowtrack.imaging import BoundingBox, FrameIOError

import oracles

masks = arrays(np.bool_, st.tuples(st.integers(1, 16), st.integers(1, 16)))


def test_integral_image_small_cases():
    assert imaging.integral_image(np.array([[5.0]])).tolist() == [[0, 0], [0, 5]]
    ii = imaging.integral_image(np.array([[1.0, 2.0], [3.0, 4.0]]))
    assert ii[-1, -1] == 10
    assert np.all(ii[0] == 0) and np.all(ii[:, 0] == 0)


def test_integral_image_matches_nested_loops():
    rng = np.random.default_rng(1)
    frame = rng.integers(0, 256, size=(12, 17)).astype(float)
    np.testing.assert_array_equal(imaging.integral_image(frame), oracles.integral_image(frame))


def test_every_rect_sum_matches_brute_force():
    rng = np.random.default_rng(2)
    frame = rng.integers(0, 256, size=(64, 64)).astype(float)
    ii = imaging.integral_image(frame)
    for _ in range(300):
        x0, x1 = sorted(rng.integers(0, 65, size=2))
        y0, y1 = sorted(rng.integers(0, 65, size=2))
        assert imaging.rect_sum(ii, x0, y0, x1, y1) == oracles.rect_sum(frame, x0, y0, x1, y1)


def test_rect_mean_examples():
    frame = np.array([[1.0, 2.0], [3.0, 4.0]])
    ii = imaging.integral_image(frame)
    assert imaging.rect_mean(ii, BoundingBox(0.5, 0.5, 2, 2)) == 2.5
    assert imaging.rect_mean(ii, BoundingBox(1, 0, 1, 1)) == 2.0


def test_rect_mean_clamps_at_corner():
    rng = np.random.default_rng(3)
    frame = rng.uniform(0, 255, size=(40, 50))
    ii = imaging.integral_image(frame)
    box = BoundingBox(0, 0, 16, 16)
    x0, y0, w, h = box.pixel_origin()
    assert imaging.rect_mean(ii, box) == pytest.approx(oracles.clamped_mean(frame, x0, y0, w, h))
    with pytest.raises(ValueError):
        imaging.rect_mean(ii, BoundingBox(-50, -50, 4, 4))


def test_bounding_box_validation_and_extent():
    with pytest.raises(ValueError):
        BoundingBox(0, 0, 0.5, 3)
    b = BoundingBox(10, 20, 4, 6)
    assert b.extent == (8, 17, 12, 23)
    assert b.area == 24
    assert b.moved_to(1, 2) == BoundingBox(1, 2, 4, 6)


@given(st.floats(-50, 50), st.integers(1, 30))
def test_pixel_origin_covers_half_open_extent(cx, w):
    x0, _, wi, _ = BoundingBox(cx, 0, w, 1).pixel_origin()
    centers = [x for x in range(-100, 100) if cx - w / 2 <= x < cx + w / 2]
    assert wi == w
    assert centers == list(range(x0, x0 + w))


def test_load_frame_pgm_identity(tmp_path):
    path = tmp_path / "f.pgm"
    path.write_bytes(b"P5\n2 2\n255\n" + bytes([0, 255, 128, 64]))
    np.testing.assert_array_equal(imaging.load_frame(path), [[0, 255], [128, 64]])


def test_load_frame_rgb_luma(tmp_path):
    rgb = np.array([[[255, 255, 255], [255, 0, 0]]], dtype=np.uint8)
    Image.fromarray(rgb).save(tmp_path / "c.png")
    frame = imaging.load_frame(tmp_path / "c.png")
    assert frame[0, 0] == pytest.approx(255)
    assert frame[0, 1] == pytest.approx(76.245)


def test_load_frame_errors(tmp_path):
    with pytest.raises(FrameIOError):
        imaging.load_frame(tmp_path / "missing.png")
    (tmp_path / "junk.png").write_bytes(b"not an image")
    with pytest.raises(FrameIOError):
        imaging.load_frame(tmp_path / "junk.png")
    Image.fromarray(np.zeros((2, 2, 4), dtype=np.uint8)).save(tmp_path / "rgba.png")
    with pytest.raises(FrameIOError, match="unsupported"):
        imaging.load_frame(tmp_path / "rgba.png")


@pytest.mark.parametrize("ext", ["png", "pgm"])
def test_save_load_round_trip(tmp_path, ext):
    frame = np.random.default_rng(4).integers(0, 256, size=(9, 13)).astype(float)
    path = tmp_path / imaging.frame_name(3, ext)
    imaging.save_frame(path, frame)
    np.testing.assert_array_equal(imaging.load_frame(path), frame)


def test_list_frames_filters_and_sorts(tmp_path):
    for name in ["frame_000002.png", "frame_000000.pgm", "frame_1.png", "notes.txt", "frame_000001.png"]:
        (tmp_path / name).write_bytes(b"")
    assert [p.name for p in imaging.list_frames(tmp_path)] == [
        "frame_000000.pgm", "frame_000001.png", "frame_000002.png"]
    with pytest.raises(FrameIOError):
        imaging.list_frames(tmp_path / "nope")


def test_morphology_examples():
    empty = np.zeros((5, 5), dtype=bool)
    assert not imaging.erode(empty).any() and not imaging.dilate(empty).any()
    single = empty.copy()
    single[2, 2] = True
    assert not imaging.erode(single).any()
    assert imaging.dilate(single).sum() == 9
    corner = empty.copy()
    corner[0, 0] = True
    assert imaging.dilate(corner).sum() == 4


def test_morphology_matches_brute_force():
    rng = np.random.default_rng(5)
    for _ in range(20):
        m = rng.random((32, 32)) < rng.uniform(0.2, 0.9)
        np.testing.assert_array_equal(imaging.erode(m), oracles.erode(m))
        np.testing.assert_array_equal(imaging.dilate(m), oracles.dilate(m))


@settings(max_examples=200)
@given(masks)
def test_opening_is_contained(m):
    assert not (imaging.dilate(imaging.erode(m)) & ~m).any()


@settings(max_examples=200)
@given(masks)
def test_closing_contains_mask_away_from_border(m):
    # with background outside the image, closing can only lose border-touching pixels
    m = np.pad(m, 1)
    assert not (m & ~imaging.erode(imaging.dilate(m))).any()


def test_closing_can_drop_border_pixels():
    m = np.ones((1, 1), dtype=bool)
    assert not imaging.erode(imaging.dilate(m)).any()


def test_components_examples():
    assert imaging.connected_components(np.zeros((4, 4), dtype=bool)) == []
    diag = np.zeros((4, 4), dtype=bool)
    diag[1, 1] = diag[2, 2] = True
    (c,) = imaging.connected_components(diag)
    assert c.pixel_count == 2
    blocks = np.zeros((10, 20), dtype=bool)
    blocks[2:7, 2:7] = True
    blocks[2:7, 9:14] = True
    assert [c.pixel_count for c in imaging.connected_components(blocks)] == [25, 25]


def _check_against_flood_fill(m):
    comps = imaging.connected_components(m)
    expected = oracles.flood_components(m)
    assert sorted(c.pixel_count for c in comps) == sorted(len(s) for s in expected)
    by_count_and_centroid = {
        (len(s), round(np.mean([p[0] for p in s]), 9), round(np.mean([p[1] for p in s]), 9)): s
        for s in expected
    }
    for c in comps:
        key = (c.pixel_count, round(c.centroid[0], 9), round(c.centroid[1], 9))
        pixels = by_count_and_centroid[key]
        xs = [p[0] for p in pixels]
        ys = [p[1] for p in pixels]
        x0, y0, x1, y1 = c.bbox.extent
        assert (x0, x1) == (min(xs) - 0.5, max(xs) + 0.5)
        assert (y0, y1) == (min(ys) - 0.5, max(ys) + 0.5)
        assert x0 <= c.centroid[0] < x1 and y0 <= c.centroid[1] < y1


def test_components_match_flood_fill():
    rng = np.random.default_rng(6)
    for _ in range(20):
        _check_against_flood_fill(rng.random((64, 64)) < rng.uniform(0.1, 0.6))


@given(masks)
def test_components_partition_set_pixels(m):
    assert sum(c.pixel_count for c in imaging.connected_components(m)) == m.sum()


def test_extract_patch():
    frame = np.arange(30, dtype=float).reshape(5, 6)
    np.testing.assert_array_equal(imaging.extract_patch(frame, BoundingBox(2.5, 2, 6, 5)), frame)
    np.testing.assert_array_equal(imaging.extract_patch(frame, BoundingBox(2, 2, 2, 2)), frame[1:3, 1:3])
    corner = imaging.extract_patch(frame, BoundingBox(0, 0, 4, 4))
    assert corner.shape == (4, 4)
    np.testing.assert_array_equal(corner[:3, :3], np.full((3, 3), frame[0, 0]))
    np.testing.assert_array_equal(corner[2:, 2:], frame[:2, :2])


def test_crop_mask_is_background_outside():
    mask = np.ones((4, 4), dtype=bool)
    out = imaging.crop_mask(mask, BoundingBox(0, 0, 4, 4))
    assert out.sum() == 4 and out[2:, 2:].all()
    assert not imaging.crop_mask(mask, BoundingBox(100, 100, 4, 4)).any()
