from __future__ import annotations

import json
import math

import numpy as np
import pytest
from scipy import ndimage

from shadowtrack import synth
from shadowtrack.synth import Background, Distractor, ScenarioSpec, Target


def test_flat_shadow_intensity_is_multiplicative():
    spec = ScenarioSpec(100, 80, 2, Background("flat", 200), Target((10, 6), 0.4, 0.0, [(50.0, 40.0)]))
    frames, _ = synth.generate(spec)
    assert frames[0][40, 50] == 80
    assert frames[0][0, 0] == 200


def test_same_seed_is_bitwise_identical():
    spec = synth.preset("textured", n_frames=5, seed=3)
    a, ga = synth.generate(spec)
    b, gb = synth.generate(spec)
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
    assert ga == gb
    c, _ = synth.generate(synth.preset("textured", n_frames=5, seed=4))
    assert not np.array_equal(a[0], c[0])


@pytest.mark.parametrize("blur", [0.0, 1.0])
def test_ground_truth_area_matches_rendered_pixels(blur):
    spec = ScenarioSpec(100, 80, 2, Background("flat", 200), Target((10, 6), 0.4, blur, [(50.3, 40.6)]))
    frames, gt = synth.generate(spec)
    dark = np.count_nonzero(frames[0] < 140)  # halfway between shadow and ground
    assert abs(gt.areas[0] - math.pi * 60) <= 0.1 * math.pi * 60
    assert abs(dark - gt.areas[0]) <= 0.1 * gt.areas[0]


def test_ground_truth_box_bounds_dark_pixels():
    spec = synth.preset("flat_easy", n_frames=20, noise_sigma=0.0)
    frames, gt = synth.generate(spec)
    blur = spec.target.blur_sigma
    for frame, box in zip(frames, gt.boxes):
        ys, xs = np.nonzero(frame < 200 * (spec.target.attenuation + 0.1))
        x0, y0, x1, y1 = box.extent
        assert xs.size > 0
        assert (xs >= x0 - blur).all() and (xs < x1 + blur).all()
        assert (ys >= y0 - blur).all() and (ys < y1 + blur).all()


def test_one_truth_entry_per_frame():
    spec = synth.preset("moving_distractor", n_frames=7)
    frames, gt = synth.generate(spec)
    assert len(frames) == len(gt) == len(gt.areas) == 7


def test_path_moves_at_constant_speed():
    path = [(0.0, 0.0), (30.0, 0.0), (30.0, 30.0)]
    pts = [synth.path_position(path, t, 7) for t in range(7)]
    assert pts[0] == (0.0, 0.0) and pts[-1] == (30.0, 30.0)
    assert pts[3] == pytest.approx((30.0, 0.0))
    steps = [math.dist(a, b) for a, b in zip(pts, pts[1:])]
    # chord lengths shrink only on the step that turns the corner
    assert steps[0] == pytest.approx(10.0) and steps[-1] == pytest.approx(10.0)


def test_invalid_specs_raise():
    with pytest.raises(ValueError):
        synth.generate(ScenarioSpec(100, 80, 3, target=Target(path=[(5.0, 40.0)])))
    with pytest.raises(ValueError):
        ScenarioSpec(n_frames=1)
    with pytest.raises(ValueError):
        Background("marble")
    with pytest.raises(ValueError):
        Target(attenuation=1.2, path=[(1, 1)])
    with pytest.raises(ValueError):
        Distractor("triangle", path=[(1, 1)])


def test_spec_dict_round_trip():
    spec = synth.preset("moving_distractor", seed=11)
    assert ScenarioSpec.from_dict(json.loads(json.dumps(spec.to_dict()))) == spec


def test_preset_contents():
    assert synth.preset("flat_easy").distractors == []
    spec = synth.preset("dark_crossing")
    dark_rects = [d for d in spec.distractors if d.shape == "rect" and d.attenuation <= 0.2]
    assert dark_rects
    assert synth.crossing_frames(spec)
    assert synth.preset("textured").background.kind == "noise"
    (mover,) = synth.preset("moving_distractor").distractors
    assert mover.shape == "ellipse" and len(mover.path) > 1
    assert synth.crossing_frames(synth.preset("moving_distractor"))


def test_unknown_preset_lists_names():
    with pytest.raises(KeyError, match="flat_easy, dark_crossing, textured, moving_distractor"):
        synth.preset("snowstorm")


@pytest.mark.parametrize("name", list(synth.PRESETS))
def test_presets_generate_at_default_size(name):
    frames, gt = synth.generate(synth.preset(name))
    assert len(frames) == 100
    assert all(f.shape == (360, 640) for f in frames)
    assert all(((f >= 0) & (f <= 255) & (f == np.rint(f))).all() for f in frames)


def test_tiles_background():
    spec = ScenarioSpec(64, 48, 2, Background("tiles", 150, amplitude=40, scale=8),
                        Target(path=[(32.0, 24.0)]))
    bg = synth.render_background(spec)
    assert bg.shape == (48, 64)
    # every 8x8 tile is constant
    assert all(np.ptp(bg[y:y + 8, x:x + 8]) == 0 for y in range(0, 48, 8) for x in range(0, 64, 8))
    assert ndimage.standard_deviation(bg) > 0
