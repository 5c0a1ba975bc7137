"""Shadow-aware correlation tracking.

Normal mode is plain correlation-filter tracking inside a search region around
the previous center. After each normal step the area of the shadow blob
nearest to the new center is compared with the previous one; a sudden growth
predicts a failure, the normal result is discarded and the same frame is
re-tracked in fusion mode: a larger search region, the filter frozen at the
last good frame, and a response restricted to shadow pixels.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import corr_filter as cf
from .imaging import BoundingBox, as_frame, component_stats, crop_mask, extract_patch
from .shadow_detect import ShadowDetectorConfig, shadow_mask

FUSION_EXPAND = 4 / 3
AREA_RATIO_THRESHOLD = 2.5


class Mode(str, enum.Enum):
    NORMAL = "normal"
    FUSION = "fusion"


@dataclass(frozen=True)
class TrackerConfig:
    padding_factor: float = 2.0
    recover_band: float = 2.5
    fusion: bool = True
    detector: ShadowDetectorConfig = field(default_factory=ShadowDetectorConfig)
    filter: cf.FilterConfig = field(default_factory=cf.FilterConfig)
    fusion_expand: float = FUSION_EXPAND
    area_ratio_threshold: float = AREA_RATIO_THRESHOLD

    def __post_init__(self):
        if self.padding_factor < 1:
            raise ValueError("padding_factor must be >= 1")
        if self.fusion_expand != FUSION_EXPAND:
            raise ValueError("fusion_expand is fixed at 4/3")
        if self.area_ratio_threshold != AREA_RATIO_THRESHOLD:
            raise ValueError("area_ratio_threshold is fixed at 2.5")
        if self.recover_band <= 1:
            raise ValueError("recover_band must be > 1")


def config_to_dict(cfg: TrackerConfig) -> dict:
    return asdict(cfg)


def config_from_dict(d: dict) -> TrackerConfig:
    d = dict(d)
    detector = ShadowDetectorConfig(**d.pop("detector", {}))
    filter_cfg = cf.FilterConfig(**d.pop("filter", {}))
    return TrackerConfig(detector=detector, filter=filter_cfg, **d)


@dataclass(frozen=True)
class TrackerState:
    mode: Mode
    bbox: BoundingBox
    filter: cf.CorrelationFilter
    last_good_filter: cf.CorrelationFilter
    last_good_area: int
    prev_area: int
    frame_index: int
    frame_shape: tuple[int, int]


@dataclass(frozen=True)
class TrackStep:
    frame_index: int
    bbox: BoundingBox
    mode: Mode
    peak: float
    shadow_area: int
    search: BoundingBox | None = None


def nearest_component_area(mask: np.ndarray, cx: float, cy: float) -> int:
    """Pixel count of the component whose centroid is nearest ``(cx, cy)``.

    Ties go to the larger component; an empty mask gives 0.
    """
    counts, xs, ys = component_stats(mask)
    if counts.size == 0:
        return 0
    dist = np.hypot(xs - cx, ys - cy)
    # lexicographic (distance, -count) minimum
    order = np.lexsort((-counts, dist))
    return int(counts[order[0]])


def shadow_area_at(frame: np.ndarray, box: BoundingBox,
                   det_cfg: ShadowDetectorConfig = ShadowDetectorConfig()) -> int:
    return nearest_component_area(shadow_mask(frame, det_cfg), box.cx, box.cy)


def predict_failure(prev_area: float, curr_area: float) -> bool:
    if prev_area < 0 or curr_area < 0:
        raise ValueError("areas must be non-negative")
    return prev_area > 0 and curr_area >= AREA_RATIO_THRESHOLD * prev_area


def fuse(response: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Correlation evidence restricted to shadow pixels.

    The response is shifted to be non-negative first, so off-mask pixels score
    0 and can never beat an on-mask pixel with positive evidence.
    """
    return (response - response.min()) * mask


def fused_peak(response: np.ndarray, mask: np.ndarray) -> tuple[int, int] | None:
    """``(row, col)`` of the best fused score, or None when nothing scores above 0."""
    fused = fuse(response, mask)
    if not fused.max() > 0:
        return None
    row, col = np.unravel_index(int(np.argmax(fused)), fused.shape)
    return int(row), int(col)


def expand_region(s: BoundingBox) -> BoundingBox:
    """Grow each dimension by a third (rounded up), keeping the center."""
    return BoundingBox(s.cx, s.cy, math.ceil(4 * s.w / 3), math.ceil(4 * s.h / 3))


def _check_box(frame_shape: tuple[int, int], box: BoundingBox) -> None:
    H, W = frame_shape
    x0, y0, x1, y1 = box.extent
    if box.w < 4 or box.h < 4:
        raise ValueError(f"init box must be at least 4x4, got {box.w}x{box.h}")
    if x0 < -0.5 or y0 < -0.5 or x1 > W - 0.5 or y1 > H - 0.5:
        raise ValueError(f"init box {box} is not inside the {W}x{H} frame")


def _clamp_center(cx: float, cy: float, frame_shape: tuple[int, int]) -> tuple[float, float]:
    H, W = frame_shape
    return min(max(cx, 0.0), W - 1.0), min(max(cy, 0.0), H - 1.0)


class Tracker:
    """Per-sequence tracking driver around :class:`TrackerState`."""

    def __init__(self, cfg: TrackerConfig = TrackerConfig()):
        self.cfg = cfg

    def init(self, frame: np.ndarray, user_box: BoundingBox) -> tuple[TrackerState, TrackStep]:
        frame = as_frame(frame)
        _check_box(frame.shape, user_box)
        h = cf.init_filter(frame, user_box, self.cfg.filter, self.cfg.padding_factor)
        area = shadow_area_at(frame, user_box, self.cfg.detector)
        state = TrackerState(Mode.NORMAL, user_box, h, h, area, area, 0, frame.shape)
        return state, TrackStep(0, user_box, Mode.NORMAL, math.nan, area)

    def search_region(self, box: BoundingBox) -> BoundingBox:
        return cf.search_region(box, self.cfg.padding_factor)

    def fusion_region(self, box: BoundingBox) -> BoundingBox:
        s_prime = expand_region(self.search_region(box))
        return BoundingBox(s_prime.cx, s_prime.cy, cf.even(s_prime.w), cf.even(s_prime.h))

    def step(self, state: TrackerState, frame: np.ndarray) -> tuple[TrackerState, TrackStep]:
        frame = as_frame(frame)
        if frame.shape != state.frame_shape:
            raise ValueError(f"frame shape {frame.shape} differs from the sequence's {state.frame_shape}")
        index = state.frame_index + 1
        mask = shadow_mask(frame, self.cfg.detector)

        if state.mode is Mode.NORMAL:
            region = self.search_region(state.bbox)
            patch = extract_patch(frame, region)
            x0, y0, _, _ = region.pixel_origin()
            cmap = cf.correlate(state.filter, patch, (x0, y0))
            row, col = cmap.peak()
            cx, cy = _clamp_center(x0 + col, y0 + row, frame.shape)
            box = state.bbox.moved_to(cx, cy)
            area = nearest_component_area(mask, cx, cy)
            if not (self.cfg.fusion and predict_failure(state.prev_area, area)):
                h = cf.update_filter(state.filter, patch, (row, col))
                new = replace(state, bbox=box, filter=h, last_good_filter=h, last_good_area=area,
                              prev_area=area, frame_index=index)
                peak = float(cmap.response[row, col])
                return new, TrackStep(index, box, Mode.NORMAL, peak, area, region)

        return self._fusion_step(state, frame, mask, index)

    def _fusion_step(self, state: TrackerState, frame: np.ndarray, mask: np.ndarray,
                     index: int) -> tuple[TrackerState, TrackStep]:
        region = self.fusion_region(state.bbox)
        patch = extract_patch(frame, region)
        x0, y0, _, _ = region.pixel_origin()
        response = cf.correlate(state.last_good_filter, patch, (x0, y0)).response
        best = fused_peak(response, crop_mask(mask, region))
        if best is not None:
            row, col = best
            cx, cy = x0 + col, y0 + row
            peak = float(response[row, col])
        else:
            cx, cy = state.bbox.cx, state.bbox.cy
            peak = math.nan
        box = state.bbox.moved_to(cx, cy)
        area = nearest_component_area(mask, cx, cy)
        band = self.cfg.recover_band
        good = state.last_good_area
        if area < band * good and good < band * area:
            new = replace(state, mode=Mode.NORMAL, bbox=box, filter=state.last_good_filter,
                          prev_area=area, frame_index=index)
        else:
            new = replace(state, mode=Mode.FUSION, bbox=box, prev_area=area, frame_index=index)
        return new, TrackStep(index, box, Mode.FUSION, peak, area, region)

    def run(self, frames, user_box: BoundingBox) -> list[TrackStep]:
        frames = iter(frames)
        state, first = self.init(next(frames), user_box)
        steps = [first]
        for frame in frames:
            state, step = self.step(state, frame)
            steps.append(step)
        return steps
