"""Deterministic synthetic aerial-shadow sequences with ground truth.

Shadows are multiplicative: inside a shadow's (optionally blurred) support the
ground intensity is scaled by its attenuation factor. Frames are quantized to
integers so that writing them to 8-bit files and reading them back is lossless.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import ndimage

from .imaging import BoundingBox

BACKGROUND_KINDS = ("flat", "noise", "tiles")
SHAPES = ("rect", "ellipse")

Point = tuple[float, float]


@dataclass
class Background:
    kind: str = "flat"
    base: float = 200.0
    amplitude: float = 0.0
    scale: float = 8.0

    def __post_init__(self):
        if self.kind not in BACKGROUND_KINDS:
            raise ValueError(f"unknown background kind {self.kind!r}; expected one of {BACKGROUND_KINDS}")


@dataclass
class Target:
    axes: Point = (10.0, 6.0)
    attenuation: float = 0.4
    blur_sigma: float = 1.0
    path: list[Point] = field(default_factory=list)

    def __post_init__(self):
        if not 0 < self.attenuation < 1:
            raise ValueError("target attenuation must lie in (0, 1)")
        if not self.path:
            raise ValueError("target path needs at least one waypoint")


@dataclass
class Distractor:
    """A dark rectangle or ellipse; ``size`` is its full width and height."""

    shape: str = "rect"
    size: Point = (40.0, 40.0)
    attenuation: float = 0.2
    path: list[Point] = field(default_factory=list)
    blur_sigma: float = 0.0

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ValueError(f"unknown distractor shape {self.shape!r}; expected one of {SHAPES}")
        if not 0 <= self.attenuation < 1:
            raise ValueError("distractor attenuation must lie in [0, 1)")
        if not self.path:
            raise ValueError("distractor path needs at least one waypoint")


@dataclass
class ScenarioSpec:
    width: int = 640
    height: int = 360
    n_frames: int = 100
    background: Background = field(default_factory=Background)
    target: Target = field(default_factory=lambda: Target(path=[(320.0, 180.0)]))
    distractors: list[Distractor] = field(default_factory=list)
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.n_frames < 2:
            raise ValueError("a scenario needs at least 2 frames")
        if self.width < 1 or self.height < 1:
            raise ValueError("frame dims must be positive")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> ScenarioSpec:
        d = dict(d)
        target = dict(d.pop("target"))
        target["axes"] = tuple(target["axes"])
        target["path"] = [tuple(p) for p in target["path"]]
        distractors = []
        for item in d.pop("distractors", []):
            item = dict(item)
            item["size"] = tuple(item["size"])
            item["path"] = [tuple(p) for p in item["path"]]
            distractors.append(Distractor(**item))
        return cls(
            background=Background(**d.pop("background", {})),
            target=Target(**target),
            distractors=distractors,
            **d,
        )


@dataclass
class GroundTruth:
    boxes: list[BoundingBox]
    areas: list[int]

    def __len__(self):
        return len(self.boxes)


def path_position(path: list[Point], t: int, n_frames: int) -> Point:
    """Constant-speed position along the polyline ``path`` at frame ``t``."""
    if len(path) == 1:
        return path[0]
    pts = np.asarray(path, dtype=float)
    seg = np.hypot(*np.diff(pts, axis=0).T)
    total = seg.sum()
    if total == 0:
        return path[0]
    d = total * t / (n_frames - 1)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    i = min(int(np.searchsorted(cum, d, side="right")) - 1, len(seg) - 1)
    frac = (d - cum[i]) / seg[i] if seg[i] > 0 else 0.0
    x, y = pts[i] + frac * (pts[i + 1] - pts[i])
    return float(x), float(y)


def target_box(spec: ScenarioSpec, t: int) -> BoundingBox:
    cx, cy = path_position(spec.target.path, t, spec.n_frames)
    a, b = spec.target.axes
    return BoundingBox(cx, cy, 2 * a, 2 * b)


def distractor_box(d: Distractor, t: int, n_frames: int) -> BoundingBox:
    cx, cy = path_position(d.path, t, n_frames)
    return BoundingBox(cx, cy, d.size[0], d.size[1])


def validate(spec: ScenarioSpec) -> None:
    a, b = spec.target.axes
    for x, y in spec.target.path:
        if x - a < 0 or y - b < 0 or x + a > spec.width - 1 or y + b > spec.height - 1:
            raise ValueError(
                f"target path leaves the {spec.width}x{spec.height} frame at waypoint ({x}, {y})"
            )


def render_background(spec: ScenarioSpec) -> np.ndarray:
    bg = spec.background
    shape = (spec.height, spec.width)
    rng = np.random.default_rng([spec.seed, 0])
    if bg.kind == "flat":
        img = np.full(shape, float(bg.base))
    elif bg.kind == "noise":
        field_ = ndimage.gaussian_filter(rng.standard_normal(shape), bg.scale / 4, mode="wrap")
        field_ /= field_.std() or 1.0
        img = bg.base + bg.amplitude * field_
    else:
        tile = max(int(bg.scale), 1)
        ny, nx = -(-shape[0] // tile), -(-shape[1] // tile)
        levels = bg.base + bg.amplitude * rng.uniform(-1, 1, size=(ny, nx))
        img = np.kron(levels, np.ones((tile, tile)))[: shape[0], : shape[1]]
    return np.clip(img, 0, 255).astype(np.float64)


def _support(shape_kind: str, cx: float, cy: float, size: Point, blur: float,
             frame_shape: tuple[int, int]):
    """Local ``(slices, support)`` of a shape; support is in [0, 1]."""
    hw, hh = size[0] / 2, size[1] / 2
    margin = int(math.ceil(4 * blur)) + 1
    H, W = frame_shape
    x0 = max(int(math.floor(cx - hw)) - margin, 0)
    x1 = min(int(math.ceil(cx + hw)) + margin + 1, W)
    y0 = max(int(math.floor(cy - hh)) - margin, 0)
    y1 = min(int(math.ceil(cy + hh)) + margin + 1, H)
    if x1 <= x0 or y1 <= y0:
        return None, None
    ys = np.arange(y0, y1)[:, None]
    xs = np.arange(x0, x1)[None, :]
    if shape_kind == "ellipse":
        inside = ((xs - cx) / hw) ** 2 + ((ys - cy) / hh) ** 2 <= 1.0
    else:
        inside = (xs >= cx - hw) & (xs < cx + hw) & (ys >= cy - hh) & (ys < cy + hh)
    support = inside.astype(float)
    if blur > 0:
        support = ndimage.gaussian_filter(support, blur, mode="constant")
    return (slice(y0, y1), slice(x0, x1)), support


def _apply_shadow(img, shape_kind, cx, cy, size, attenuation, blur):
    sl, support = _support(shape_kind, cx, cy, size, blur, img.shape)
    if sl is not None:
        img[sl] *= 1.0 - (1.0 - attenuation) * support


def target_area(spec: ScenarioSpec, t: int) -> int:
    """Pixel count of the unblurred target ellipse at frame ``t``."""
    cx, cy = path_position(spec.target.path, t, spec.n_frames)
    a, b = spec.target.axes
    _, support = _support("ellipse", cx, cy, (2 * a, 2 * b), 0.0, (spec.height, spec.width))
    return 0 if support is None else int(support.sum())


def render_frame(spec: ScenarioSpec, t: int, background: np.ndarray | None = None) -> np.ndarray:
    img = (render_background(spec) if background is None else background).copy()
    for d in spec.distractors:
        cx, cy = path_position(d.path, t, spec.n_frames)
        _apply_shadow(img, d.shape, cx, cy, d.size, d.attenuation, d.blur_sigma)
    tg = spec.target
    cx, cy = path_position(tg.path, t, spec.n_frames)
    _apply_shadow(img, "ellipse", cx, cy, (2 * tg.axes[0], 2 * tg.axes[1]), tg.attenuation, tg.blur_sigma)
    if spec.noise_sigma > 0:
        rng = np.random.default_rng([spec.seed, 1, t])
        img += spec.noise_sigma * rng.standard_normal(img.shape)
    return np.clip(np.rint(img), 0, 255)


def generate(spec: ScenarioSpec) -> tuple[list[np.ndarray], GroundTruth]:
    validate(spec)
    background = render_background(spec)
    frames = [render_frame(spec, t, background) for t in range(spec.n_frames)]
    gt = GroundTruth(
        [target_box(spec, t) for t in range(spec.n_frames)],
        [target_area(spec, t) for t in range(spec.n_frames)],
    )
    return frames, gt


def _boxes_overlap(a: BoundingBox, b: BoundingBox) -> bool:
    ax0, ay0, ax1, ay1 = a.extent
    bx0, by0, bx1, by1 = b.extent
    return min(ax1, bx1) > max(ax0, bx0) and min(ay1, by1) > max(ay0, by0)


def crossing_frames(spec: ScenarioSpec) -> list[int]:
    """Frames in which the target box overlaps some distractor box."""
    return [
        t
        for t in range(spec.n_frames)
        if any(_boxes_overlap(target_box(spec, t), distractor_box(d, t, spec.n_frames))
               for d in spec.distractors)
    ]


def _flat_easy(w: int, h: int) -> dict:
    return dict(
        background=Background("flat", 200.0),
        target=Target(path=[(0.25 * w, 0.5 * h), (0.7 * w, 0.4 * h)]),
        distractors=[],
    )


def _dark_crossing(w: int, h: int) -> dict:
    # a full-height near-black strip across the path, like a shadow sliding over a dark laptop
    return dict(
        background=Background("flat", 200.0),
        target=Target(attenuation=0.4, path=[(0.25 * w, 0.5 * h), (0.625 * w, 0.5 * h)]),
        distractors=[Distractor("rect", (0.1 * w, float(h)), 0.15, [(0.4375 * w, 0.5 * h)])],
    )


def _textured(w: int, h: int) -> dict:
    return dict(
        background=Background("noise", 160.0, amplitude=24.0, scale=4.0),
        target=Target(attenuation=0.3, path=[(0.2 * w, 0.6 * h), (0.5 * w, 0.4 * h), (0.75 * w, 0.55 * h)]),
        distractors=[],
    )


def _moving_distractor(w: int, h: int) -> dict:
    return dict(
        background=Background("flat", 200.0),
        target=Target(path=[(0.25 * w, 0.5 * h), (0.75 * w, 0.5 * h)]),
        distractors=[Distractor("ellipse", (24.0, 36.0), 0.4, [(0.5 * w, 0.15 * h), (0.5 * w, 0.85 * h)],
                                blur_sigma=1.0)],
    )


PRESETS = {
    "flat_easy": _flat_easy,
    "dark_crossing": _dark_crossing,
    "textured": _textured,
    "moving_distractor": _moving_distractor,
}


def preset(name: str, width: int = 640, height: int = 360, n_frames: int = 100,
           seed: int = 0, noise_sigma: float = 2.0) -> ScenarioSpec:
    """A named scenario; geometry scales with the frame size."""
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; available presets: {', '.join(PRESETS)}")
    return ScenarioSpec(width=width, height=height, n_frames=n_frames, noise_sigma=noise_sigma,
                        seed=seed, **PRESETS[name](width, height))
