"""Pixel-level primitives: frame I/O, integral images, morphology, components.

Frames are plain 2D ``float64`` numpy arrays of shape ``(height, width)`` with
intensities in ``[0, 255]``. Masks are 2D ``bool`` arrays. Pixel ``(x, y)`` has
its center at integer coordinates, so a box of width ``w`` centered on ``cx``
covers the pixel centers in ``[cx - w/2, cx + w/2)``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image
from scipy import ndimage

LUMA_WEIGHTS = (0.299, 0.587, 0.114)
FRAME_PATTERN = re.compile(r"^frame_(\d{6})\.(png|pgm)$")

_EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)


class FrameIOError(OSError):
    """Raised when a frame file cannot be read or written."""


@dataclass(frozen=True)
class BoundingBox:
    cx: float
    cy: float
    w: float
    h: float

    def __post_init__(self):
        if not (self.w >= 1 and self.h >= 1):
            raise ValueError(f"box dimensions must be >= 1, got {self.w}x{self.h}")

    @property
    def area(self) -> float:
        return self.w * self.h

    @property
    def extent(self) -> tuple[float, float, float, float]:
        """Half-open extent ``(x0, y0, x1, y1)``."""
        return (
            self.cx - self.w / 2,
            self.cy - self.h / 2,
            self.cx + self.w / 2,
            self.cy + self.h / 2,
        )

    def moved_to(self, cx: float, cy: float) -> BoundingBox:
        return BoundingBox(cx, cy, self.w, self.h)

    def scaled(self, factor: float) -> BoundingBox:
        return BoundingBox(self.cx, self.cy, self.w * factor, self.h * factor)

    def pixel_origin(self) -> tuple[int, int, int, int]:
        """First pixel column/row and the integer pixel dims covered by the box."""
        w = int(round(self.w))
        h = int(round(self.h))
        x0 = math.ceil(self.cx - w / 2)
        y0 = math.ceil(self.cy - h / 2)
        return x0, y0, w, h


@dataclass(frozen=True)
class Component:
    pixel_count: int
    centroid: tuple[float, float]
    bbox: BoundingBox


def as_frame(data) -> np.ndarray:
    frame = np.asarray(data, dtype=np.float64)
    if frame.ndim != 2 or frame.shape[0] < 1 or frame.shape[1] < 1:
        raise ValueError(f"a frame must be a non-empty 2D array, got shape {frame.shape}")
    return frame


def to_luma(rgb: np.ndarray) -> np.ndarray:
    rgb = np.asarray(rgb, dtype=np.float64)
    r, g, b = LUMA_WEIGHTS
    return r * rgb[..., 0] + g * rgb[..., 1] + b * rgb[..., 2]


def load_frame(path) -> np.ndarray:
    """Read an 8-bit grayscale or RGB PNG/PGM file as a real-valued frame."""
    path = Path(path)
    try:
        with Image.open(path) as img:
            img.load()
            mode = img.mode
            if mode == "L":
                return np.asarray(img, dtype=np.float64)
            if mode == "RGB":
                return to_luma(np.asarray(img))
    except FileNotFoundError as exc:
        raise FrameIOError(f"{path}: no such file") from exc
    except (OSError, ValueError) as exc:
        raise FrameIOError(f"{path}: unreadable image ({exc})") from exc
    raise FrameIOError(
        f"{path}: unsupported pixel format {mode!r}; expected 8-bit grayscale or RGB"
    )


def to_uint8(frame: np.ndarray) -> np.ndarray:
    return np.clip(np.rint(frame), 0, 255).astype(np.uint8)


def save_frame(path, frame: np.ndarray) -> None:
    """Write a gray frame (or an ``(h, w, 3)`` RGB array) as PNG or binary PGM."""
    path = Path(path)
    suffix = path.suffix.lower()
    arr = to_uint8(frame)
    if suffix == ".pgm" and arr.ndim != 2:
        raise FrameIOError(f"{path}: PGM output must be single-channel")
    if suffix not in (".png", ".pgm"):
        raise FrameIOError(f"{path}: unsupported extension {suffix!r}")
    try:
        Image.fromarray(arr).save(path, format="PNG" if suffix == ".png" else "PPM")
    except OSError as exc:
        raise FrameIOError(f"{path}: cannot write ({exc})") from exc


def save_mask(path, mask: np.ndarray) -> None:
    save_frame(path, np.where(mask, 255.0, 0.0))


def frame_name(index: int, ext: str = "png") -> str:
    return f"frame_{index:06d}.{ext}"


def list_frames(directory) -> list[Path]:
    """Frame files of a sequence directory in lexicographic order."""
    directory = Path(directory)
    if not directory.is_dir():
        raise FrameIOError(f"{directory}: not a directory")
    return sorted(p for p in directory.iterdir() if FRAME_PATTERN.match(p.name))


def integral_image(frame: np.ndarray) -> np.ndarray:
    """Summed-area table with one leading zero row and column.

    ``ii[y, x]`` is the sum of ``frame[:y, :x]``.
    """
    frame = as_frame(frame)
    h, w = frame.shape
    ii = np.zeros((h + 1, w + 1), dtype=np.float64)
    np.cumsum(frame, axis=0, out=ii[1:, 1:])
    np.cumsum(ii[1:, 1:], axis=1, out=ii[1:, 1:])
    return ii


def rect_sum(ii: np.ndarray, x0: int, y0: int, x1: int, y1: int) -> float:
    return ii[y1, x1] - ii[y0, x1] - ii[y1, x0] + ii[y0, x0]


def rect_mean(ii: np.ndarray, rect: BoundingBox) -> float:
    """Mean intensity over ``rect`` clamped to the image."""
    height, width = ii.shape[0] - 1, ii.shape[1] - 1
    x0, y0, w, h = rect.pixel_origin()
    x1, y1 = min(x0 + w, width), min(y0 + h, height)
    x0, y0 = max(x0, 0), max(y0, 0)
    if x1 <= x0 or y1 <= y0:
        raise ValueError(f"{rect} lies entirely outside the {width}x{height} image")
    return rect_sum(ii, x0, y0, x1, y1) / ((x1 - x0) * (y1 - y0))


def _shifted_views(mask: np.ndarray, fill: bool):
    h, w = mask.shape
    padded = np.pad(mask, 1, constant_values=fill)
    for dy in range(3):
        for dx in range(3):
            yield padded[dy : dy + h, dx : dx + w]


def erode(mask: np.ndarray) -> np.ndarray:
    """3x3 erosion; pixels outside the mask count as background."""
    mask = np.asarray(mask, dtype=bool)
    out = np.ones_like(mask)
    for view in _shifted_views(mask, False):
        out &= view
    return out


def dilate(mask: np.ndarray) -> np.ndarray:
    """3x3 dilation; pixels outside the mask count as background."""
    mask = np.asarray(mask, dtype=bool)
    out = np.zeros_like(mask)
    for view in _shifted_views(mask, False):
        out |= view
    return out


def label_components(mask: np.ndarray) -> tuple[np.ndarray, int]:
    """8-connected labeling; label 0 is background."""
    return ndimage.label(np.asarray(mask, dtype=bool), structure=_EIGHT_CONNECTED)


def component_stats(mask: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Pixel counts and centroid x, y of every component, indexed by label - 1."""
    labels, n = label_components(mask)
    if n == 0:
        empty = np.zeros(0)
        return empty.astype(np.int64), empty, empty
    ys, xs = np.nonzero(labels)
    ids = labels[ys, xs]
    counts = np.bincount(ids, minlength=n + 1)[1:]
    sx = np.bincount(ids, weights=xs, minlength=n + 1)[1:]
    sy = np.bincount(ids, weights=ys, minlength=n + 1)[1:]
    return counts, sx / counts, sy / counts


def connected_components(mask: np.ndarray) -> list[Component]:
    labels, n = label_components(mask)
    if n == 0:
        return []
    ys, xs = np.nonzero(labels)
    ids = labels[ys, xs]
    counts = np.bincount(ids, minlength=n + 1)
    sx = np.bincount(ids, weights=xs, minlength=n + 1)
    sy = np.bincount(ids, weights=ys, minlength=n + 1)
    components = []
    for i, sl in enumerate(ndimage.find_objects(labels), start=1):
        ysl, xsl = sl
        box = BoundingBox(
            (xsl.start + xsl.stop - 1) / 2,
            (ysl.start + ysl.stop - 1) / 2,
            xsl.stop - xsl.start,
            ysl.stop - ysl.start,
        )
        count = int(counts[i])
        components.append(Component(count, (sx[i] / count, sy[i] / count), box))
    return components


def extract_patch(frame: np.ndarray, region: BoundingBox) -> np.ndarray:
    """Copy ``region`` out of ``frame``, replicating edge pixels past the border."""
    x0, y0, w, h = region.pixel_origin()
    rows = np.clip(np.arange(y0, y0 + h), 0, frame.shape[0] - 1)
    cols = np.clip(np.arange(x0, x0 + w), 0, frame.shape[1] - 1)
    return frame[np.ix_(rows, cols)]


def crop_mask(mask: np.ndarray, region: BoundingBox) -> np.ndarray:
    """Like :func:`extract_patch` but pixels outside the mask are background."""
    x0, y0, w, h = region.pixel_origin()
    out = np.zeros((h, w), dtype=bool)
    H, W = mask.shape
    sx0, sy0 = max(x0, 0), max(y0, 0)
    sx1, sy1 = min(x0 + w, W), min(y0 + h, H)
    if sx1 > sx0 and sy1 > sy0:
        out[sy0 - y0 : sy1 - y0, sx0 - x0 : sx1 - x0] = mask[sy0:sy1, sx0:sx1]
    return out
