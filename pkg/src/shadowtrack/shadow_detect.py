"""Adaptive-threshold shadow detection.

A pixel is shadow when it is darker than a fixed fraction of the mean intensity
of the square window centered on it. Window means come from an integral image,
so the cost does not depend on the window size.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .imaging import as_frame, dilate, erode, integral_image


@dataclass(frozen=True)
class ShadowDetectorConfig:
    window: int = 16
    threshold_factor: float = 0.85

    def __post_init__(self):
        if self.window < 2:
            raise ValueError(f"window must be >= 2, got {self.window}")
        if not 0 < self.threshold_factor < 1:
            raise ValueError(f"threshold_factor must lie in (0, 1), got {self.threshold_factor}")


def window_means(frame: np.ndarray, window: int) -> np.ndarray:
    """Mean of the ``window``-sided square around every pixel, clamped at borders.

    The window of pixel ``i`` spans ``[i - window//2, i - window//2 + window)``.
    """
    frame = as_frame(frame)
    h, w = frame.shape
    ii = integral_image(frame)
    lo, hi = window // 2, window - window // 2
    # edge-padding the table clamps every window to the image
    padded = np.pad(ii, ((lo, hi), (lo, hi)), mode="edge")
    cols = padded[:, window : window + w] - padded[:, :w]
    sums = cols[window : window + h] - cols[:h]
    return sums / _window_counts(h, w, window)


@lru_cache(maxsize=8)
def _window_counts(h: int, w: int, window: int) -> np.ndarray:
    """Pixel count of every clamped window."""
    lo = window // 2
    y = np.arange(h)
    x = np.arange(w)
    counts = np.outer(
        np.minimum(y - lo + window, h) - np.maximum(y - lo, 0),
        np.minimum(x - lo + window, w) - np.maximum(x - lo, 0),
    ).astype(np.float64)
    counts.setflags(write=False)
    return counts


def detect_shadows(frame: np.ndarray, cfg: ShadowDetectorConfig = ShadowDetectorConfig()) -> np.ndarray:
    frame = as_frame(frame)
    return frame < cfg.threshold_factor * window_means(frame, cfg.window)


def clean_mask(mask: np.ndarray) -> np.ndarray:
    """Morphological opening with the 3x3 kernel."""
    return dilate(erode(mask))


def shadow_mask(frame: np.ndarray, cfg: ShadowDetectorConfig = ShadowDetectorConfig()) -> np.ndarray:
    """Detected and cleaned shadow mask, the one the tracker consumes."""
    return clean_mask(detect_shadows(frame, cfg))
