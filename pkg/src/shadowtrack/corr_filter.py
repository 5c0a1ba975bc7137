"""Fourier-domain correlation filter (minimum output sum of squared error).

The filter is kept as the two accumulators of its closed form,
``numerator = sum(G * conj(F))`` and ``denominator = sum(F * conj(F)) + eps``,
so that ``conj(H) = numerator / denominator``. Correlating a patch ``P`` gives
``real(ifft2(fft2(P) * conj(H)))``, which peaks where the target sits in ``P``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from scipy import ndimage

from .imaging import BoundingBox, as_frame, extract_patch

fft2 = np.fft.fft2
ifft2 = np.fft.ifft2


@dataclass(frozen=True)
class FilterConfig:
    sigma: float = 2.0
    eps: float = 1e-3
    learning_rate: float = 0.125
    n_aug: int = 8
    max_rotation_deg: float = 5.0
    max_shift: float = 2.0
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.learning_rate <= 1:
            raise ValueError(f"learning_rate must lie in [0, 1], got {self.learning_rate}")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.eps < 0:
            raise ValueError("eps must be non-negative")


@dataclass(frozen=True)
class CorrelationFilter:
    numerator: np.ndarray
    denominator: np.ndarray
    learning_rate: float = 0.125
    sigma: float = 2.0
    eps: float = 1e-3

    @property
    def shape(self) -> tuple[int, int]:
        return self.numerator.shape

    @property
    def fh(self) -> int:
        return self.numerator.shape[0]

    @property
    def fw(self) -> int:
        return self.numerator.shape[1]

    def conj_transfer(self) -> np.ndarray:
        """``conj(H)`` in the frequency domain."""
        return self.numerator / self.denominator


@dataclass(frozen=True)
class CorrelationMap:
    response: np.ndarray
    origin: tuple[int, int]

    def peak(self) -> tuple[int, int]:
        """Index ``(row, col)`` of the maximum response."""
        return np.unravel_index(int(np.argmax(self.response)), self.response.shape)


def even(n: float) -> int:
    n = max(int(round(n)), 2)
    return n + (n % 2)


def hann2d(shape: tuple[int, int]) -> np.ndarray:
    return _hann2d(int(shape[0]), int(shape[1]))


@lru_cache(maxsize=16)
def _hann2d(h: int, w: int) -> np.ndarray:
    window = np.outer(np.hanning(h), np.hanning(w))
    window.setflags(write=False)
    return window


def preprocess(patch: np.ndarray) -> np.ndarray:
    """Log transform, zero mean / unit norm, then a Hann window."""
    patch = as_frame(patch)
    if patch.shape[0] < 2 or patch.shape[1] < 2:
        raise ValueError(f"patch must be at least 2x2, got {patch.shape}")
    x = np.log1p(patch)
    x = x - x.mean()
    norm = np.linalg.norm(x)
    # a flat patch leaves only rounding residue after centering
    if norm <= 1e-12 * x.size:
        x = np.zeros_like(x)
    else:
        x = x / norm
    return x * hann2d(x.shape)


def gaussian_response(shape: tuple[int, int], center: tuple[float, float], sigma: float) -> np.ndarray:
    """Gaussian peak of height 1 at ``center = (row, col)``."""
    rows = np.arange(shape[0])[:, None] - center[0]
    cols = np.arange(shape[1])[None, :] - center[1]
    return np.exp(-(rows**2 + cols**2) / (2 * sigma**2))


def patch_center(shape: tuple[int, int]) -> tuple[int, int]:
    return shape[0] // 2, shape[1] // 2


def closed_form(patches_hat, targets_hat, eps: float) -> tuple[np.ndarray, np.ndarray]:
    """Averaged accumulators for spectra ``patches_hat`` and desired outputs ``targets_hat``."""
    num = np.zeros_like(patches_hat[0], dtype=np.complex128)
    den = np.zeros_like(patches_hat[0], dtype=np.complex128)
    for f_hat, g_hat in zip(patches_hat, targets_hat):
        num += g_hat * np.conj(f_hat)
        den += f_hat * np.conj(f_hat) + eps
    n = len(patches_hat)
    return num / n, den / n


def sse_objective(conj_h: np.ndarray, patches_hat, targets_hat, eps: float = 0.0) -> float:
    """Squared output error of ``conj_h`` over all pairs, plus the ``eps`` ridge term."""
    total = 0.0
    for f_hat, g_hat in zip(patches_hat, targets_hat):
        total += float(np.sum(np.abs(f_hat * conj_h - g_hat) ** 2))
        total += eps * float(np.sum(np.abs(conj_h) ** 2))
    return total


def _perturbed(raw: np.ndarray, angle_deg: float, shift: tuple[float, float]) -> np.ndarray:
    """Rotate ``raw`` about its center, then translate by ``shift = (dy, dx)``."""
    theta = math.radians(angle_deg)
    rot = np.array([[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]])
    center = np.array(patch_center(raw.shape), dtype=float)
    # output pixel o samples input rot @ (o - center - shift) + center
    offset = center - rot @ (center + np.asarray(shift))
    return ndimage.affine_transform(raw, rot, offset=offset, order=1, mode="nearest")


def search_region(target: BoundingBox, padding: float) -> BoundingBox:
    """Even-sized region of ``padding`` times the target dims around its center."""
    return BoundingBox(target.cx, target.cy, even(target.w * padding), even(target.h * padding))


def init_filter(frame: np.ndarray, target: BoundingBox, cfg: FilterConfig = FilterConfig(),
                padding: float = 2.0) -> CorrelationFilter:
    """Train a filter on the padded patch around ``target``.

    The unperturbed patch plus ``cfg.n_aug`` randomly rotated and shifted
    copies are averaged into the accumulators; the desired output follows each
    copy's shift.
    """
    if target.w < 4 or target.h < 4:
        raise ValueError(f"target must be at least 4x4, got {target.w}x{target.h}")
    raw = extract_patch(frame, search_region(target, padding))
    rng = np.random.default_rng(cfg.seed)
    center = patch_center(raw.shape)
    patches, targets = [raw], [gaussian_response(raw.shape, center, cfg.sigma)]
    for _ in range(cfg.n_aug):
        angle = rng.uniform(-cfg.max_rotation_deg, cfg.max_rotation_deg)
        dy, dx = rng.uniform(-cfg.max_shift, cfg.max_shift, size=2)
        patches.append(_perturbed(raw, angle, (dy, dx)))
        targets.append(gaussian_response(raw.shape, (center[0] + dy, center[1] + dx), cfg.sigma))
    num, den = closed_form(
        [fft2(preprocess(p)) for p in patches], [fft2(g) for g in targets], cfg.eps
    )
    return CorrelationFilter(num, den, cfg.learning_rate, cfg.sigma, cfg.eps)


def _embed_kernel(kernel: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    """Zero-pad an origin-centered (wrap-around) kernel to a larger ``shape``."""
    kh, kw = kernel.shape
    H, W = shape
    rows = np.arange(kh)
    cols = np.arange(kw)
    rows = np.where(rows < (kh + 1) // 2, rows, rows - kh + H)
    cols = np.where(cols < (kw + 1) // 2, cols, cols - kw + W)
    out = np.zeros(shape, dtype=kernel.dtype)
    out[np.ix_(rows, cols)] = kernel
    return out


def transfer_at(h: CorrelationFilter, shape: tuple[int, int]) -> np.ndarray:
    """``conj(H)`` evaluated on a grid of ``shape`` (>= the filter's own)."""
    conj_h = h.conj_transfer()
    if tuple(shape) == h.shape:
        return conj_h
    return fft2(_embed_kernel(ifft2(conj_h), shape))


def correlate(h: CorrelationFilter, patch: np.ndarray, origin: tuple[int, int] = (0, 0)) -> CorrelationMap:
    """Response of ``h`` over ``patch``; ``origin`` is the patch's (x, y) in the frame."""
    patch = as_frame(patch)
    if patch.shape[0] < h.fh or patch.shape[1] < h.fw:
        raise ValueError(f"patch {patch.shape} is smaller than the filter {h.shape}")
    response = np.real(ifft2(fft2(preprocess(patch)) * transfer_at(h, patch.shape)))
    return CorrelationMap(response, origin)


def update_filter(h: CorrelationFilter, patch: np.ndarray, peak: tuple[float, float]) -> CorrelationFilter:
    """Running-average update on ``patch`` with the desired peak at ``peak = (row, col)``."""
    patch = as_frame(patch)
    if patch.shape != h.shape:
        raise ValueError(f"patch {patch.shape} does not match the filter {h.shape}")
    eta = h.learning_rate
    if eta == 0:
        return h
    f_hat = fft2(preprocess(patch))
    g_hat = fft2(gaussian_response(patch.shape, peak, h.sigma))
    num = (1 - eta) * h.numerator + eta * (g_hat * np.conj(f_hat))
    den = (1 - eta) * h.denominator + eta * (f_hat * np.conj(f_hat) + h.eps)
    return replace(h, numerator=num, denominator=den)
