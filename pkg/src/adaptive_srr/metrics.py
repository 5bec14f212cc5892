"""Image-quality metrics on the 0-255 intensity scale."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

PEAK = 255.0


def _pair(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"frame shapes differ: {a.shape} vs {b.shape}")
    return a, b


def mse(a, b) -> float:
    a, b = _pair(a, b)
    d = a - b
    return float(np.mean(d * d))


def to_db(linear_mse: float) -> float:
    """10 log10 of a linear MSE; zero maps to -inf."""
    return float("-inf") if linear_mse == 0 else 10.0 * float(np.log10(linear_mse))


def mse_db(a, b) -> float:
    return to_db(mse(a, b))


def psnr_db(a, b) -> float:
    m = mse(a, b)
    return float("inf") if m == 0 else 10.0 * float(np.log10(PEAK**2 / m))


def gaussian_window(size: int = 11, sigma: float = 1.5) -> np.ndarray:
    x = np.arange(size) - (size - 1) / 2
    g = np.exp(-(x**2) / (2 * sigma**2))
    return g / g.sum()


def ssim(a, b, *, size: int = 11, sigma: float = 1.5, k1: float = 0.01, k2: float = 0.03, data_range: float = PEAK):
    """Mean SSIM over all fully-contained Gaussian windows."""
    a, b = _pair(a, b)
    if a.shape[0] < size or a.shape[1] < size:
        raise ValueError(f"frame {a.shape} smaller than the {size}x{size} SSIM window")
    g = gaussian_window(size, sigma)
    r = size // 2

    def filt(x):
        y = ndimage.correlate1d(x, g, axis=0, mode="constant")
        y = ndimage.correlate1d(y, g, axis=1, mode="constant")
        return y[r : x.shape[0] - r, r : x.shape[1] - r]

    c1 = (k1 * data_range) ** 2
    c2 = (k2 * data_range) ** 2
    mu_a, mu_b = filt(a), filt(b)
    saa = filt(a * a) - mu_a * mu_a
    sbb = filt(b * b) - mu_b * mu_b
    sab = filt(a * b) - mu_a * mu_b
    num = (2 * mu_a * mu_b + c1) * (2 * sab + c2)
    den = (mu_a * mu_a + mu_b * mu_b + c1) * (saa + sbb + c2)
    return float(np.mean(num / den))


@dataclass(frozen=True)
class MetricsReport:
    frame_index: int
    mse_db: float
    psnr_db: float
    ssim: float

    @property
    def identical(self) -> bool:
        return self.mse_db == float("-inf")


def frame_report(frame_index: int, estimate, truth) -> MetricsReport:
    """All three metrics; SSIM is NaN for frames smaller than its window."""
    a, b = _pair(estimate, truth)
    s = ssim(a, b) if min(a.shape) >= 11 else float("nan")
    return MetricsReport(frame_index, mse_db(a, b), psnr_db(a, b), s)


def mean_mse_db(curves) -> np.ndarray:
    """Average per-frame linear MSE curves across realizations, then convert to dB."""
    arr = np.asarray(curves, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise ValueError("need a (realizations, frames) array of linear MSEs")
    # sorting first makes the sum independent of realization order
    m = np.sort(arr, axis=0).mean(axis=0)
    with np.errstate(divide="ignore"):
        return np.where(m == 0, -np.inf, 10.0 * np.log10(np.where(m == 0, 1.0, m)))
