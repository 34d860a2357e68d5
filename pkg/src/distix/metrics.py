"""Pixel-centric quality metrics: PSNR, SSIM, and distance-map loss."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import convolve2d

from .imaging import Frame, require_same_size
from .indexing import DistanceMap

PSNR_CAP = 99.0
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


@dataclass(frozen=True)
class MetricReport:
    psnr: float
    ssim: float
    map_loss: float | None = None


def psnr(a: Frame, b: Frame) -> float:
    """Peak signal-to-noise ratio in dB on the [0, 1] range.

    Identical frames are capped at 99 dB instead of infinity.
    """
    require_same_size(a, b)
    if a.channels != b.channels:
        raise ValueError("frames must have the same channel count")
    mse = float(np.mean((a.data - b.data) ** 2))
    if mse == 0.0:
        return PSNR_CAP
    return min(PSNR_CAP, 10.0 * np.log10(1.0 / mse))


def _gaussian_window(size: int, sigma: float) -> np.ndarray:
    half = (size - 1) / 2.0
    xs = np.arange(size) - half
    g = np.exp(-(xs**2) / (2.0 * sigma**2))
    g /= g.sum()
    return np.outer(g, g)


def _luma(frame: Frame) -> np.ndarray:
    return frame.data.mean(axis=2)


def ssim(a: Frame, b: Frame) -> float:
    """Mean structural similarity with the canonical 11x11 Gaussian
    window (sigma 1.5, K1=0.01, K2=0.03, dynamic range 1).

    RGB inputs are reduced to luma (channel mean).  Statistics are
    computed over fully covered windows only.
    """
    require_same_size(a, b)
    if min(a.height, a.width) < SSIM_WINDOW:
        raise ValueError(f"image too small for SSIM: need min dimension >= {SSIM_WINDOW}")
    x = _luma(a)
    y = _luma(b)
    win = _gaussian_window(SSIM_WINDOW, SSIM_SIGMA)

    def filt(img):
        return convolve2d(img, win, mode="valid")

    mu_x = filt(x)
    mu_y = filt(y)
    sigma_x = filt(x * x) - mu_x * mu_x
    sigma_y = filt(y * y) - mu_y * mu_y
    sigma_xy = filt(x * y) - mu_x * mu_y

    c1 = SSIM_K1**2
    c2 = SSIM_K2**2
    num = (2.0 * mu_x * mu_y + c1) * (2.0 * sigma_xy + c2)
    den = (mu_x * mu_x + mu_y * mu_y + c1) * (sigma_x + sigma_y + c2)
    return float(np.mean(num / den))


def map_loss(d: DistanceMap, d_ref: DistanceMap) -> float:
    """Mean squared difference between two distance maps."""
    require_same_size(d, d_ref)
    return float(np.mean((d.data - d_ref.data) ** 2))
