"""SNR, MSE, PSNR and SSIM."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import ndimage

from .errors import ShapeMismatch, TooSmall, ZeroReference

PEAK = 255.0
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


def _same_shape(a, b):
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape:
        raise ShapeMismatch(f"shapes differ: {a.shape} vs {b.shape}")
    return a, b


def mse(a, b) -> float:
    a, b = _same_shape(a, b)
    return float(np.mean(np.abs(a - b) ** 2))


def snr(X, X_hat) -> float:
    """``20 log10(||X|| / ||X_hat - X||)`` in dB; ``inf`` for an exact match."""
    X, X_hat = _same_shape(X, X_hat)
    ref = np.linalg.norm(X)
    if ref == 0:
        raise ZeroReference("SNR undefined for a zero reference signal")
    err = np.linalg.norm(X_hat - X)
    if err == 0:
        return math.inf
    return float(20.0 * np.log10(ref / err))


def clamp_image(img) -> np.ndarray:
    """Real part clamped to the 8-bit range ``[0, 255]``."""
    return np.clip(np.real(np.asarray(img)), 0.0, PEAK).astype(float)


def image_mse(img, img_hat) -> float:
    return mse(clamp_image(img), clamp_image(img_hat))


def psnr_from_mse(value: float) -> float:
    if value == 0:
        return math.inf
    return float(10.0 * np.log10(PEAK ** 2 / value))


def psnr(img, img_hat) -> float:
    """``10 log10(255^2 / MSE)`` on clamped images; ``inf`` when they coincide."""
    img, img_hat = _same_shape(img, img_hat)
    return psnr_from_mse(image_mse(img, img_hat))


def _gaussian_window() -> np.ndarray:
    r = np.arange(SSIM_WINDOW) - SSIM_WINDOW // 2
    k = np.exp(-0.5 * (r / SSIM_SIGMA) ** 2)
    k /= k.sum()
    return np.outer(k, k)


def _local_mean(img, window):
    # valid region only: output shrinks by window - 1 in each direction
    full = ndimage.correlate(img, window, mode="constant")
    h = SSIM_WINDOW // 2
    return full[h:img.shape[0] - h, h:img.shape[1] - h]


def ssim(img, img_hat) -> float:
    """Mean local SSIM with an 11x11 Gaussian window (sigma 1.5) over the valid region.

    Inputs are clamped to real ``[0, 255]`` first.
    """
    img, img_hat = _same_shape(img, img_hat)
    if img.ndim != 2 or min(img.shape) < SSIM_WINDOW:
        raise TooSmall(f"SSIM needs 2-D images of at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {img.shape}")
    x, y = clamp_image(img), clamp_image(img_hat)
    if np.array_equal(x, y):
        return 1.0
    w = _gaussian_window()
    c1 = (SSIM_K1 * PEAK) ** 2
    c2 = (SSIM_K2 * PEAK) ** 2
    mx, my = _local_mean(x, w), _local_mean(y, w)
    vx = _local_mean(x * x, w) - mx * mx
    vy = _local_mean(y * y, w) - my * my
    cxy = _local_mean(x * y, w) - mx * my
    num = (2 * mx * my + c1) * (2 * cxy + c2)
    den = (mx * mx + my * my + c1) * (vx + vy + c2)
    return float(np.clip(np.mean(num / den), -1.0, 1.0))


@dataclass(frozen=True)
class MetricReport:
    mse: float
    snr_db: float
    psnr_db: float | None = None
    ssim: float | None = None

    def __post_init__(self):
        if not self.mse >= 0:
            raise ValueError("mse must be nonnegative")
        if self.ssim is not None and not -1.0 <= self.ssim <= 1.0:
            raise ValueError("ssim must lie in [-1, 1]")

    def to_dict(self) -> dict:
        # JSON has no infinity; encode it as a string sentinel
        return {k: ("inf" if isinstance(v, float) and math.isinf(v) else v)
                for k, v in asdict(self).items()}

    @classmethod
    def from_dict(cls, d: dict) -> "MetricReport":
        def num(v):
            return None if v is None else float(v)
        return cls(num(d["mse"]), num(d["snr_db"]), num(d.get("psnr_db")), num(d.get("ssim")))


def evaluate(X, X_hat, images: bool = False) -> MetricReport:
    """MSE and SNR, plus PSNR/SSIM when ``images`` is set.

    ``X`` and ``X_hat`` are signals, or sequences of frames for images.
    PSNR and SSIM are averaged over frames.
    """
    X, X_hat = _same_shape(X, X_hat)
    if not images:
        return MetricReport(mse(X, X_hat), snr(X, X_hat))
    frames = X if X.ndim == 3 else X[None]
    frames_hat = X_hat if X_hat.ndim == 3 else X_hat[None]
    ps = [psnr(a, b) for a, b in zip(frames, frames_hat)]
    ss = [ssim(a, b) for a, b in zip(frames, frames_hat)]
    return MetricReport(mse(X, X_hat), snr(X, X_hat), float(np.mean(ps)), float(np.mean(ss)))
