"""Scalar image/tensor metrics. All reductions are means, accumulated in float64."""

import numpy as np

PSNR_CAP_DB = 99.0


def _pair(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a, b


def mse(a, b) -> float:
    a, b = _pair(a, b)
    return float(np.mean((a - b) ** 2))


def l1_mean(a, b) -> float:
    a, b = _pair(a, b)
    return float(np.mean(np.abs(a - b)))


def rms(a, b=None) -> float:
    """Root mean square of ``a`` (or of ``a - b``)."""
    if b is None:
        a = np.asarray(a, dtype=np.float64)
        return float(np.sqrt(np.mean(a * a)))
    return float(np.sqrt(mse(a, b)))


def psnr(a, b) -> float:
    """Peak signal-to-noise ratio in dB for images with peak value 1."""
    err = mse(a, b)
    if err == 0.0:
        return PSNR_CAP_DB
    return min(PSNR_CAP_DB, float(10.0 * np.log10(1.0 / err)))
