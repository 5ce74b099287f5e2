"""Interpolated (non-invertible) rotations by inverse warping.

Grid sites sit at integer indices and rotations are about the geometric
center ``(n - 1) / 2``. Samples falling outside the grid read as zero.
Interpolation runs in float64; results are cast back to the input dtype.
"""

from __future__ import annotations

import math
from functools import lru_cache
from itertools import product

import numpy as np


def cos_sin_deg(theta: float) -> tuple[float, float]:
    """cos/sin of an angle in degrees, exact at multiples of 90."""
    r = math.fmod(float(theta), 360.0)
    if r < 0:
        r += 360.0
    exact = {0.0: (1.0, 0.0), 90.0: (0.0, 1.0), 180.0: (-1.0, 0.0), 270.0: (0.0, -1.0)}
    if r in exact:
        return exact[r]
    rad = math.radians(theta)
    return math.cos(rad), math.sin(rad)


def rotmat2(theta: float) -> np.ndarray:
    """[[cos, sin], [-sin, cos]]; maps output coordinates to source coordinates."""
    c, s = cos_sin_deg(theta)
    return np.array([[c, s], [-s, c]])


def _plane_rotation(theta: float, i: int, j: int) -> np.ndarray:
    # active rotation in the (i, j) coordinate plane: (x, y) -> (x c - y s, x s + y c)
    c, s = cos_sin_deg(theta)
    m = np.eye(3)
    m[i, i], m[i, j], m[j, i], m[j, j] = c, -s, s, c
    return m


def rotmat3_from_elev_azim(elev: float, azim: float) -> np.ndarray:
    """Forward point map on (depth, height, width) coordinates.

    Elevation turns the (depth, height) plane, then azimuth turns the
    (depth, width) plane, the same composition the shear path uses.
    """
    return _plane_rotation(azim, 0, 2) @ _plane_rotation(elev, 0, 1)


def check_rotation(r: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    r = np.asarray(r, dtype=np.float64)
    if r.shape != (3, 3):
        raise ValueError(f"rotation matrix must be 3x3, got {r.shape}")
    if not np.all(np.isfinite(r)):
        raise ValueError("rotation matrix has non-finite entries")
    if np.max(np.abs(r.T @ r - np.eye(3))) > tol or abs(np.linalg.det(r) - 1.0) > tol:
        raise ValueError("matrix is not a proper rotation")
    return r


def _interp_table(src: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Corner indices and weights for multilinear interpolation.

    ``src`` has shape (m, dim) in index coordinates. Returns flat indices and
    weights of shape (2**dim, m); out-of-grid corners get weight 0.
    """
    m, dim = src.shape
    base = np.floor(src)
    frac = src - base
    base = base.astype(np.int64)
    strides = [n ** (dim - 1 - a) for a in range(dim)]
    idx = np.zeros((2 ** dim, m), dtype=np.int64)
    wts = np.ones((2 ** dim, m))
    for k, corner in enumerate(product((0, 1), repeat=dim)):
        inside = np.ones(m, dtype=bool)
        for a, bit in enumerate(corner):
            coord = base[:, a] + bit
            inside &= (coord >= 0) & (coord < n)
            idx[k] += np.clip(coord, 0, n - 1) * strides[a]
            wts[k] *= frac[:, a] if bit else 1.0 - frac[:, a]
        wts[k] = np.where(inside, wts[k], 0.0)
    return idx, wts


def _grid_points(n: int, dim: int) -> np.ndarray:
    c = (n - 1) / 2.0
    axes = np.meshgrid(*([np.arange(n, dtype=np.float64) - c] * dim), indexing="ij")
    return np.stack([a.reshape(-1) for a in axes], axis=1)


@lru_cache(maxsize=1024)
def _table2d(n: int, theta: float):
    p = _grid_points(n, 2)
    src = p @ rotmat2(theta).T + (n - 1) / 2.0
    return _interp_table(src, n)


@lru_cache(maxsize=256)
def _table3d(n: int, key: tuple):
    r = np.array(key).reshape(3, 3)
    p = _grid_points(n, 3)
    src = p @ r + (n - 1) / 2.0  # rows of p times R = (R^T p^T)^T
    return _interp_table(src, n)


def resample_rotate2d(t: np.ndarray, theta: float) -> np.ndarray:
    """Bilinear rotation of the last two (square) axes by ``theta`` degrees."""
    t = np.asarray(t)
    if t.ndim < 2 or t.shape[-1] != t.shape[-2]:
        raise ValueError(f"resample rotation needs a square grid, got shape {t.shape}")
    n = t.shape[-1]
    idx, wts = _table2d(n, float(theta))
    flat = t.reshape(-1, n * n)
    acc = np.zeros(flat.shape, dtype=np.float64)
    for k in range(4):
        acc += flat[:, idx[k]] * wts[k]
    return acc.reshape(t.shape).astype(t.dtype, copy=False)


def resample_rotate3d(z: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Trilinear inverse warp of the last three (cubic) axes by rotation ``r``."""
    z = np.asarray(z)
    if z.ndim < 3 or not (z.shape[-1] == z.shape[-2] == z.shape[-3]):
        raise ValueError(f"resample rotation needs a cubic grid, got shape {z.shape}")
    r = check_rotation(r)
    n = z.shape[-1]
    idx, wts = _table3d(n, tuple(r.reshape(-1).tolist()))
    flat = z.reshape(-1, n ** 3)
    acc = np.zeros(flat.shape, dtype=np.float64)
    for k in range(8):
        acc += flat[:, idx[k]] * wts[k]
    return acc.reshape(z.shape).astype(z.dtype, copy=False)
