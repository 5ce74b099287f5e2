"""Exactly invertible rotations of square and cubic grids.

A rotation by ``theta`` degrees is split into a multiple of 90 degrees
(a flip/transpose) and a small residual in [-45, 45] realized by three
shears. Each shear shifts whole columns (or rows) by an integer number of
cells with wrap-around, so every stage is a permutation and the whole
rotation is one too.

Coordinates: ``x`` is the centered row index (increasing downward), ``y``
the centered column index. A value at ``(x, y)`` moves to approximately
``(x cos t - y sin t, x sin t + y cos t)``, which agrees with
``np.rot90`` at ``t = 90``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np


def round_half_away(x):
    """Round to the nearest integer, ties away from zero (odd-symmetric)."""
    x = np.asarray(x, dtype=np.float64)
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


@dataclass(frozen=True)
class AngleDecomposition:
    coarse: int
    small: float

    @property
    def quarter_turns(self) -> int:
        return self.coarse // 90


def decompose_angle(theta: float) -> AngleDecomposition:
    """Split ``theta`` into a multiple of 90 degrees plus a residual in [-45, 45].

    Ties at odd multiples of 45 go to the even quarter-turn count, which keeps
    ``decompose_angle(-t)`` the exact mirror of ``decompose_angle(t)``.
    """
    theta = float(theta)
    if not math.isfinite(theta):
        raise ValueError(f"angle must be finite, got {theta}")
    if theta < 0:
        d = decompose_angle(-theta)
        return AngleDecomposition((-d.coarse) % 360, -d.small + 0.0)
    r = math.fmod(theta, 360.0)
    k = round(r / 90.0)  # banker's rounding: ties to even
    small = r - 90.0 * k
    return AngleDecomposition((90 * k) % 360, small + 0.0)


def rot90_2d(t: np.ndarray, k: int = 1) -> np.ndarray:
    """Rotate the last two (square) axes counterclockwise by ``k`` quarter turns."""
    t = np.asarray(t)
    if t.ndim < 2 or t.shape[-1] != t.shape[-2]:
        raise ValueError(f"rot90_2d needs a square grid, got shape {t.shape}")
    return np.ascontiguousarray(np.rot90(t, k % 4, axes=(-2, -1)))


@dataclass(frozen=True)
class ShearPlan:
    theta_small: float
    n: int
    shift_a: np.ndarray  # per column, vertical; stages 1 and 3
    shift_b: np.ndarray  # per row, horizontal; stage 2


def make_shear_plan(theta_small: float, n: int) -> ShearPlan:
    if abs(theta_small) > 45.0:
        raise ValueError(f"shear angle must lie in [-45, 45], got {theta_small}")
    if n < 1:
        raise ValueError(f"grid size must be positive, got {n}")
    rad = math.radians(theta_small)
    offsets = np.arange(n, dtype=np.float64) - (n - 1) / 2.0
    shift_a = round_half_away(-math.tan(rad / 2.0) * offsets).astype(np.int64)
    shift_b = round_half_away(math.sin(rad) * offsets).astype(np.int64)
    shift_a.flags.writeable = False
    shift_b.flags.writeable = False
    return ShearPlan(float(theta_small), int(n), shift_a, shift_b)


def shift_columns(a: np.ndarray, shifts: np.ndarray) -> np.ndarray:
    """Cyclically move column ``c`` down by ``shifts[c]`` rows (last two axes)."""
    n = a.shape[-2]
    rows = (np.arange(n)[:, None] - shifts[None, :]) % n
    rows = np.broadcast_to(rows, a.shape)
    return np.take_along_axis(a, rows, axis=-2)


def shift_rows(a: np.ndarray, shifts: np.ndarray) -> np.ndarray:
    """Cyclically move row ``r`` right by ``shifts[r]`` columns (last two axes)."""
    n = a.shape[-1]
    cols = (np.arange(n)[None, :] - shifts[:, None]) % n
    cols = np.broadcast_to(cols, a.shape)
    return np.take_along_axis(a, cols, axis=-1)


def apply_shear_plan(a: np.ndarray, plan: ShearPlan) -> np.ndarray:
    a = shift_columns(a, plan.shift_a)
    a = shift_rows(a, plan.shift_b)
    return shift_columns(a, plan.shift_a)


def _rotate_stages(a: np.ndarray, theta: float) -> np.ndarray:
    d = decompose_angle(theta)
    plan = make_shear_plan(d.small, a.shape[-1])
    k = d.quarter_turns
    # For three quarter turns the shear runs first: this makes the map for -theta
    # the exact inverse of the map for theta (a quarter turn does not commute
    # with the shear permutation, a half turn does).
    if k == 3:
        return rot90_2d(apply_shear_plan(a, plan), 3)
    return apply_shear_plan(rot90_2d(a, k), plan)


@lru_cache(maxsize=4096)
def _perm2d(n: int, theta: float) -> np.ndarray:
    idx = np.arange(n * n, dtype=np.int64).reshape(n, n)
    perm = _rotate_stages(idx, theta).reshape(-1)
    perm.flags.writeable = False
    return perm


def rotation_permutation2d(n: int, theta: float) -> np.ndarray:
    """Flat gather indices: ``out.flat[i] == in.flat[perm[i]]`` for an n x n grid."""
    return _perm2d(int(n), float(theta))


def shear_rotate2d(t: np.ndarray, theta: float) -> np.ndarray:
    """Invertible rotation of the last two axes (square) of ``t`` by ``theta`` degrees."""
    t = np.asarray(t)
    if t.ndim < 2 or t.shape[-1] != t.shape[-2]:
        raise ValueError(f"shear rotation needs a square grid, got shape {t.shape}")
    n = t.shape[-1]
    perm = _perm2d(n, float(theta))
    flat = t.reshape(t.shape[:-2] + (n * n,))
    return flat[..., perm].reshape(t.shape)


@lru_cache(maxsize=4096)
def _perm3d(n: int, elev: float, azim: float, inverse: bool) -> np.ndarray:
    idx = np.arange(n ** 3, dtype=np.int64).reshape(n, n, n)
    if inverse:
        idx = _azimuth(idx, -azim)
        idx = _elevation(idx, -elev)
    else:
        idx = _elevation(idx, elev)
        idx = _azimuth(idx, azim)
    perm = idx.reshape(-1)
    perm.flags.writeable = False
    return perm


def _elevation(cube: np.ndarray, theta: float) -> np.ndarray:
    # (D, H) slabs, one per width index
    slabs = np.moveaxis(cube, -1, -3)  # (..., W, D, H)
    return np.moveaxis(shear_rotate2d(slabs, theta), -3, -1)


def _azimuth(cube: np.ndarray, theta: float) -> np.ndarray:
    # (D, W) slabs, one per height index
    slabs = np.moveaxis(cube, -2, -3)  # (..., H, D, W)
    return np.moveaxis(shear_rotate2d(slabs, theta), -3, -2)


def rotation_permutation3d(n: int, elev: float, azim: float, inverse: bool = False) -> np.ndarray:
    return _perm3d(int(n), float(elev), float(azim), bool(inverse))


def _check_cubic(z: np.ndarray) -> int:
    if z.ndim < 3 or not (z.shape[-1] == z.shape[-2] == z.shape[-3]):
        raise ValueError(f"3D rotation needs a cubic grid, got shape {z.shape}")
    return z.shape[-1]


def shear_rotate3d(z: np.ndarray, elev: float, azim: float, inverse: bool = False) -> np.ndarray:
    """Elevation (about the width axis) then azimuth (about the height axis).

    The last three axes of ``z`` are (depth, height, width); leading axes are
    channels. ``inverse=True`` undoes the forward call exactly: azimuth by
    ``-azim`` first, then elevation by ``-elev``.
    """
    z = np.asarray(z)
    n = _check_cubic(z)
    perm = _perm3d(n, float(elev), float(azim), bool(inverse))
    flat = z.reshape(z.shape[:-3] + (n ** 3,))
    return flat[..., perm].reshape(z.shape)


def angle_resolution(n: int) -> float:
    """Smallest angle (degrees) that changes an n x n grid: asin(1 / (n - 1))."""
    if n < 2:
        raise ValueError(f"angle resolution needs n >= 2, got {n}")
    return math.degrees(math.asin(1.0 / (n - 1)))


def smallest_effective_angle_bruteforce(n: int, step: float) -> float | None:
    """Sweep theta = step, 2*step, ... <= 45 and return the first angle that moves
    a corner probe. Returns ``None`` when nothing below 45 degrees changes the grid.
    """
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    if not step > 0:
        raise ValueError(f"step must be positive, got {step}")
    probe = np.zeros((n, n))
    probe[0, n - 1] = 1.0
    k = 1
    while k * step <= 45.0:
        theta = k * step
        if not np.array_equal(shear_rotate2d(probe, theta), probe):
            return theta
        k += 1
    return None
