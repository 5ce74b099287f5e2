"""Scene rotation, masking and the two-part equivariance loss."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .metrics import l1_mean, rms
from .resample import resample_rotate3d, rotmat3_from_elev_azim
from .shear import shear_rotate3d

DEFAULT_SCENE_WEIGHT = 1e-4
SAFE_RADIUS_FRAC = 0.8


@dataclass(frozen=True)
class RelativePose:
    """Camera change between two views, in degrees.

    Applied in scene space as an elevation turn followed by an azimuth turn.
    """

    d_azim: float
    d_elev: float

    def __post_init__(self):
        if not (math.isfinite(self.d_azim) and math.isfinite(self.d_elev)):
            raise ValueError(f"pose angles must be finite: {self}")


@dataclass(frozen=True)
class LossBreakdown:
    l_render: float
    l_scene: float
    total: float
    scene_weight: float


def _cubic(z: np.ndarray) -> int:
    if z.ndim < 3 or not (z.shape[-1] == z.shape[-2] == z.shape[-3]):
        raise ValueError(f"expected a cubic grid, got shape {z.shape}")
    return z.shape[-1]


def sphere_mask(n: int, radius_frac: float = SAFE_RADIUS_FRAC) -> np.ndarray:
    """Boolean n^3 mask of sites within ``radius_frac`` of the inscribed radius."""
    if not 0 < radius_frac <= 1:
        raise ValueError(f"radius_frac must lie in (0, 1], got {radius_frac}")
    c = np.arange(n, dtype=np.float64) - (n - 1) / 2.0
    r2 = c[:, None, None] ** 2 + c[None, :, None] ** 2 + c[None, None, :] ** 2
    return r2 <= (radius_frac * (n - 1) / 2.0) ** 2


def spherical_mask(z: np.ndarray, radius_frac: float = SAFE_RADIUS_FRAC) -> np.ndarray:
    z = np.asarray(z)
    m = sphere_mask(_cubic(z), radius_frac)
    return np.where(m, z, np.zeros((), dtype=z.dtype))


def rotate_scene(z: np.ndarray, pose: RelativePose, method: str = "shear",
                 inverse: bool = False) -> np.ndarray:
    """Rotate a scene tensor by a relative pose.

    ``inverse=True`` applies the inverse rotation (azimuth undone first).
    The shear method is an exact permutation; it should be fed masked content.
    """
    z = np.asarray(z)
    if method == "shear":
        return shear_rotate3d(z, pose.d_elev, pose.d_azim, inverse=inverse)
    if method == "trilinear":
        r = rotmat3_from_elev_azim(pose.d_elev, pose.d_azim)
        return resample_rotate3d(z, r.T if inverse else r)
    raise ValueError(f"unknown rotation method {method!r}")


def render_loss(x1, x2, g_of_z1r, g_of_z2r) -> float:
    """Each rotated scene must render the *other* view."""
    return l1_mean(x2, g_of_z1r) + l1_mean(x1, g_of_z2r)


def scene_loss(f_x2, z1r, f_x1, z2r) -> float:
    return rms(f_x2, z1r) + rms(f_x1, z2r)


def combine_losses(l_render: float, l_scene: float,
                   scene_weight: float = DEFAULT_SCENE_WEIGHT) -> LossBreakdown:
    if scene_weight < 0:
        raise ValueError("scene_weight must be non-negative")
    return LossBreakdown(float(l_render), float(l_scene),
                         float(l_render + scene_weight * l_scene), float(scene_weight))


def total_loss(x1, x2, g_of_z1r, g_of_z2r, f_x1, f_x2, z1r, z2r,
               scene_weight: float = DEFAULT_SCENE_WEIGHT) -> LossBreakdown:
    return combine_losses(render_loss(x1, x2, g_of_z1r, g_of_z2r),
                          scene_loss(f_x2, z1r, f_x1, z2r), scene_weight)


def equivariance_gap(f: Callable[[np.ndarray], np.ndarray], x: np.ndarray,
                     pose: RelativePose,
                     rotate_image: Callable[[np.ndarray, RelativePose], np.ndarray],
                     method: str = "shear") -> float:
    """Relative mismatch between rotate-after-encode and encode-after-rotate.

    ``rotate_image`` must be a ground-truth view change (for synthetic data,
    re-rendering the rotated scene).
    """
    fx = np.asarray(f(x), dtype=np.float64)
    lhs = rotate_scene(fx, pose, method)
    rhs = np.asarray(f(rotate_image(x, pose)), dtype=np.float64)
    return rms(lhs, rhs) / (rms(fx) + 1e-12)
