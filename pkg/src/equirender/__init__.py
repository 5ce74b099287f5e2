"""Invertible shear rotations of voxel grids and an equivariant toy renderer."""

from .equivariance import (LossBreakdown, RelativePose, combine_losses, equivariance_gap,
                           render_loss, rotate_scene, scene_loss, spherical_mask, total_loss)
from .metrics import l1_mean, mse, psnr
from .resample import resample_rotate2d, resample_rotate3d, rotmat2, rotmat3_from_elev_azim
from .shear import (AngleDecomposition, ShearPlan, angle_resolution, decompose_angle,
                    make_shear_plan, rot90_2d, shear_rotate2d, shear_rotate3d,
                    smallest_effective_angle_bruteforce)
from .tensor_io import ppm_read, ppm_write, tsr_read, tsr_write

__version__ = "0.1.0"
