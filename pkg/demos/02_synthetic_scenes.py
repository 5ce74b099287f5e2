# %% [markdown]
# # Synthetic scenes and posed image pairs
#
# Scenes are small voxel grids holding opacity plus RGB. A pair is two
# orthographic renders of the same scene, the second after an exact shear
# rotation, so the relative pose is known precisely.

# %%
import sys
from pathlib import Path

import numpy as np

from equirender import RelativePose, rotate_scene
from equirender.rng import SplitMix64
from equirender.synth import SceneSpec, gen_scene, make_pair, project_ortho
from equirender.tensor_io import ppm_write

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out/scenes")
out.mkdir(parents=True, exist_ok=True)

# %% One scene, four views around the vertical axis
scene = gen_scene(SceneSpec(n=8, num_blobs=3, seed=7))
print("scene", scene.shape, "occupied voxels:", int((scene[0] > 0).sum()))
for azim in (0, 90, 180, 270):
    view = project_ortho(rotate_scene(scene, RelativePose(azim, 0.0)), upsample=8)
    ppm_write(view, out / f"azim_{azim:03d}.ppm")

# %% A training pair and its oracle check
pair = make_pair(scene, SplitMix64(1), upsample=2)
rerender = project_ortho(rotate_scene(pair.z1, pair.pose, "shear"), 2)
print(f"pose: azimuth {pair.pose.d_azim:.2f}, elevation {pair.pose.d_elev:.2f}")
print("x2 reproduces bitwise:", np.array_equal(rerender, pair.x2))
ppm_write(np.repeat(np.repeat(pair.x1, 4, 1), 4, 2), out / "pair_x1.ppm")
ppm_write(np.repeat(np.repeat(pair.x2, 4, 1), 4, 2), out / "pair_x2.ppm")
print("wrote views to", out)
