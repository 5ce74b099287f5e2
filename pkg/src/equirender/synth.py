"""Synthetic voxel scenes, an orthographic projector and posed view pairs.

Every pair is generated by rotating a scene with the same shear operator the
model uses, so ``project(rotate_scene(z1, pose)) == x2`` holds bitwise.

Random draw order, per scene (stream ``SplitMix64(seed ^ scene_index)``):

* ``gen_scene``: for each blob, in order: center (3 draws, d/h/w), axis
  scales (3), rotation angles (3, via elevation/azimuth/roll), opacity
  scale (1), RGB color (3). Blob 0 is pushed away from the center.
* ``make_pair``, on the child stream ``spawn(PAIR_STREAM)``: base elevation,
  base azimuth, relative elevation, relative azimuth.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .equivariance import SAFE_RADIUS_FRAC, RelativePose, rotate_scene, spherical_mask
from .resample import rotmat3_from_elev_azim
from .rng import SplitMix64
from .tensor_io import ppm_write, tsr_read, tsr_write

PAIR_STREAM = 0x5041495253  # "PAIRS"
BASE_ELEV = (-60.0, 60.0)
BASE_AZIM = (0.0, 360.0)
REL_ELEV = (-60.0, 60.0)
REL_AZIM = (-180.0, 180.0)


@dataclass(frozen=True)
class SceneSpec:
    n: int = 8
    num_blobs: int = 3
    seed: int = 0
    channels: int = 4  # opacity + RGB emission
    upsample: int = 2  # image pixels per voxel column


@dataclass
class TrainSample:
    x1: np.ndarray
    x2: np.ndarray
    pose: RelativePose
    z1: np.ndarray | None = None


def gen_scene(spec: SceneSpec) -> np.ndarray:
    if spec.n < 8:
        raise ValueError(f"scene grid must be at least 8, got {spec.n}")
    if spec.num_blobs < 1:
        raise ValueError("need at least one blob")
    if spec.channels != 4:
        raise ValueError("scenes carry exactly 4 channels (opacity, R, G, B)")
    n = spec.n
    rng = SplitMix64(spec.seed)
    safe = SAFE_RADIUS_FRAC * (n - 1) / 2.0
    c = np.arange(n, dtype=np.float64) - (n - 1) / 2.0
    grid = np.stack(np.meshgrid(c, c, c, indexing="ij"), axis=-1)  # (n, n, n, 3)

    density = np.zeros((n, n, n))
    coverage = np.zeros((n, n, n))
    emission = np.zeros((3, n, n, n))
    for b in range(spec.num_blobs):
        center = rng.uniform(-1.0, 1.0, size=3)
        norm = np.linalg.norm(center)
        if b == 0:
            # off-center so the scene has no rotational symmetry
            radius = safe * (0.45 + 0.35 * norm / np.sqrt(3.0))
        else:
            radius = safe * 0.7 * min(norm, 1.0)
        center = center / max(norm, 1e-12) * radius
        scales = rng.uniform(0.6, 1.6, size=3) * n / 8.0
        elev, azim, roll = rng.uniform(0.0, 360.0, size=3)
        axes = rotmat3_from_elev_azim(elev, azim) @ rotmat3_from_elev_azim(0.0, roll).T
        opacity = rng.uniform(0.3, 1.0)
        color = rng.uniform(0.1, 1.0, size=3)

        local = (grid - center) @ axes / scales
        g = np.exp(-0.5 * np.sum(local * local, axis=-1))
        density += opacity * g
        coverage += g
        emission += color[:, None, None, None] * g

    opac = np.clip(density, 0.0, 1.0)
    # where blobs overlap, emission is their coverage-weighted mean color
    rgb = np.clip(emission / np.maximum(coverage, 1.0), 0.0, 1.0)
    scene = np.concatenate([opac[None], rgb], axis=0).astype(np.float32)
    return spherical_mask(scene, SAFE_RADIUS_FRAC)


def project_ortho(z: np.ndarray, upsample: int = 1) -> np.ndarray:
    """Front-to-back emission-absorption along depth (axis 1; index 0 in front).

    ``upsample`` repeats each ray's color into a square block of pixels.
    """
    z = np.asarray(z)
    if z.ndim != 4 or z.shape[0] != 4:
        raise ValueError(f"expected a 4-channel scene, got shape {z.shape}")
    a = z[0].astype(np.float64)
    col = z[1:].astype(np.float64)
    trans = np.cumprod(1.0 - a, axis=0)
    trans = np.concatenate([np.ones_like(a[:1]), trans[:-1]], axis=0)
    img = np.sum(col * (a * trans)[None], axis=1)
    img = np.clip(img, 0.0, 1.0).astype(np.float32)
    if upsample > 1:
        img = img.repeat(upsample, axis=1).repeat(upsample, axis=2)
    return img


def make_pair(scene: np.ndarray, rng: SplitMix64, upsample: int = 1) -> TrainSample:
    elev0 = rng.uniform(*BASE_ELEV)
    azim0 = rng.uniform(*BASE_AZIM)
    d_elev = rng.uniform(*REL_ELEV)
    d_azim = rng.uniform(*REL_AZIM)
    z1 = rotate_scene(scene, RelativePose(azim0, elev0), "shear")
    pose = RelativePose(d_azim, d_elev)
    x1 = project_ortho(z1, upsample)
    x2 = project_ortho(rotate_scene(z1, pose, "shear"), upsample)
    return TrainSample(x1, x2, pose, z1)


def scene_samples(spec: SceneSpec, index: int, pairs: int) -> list[TrainSample]:
    scene_spec = replace(spec, seed=spec.seed ^ index)
    scene = gen_scene(scene_spec)
    rng = SplitMix64(scene_spec.seed).spawn(PAIR_STREAM)
    return [make_pair(scene, rng, spec.upsample) for _ in range(pairs)]


def generate(spec: SceneSpec, num_scenes: int, pairs_per_scene: int) -> list[TrainSample]:
    """In-memory dataset; scene ``i`` is seeded with ``spec.seed ^ i``."""
    out: list[TrainSample] = []
    for i in range(num_scenes):
        out.extend(scene_samples(spec, i, pairs_per_scene))
    return out


def write_pose(path, pose: RelativePose) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["d_azim_deg", "d_elev_deg"])
        w.writerow([repr(float(pose.d_azim)), repr(float(pose.d_elev))])


def read_pose(path) -> RelativePose:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if len(rows) != 1:
        raise ValueError(f"{path}: expected exactly one pose row")
    return RelativePose(float(rows[0]["d_azim_deg"]), float(rows[0]["d_elev_deg"]))


def write_dataset(out_dir, num_scenes: int, pairs_per_scene: int,
                  spec: SceneSpec = SceneSpec(), seed: int | None = None,
                  export_ppm: bool = False) -> list[dict]:
    """Write ``scene_i/pair_j/{x1,x2,z1}.tsr`` + ``pose.csv`` and ``manifest.csv``."""
    if seed is not None:
        spec = replace(spec, seed=seed)
    root = Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)
    manifest = []
    for i in range(num_scenes):
        for j, s in enumerate(scene_samples(spec, i, pairs_per_scene)):
            rel = Path(f"scene_{i}") / f"pair_{j}"
            d = root / rel
            d.mkdir(parents=True, exist_ok=True)
            tsr_write(s.x1, d / "x1.tsr")
            tsr_write(s.x2, d / "x2.tsr")
            tsr_write(s.z1, d / "z1.tsr")
            write_pose(d / "pose.csv", s.pose)
            if export_ppm:
                ppm_write(s.x1, d / "x1.ppm")
                ppm_write(s.x2, d / "x2.ppm")
            manifest.append({"scene": i, "pair": j, "path": rel.as_posix(),
                             "d_azim_deg": repr(float(s.pose.d_azim)),
                             "d_elev_deg": repr(float(s.pose.d_elev))})
    with open(root / "manifest.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(manifest[0]) if manifest else
                           ["scene", "pair", "path", "d_azim_deg", "d_elev_deg"],
                           lineterminator="\n")
        w.writeheader()
        w.writerows(manifest)
    return manifest


def read_dataset(root) -> list[TrainSample]:
    root = Path(root)
    manifest = root / "manifest.csv"
    if not manifest.exists():
        raise FileNotFoundError(f"no manifest.csv in {root}")
    with open(manifest, newline="") as fh:
        rows = list(csv.DictReader(fh))
    samples = []
    for row in rows:
        d = root / row["path"]
        z1 = tsr_read(d / "z1.tsr") if (d / "z1.tsr").exists() else None
        samples.append(TrainSample(tsr_read(d / "x1.tsr"), tsr_read(d / "x2.tsr"),
                                   read_pose(d / "pose.csv"), z1))
    return samples
