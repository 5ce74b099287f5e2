"""Aliasing and angle-resolution benchmarks.

The aliasing benchmark rotates images by ``theta`` and back by ``-theta`` and
records the mean absolute error for bilinear resampling and for shear
rotation. Per-angle means are always accumulated in image-index order, so
the numbers do not depend on how many workers computed them.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.ndimage import convolve1d

from .resample import resample_rotate2d
from .rng import SplitMix64
from .shear import angle_resolution, shear_rotate2d, smallest_effective_angle_bruteforce
from .tensor_io import ppm_read

BINOMIAL5 = np.array([1.0, 4.0, 6.0, 4.0, 1.0]) / 16.0
ALIASING_FIELDS = ["angle_deg", "method", "mean_abs_err", "max_abs_err", "num_images"]
RESOLUTION_FIELDS = ["n", "formula_deg", "bruteforce_deg"]
METHODS = ("bilinear", "shear")


@dataclass(frozen=True)
class AliasingRecord:
    angle_deg: float
    method: str
    mean_abs_err: float
    max_abs_err: float
    num_images: int


def gen_bandlimited_image(n: int, seed: int) -> np.ndarray:
    """Smooth RGB noise in [0, 1]: white noise blurred twice by a 5x5 binomial kernel."""
    if n < 8:
        raise ValueError(f"image size must be at least 8, got {n}")
    x = SplitMix64(seed).uniform(size=(3, n, n))
    for _ in range(2):
        x = convolve1d(x, BINOMIAL5, axis=1, mode="reflect")
        x = convolve1d(x, BINOMIAL5, axis=2, mode="reflect")
    lo, hi = x.min(), x.max()
    return ((x - lo) / (hi - lo)).astype(np.float32)


def load_image_dir(path) -> np.ndarray:
    """All ``*.ppm`` files of a directory (sorted by name) as an (N, 3, n, n) stack."""
    root = Path(path)
    if not root.is_dir():
        raise FileNotFoundError(f"image directory not found: {root}")
    files = sorted(root.glob("*.ppm"))
    if not files:
        raise FileNotFoundError(f"no .ppm files in {root}")
    imgs = [ppm_read(f) for f in files]
    shape = imgs[0].shape
    if shape[0] != 3 or shape[1] != shape[2] or any(im.shape != shape for im in imgs):
        raise ValueError("image directory must hold square RGB images of one size")
    return np.stack(imgs)


def _round_trip(method: str, imgs: np.ndarray, theta: float) -> np.ndarray:
    rot = resample_rotate2d if method == "bilinear" else shear_rotate2d
    return rot(rot(imgs, theta), -theta)


def _errors_chunk(args) -> tuple[np.ndarray, np.ndarray]:
    """Per-image (mean, max) absolute round-trip error; arrays of shape (methods, angles, images)."""
    imgs, angles = args
    imgs = np.asarray(imgs)
    means = np.zeros((len(METHODS), len(angles), len(imgs)))
    maxes = np.zeros_like(means)
    flat = imgs.reshape(len(imgs), -1).astype(np.float64)
    for m, method in enumerate(METHODS):
        for a, theta in enumerate(angles):
            err = np.abs(_round_trip(method, imgs, theta).reshape(len(imgs), -1) - flat)
            means[m, a] = err.mean(axis=1)
            maxes[m, a] = err.max(axis=1)
    return means, maxes


def bench_aliasing(images: np.ndarray, angles, workers: int = 1) -> list[AliasingRecord]:
    images = np.asarray(images)
    if len(images) < 1:
        raise ValueError("need at least one image")
    angles = [float(a) for a in angles]
    if workers > 1:
        shards = [s for s in np.array_split(np.arange(len(images)), workers) if len(s)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_errors_chunk, [(images[s], angles) for s in shards]))
        means = np.concatenate([p[0] for p in parts], axis=2)
        maxes = np.concatenate([p[1] for p in parts], axis=2)
    else:
        means, maxes = _errors_chunk((images, angles))
    records = []
    for m, method in enumerate(METHODS):
        for a, theta in enumerate(angles):
            # sequential sum in image order
            total = 0.0
            for v in means[m, a]:
                total += float(v)
            records.append(AliasingRecord(theta, method, total / len(images),
                                          float(maxes[m, a].max()), len(images)))
    return records


def synthetic_images(count: int, size: int, seed: int) -> np.ndarray:
    return np.stack([gen_bandlimited_image(size, seed + i) for i in range(count)])


def _fmt(v) -> str:
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


def aliasing_csv(records: list[AliasingRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ALIASING_FIELDS)
    for r in sorted(records, key=lambda r: (r.method, r.angle_deg)):
        w.writerow([_fmt(r.angle_deg), r.method, _fmt(r.mean_abs_err),
                    _fmt(r.max_abs_err), r.num_images])
    return buf.getvalue()


def resolution_table(sizes, step: float = 0.005) -> list[tuple[int, float, float | None]]:
    rows = []
    for n in sizes:
        if n < 2:
            raise ValueError(f"grid size must be at least 2, got {n}")
        rows.append((int(n), angle_resolution(n), smallest_effective_angle_bruteforce(n, step)))
    return rows


def resolution_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RESOLUTION_FIELDS)
    for n, formula, brute in rows:
        w.writerow([n, _fmt(formula), "none" if brute is None else _fmt(brute)])
    return buf.getvalue()
