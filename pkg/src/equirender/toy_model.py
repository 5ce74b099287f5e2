"""A tiny inverse renderer / neural renderer pair with hand-written backprop.

Encoder (image 3x16x16 -> scene 4x8x8x8)::

    per-pixel linear 3->F, LeakyReLU(0.2), 2x2 average pool,
    per-position linear F->C*D, reshape to (C, D, 8, 8), spherical mask

Decoder (scene -> image)::

    reshape to (C*D, 8, 8), per-position linear C*D->F, LeakyReLU(0.2),
    nearest 2x upsample, per-pixel linear F->3, sigmoid

All parameters live in one float64 vector, in this order (weights row-major,
shape ``(out, in)``): enc_mix1.w, enc_mix1.b, enc_proj.w, enc_proj.b,
dec_proj.w, dec_proj.b, dec_mix1.w, dec_mix1.b. The same order is used for
checkpoints and for the random initialization draws (weights only; biases
start at zero).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .equivariance import (DEFAULT_SCENE_WEIGHT, SAFE_RADIUS_FRAC, LossBreakdown,
                           combine_losses, equivariance_gap, rotate_scene, sphere_mask)
from .metrics import psnr
from .rng import SplitMix64
from .tensor_io import tsr_read, tsr_write

SLOPE = 0.2


@dataclass(frozen=True)
class ToyConfig:
    features: int = 16
    scene_channels: int = 4
    depth: int = 8
    grid: int = 8  # scene H = W = D
    image: int = 16

    @property
    def shapes(self) -> list[tuple[str, tuple[int, ...]]]:
        f, cd = self.features, self.scene_channels * self.depth
        return [
            ("enc_mix1.w", (f, 3)), ("enc_mix1.b", (f,)),
            ("enc_proj.w", (cd, f)), ("enc_proj.b", (cd,)),
            ("dec_proj.w", (f, cd)), ("dec_proj.b", (f,)),
            ("dec_mix1.w", (3, f)), ("dec_mix1.b", (3,)),
        ]

    @property
    def size(self) -> int:
        return sum(math.prod(s) for _, s in self.shapes)


class ToyParams:
    """Flat parameter vector with named, shaped views."""

    def __init__(self, config: ToyConfig = ToyConfig(), vector: np.ndarray | None = None):
        self.config = config
        if vector is None:
            vector = np.zeros(config.size)
        vector = np.asarray(vector, dtype=np.float64)
        if vector.shape != (config.size,):
            raise ValueError(f"expected {config.size} parameters, got {vector.shape}")
        self.vector = vector

    def slices(self) -> dict[str, slice]:
        out, pos = {}, 0
        for name, shape in self.config.shapes:
            k = math.prod(shape)
            out[name] = slice(pos, pos + k)
            pos += k
        return out

    def __getitem__(self, name: str) -> np.ndarray:
        shape = dict(self.config.shapes)[name]
        return self.vector[self.slices()[name]].reshape(shape)

    def copy(self) -> "ToyParams":
        return ToyParams(self.config, self.vector.copy())


def init_params(seed: int, config: ToyConfig = ToyConfig(), bias_scale: float = 0.0) -> ToyParams:
    """Glorot-uniform weights drawn from SplitMix64(seed), zero biases.

    ``bias_scale > 0`` additionally draws biases uniform in +-bias_scale (after
    all weights). Zero biases put every empty site exactly on the LeakyReLU
    kink, so gradient checks use a small nonzero scale.
    """
    rng = SplitMix64(seed)
    p = ToyParams(config)
    sl = p.slices()
    for name, shape in config.shapes:
        if name.endswith(".w"):
            limit = math.sqrt(6.0 / (shape[0] + shape[1]))
            p.vector[sl[name]] = rng.uniform(-limit, limit, size=math.prod(shape))
    if bias_scale > 0:
        for name, shape in config.shapes:
            if name.endswith(".b"):
                p.vector[sl[name]] = rng.uniform(-bias_scale, bias_scale, size=math.prod(shape))
    return p


def _leaky(h):
    return np.where(h > 0, h, SLOPE * h)


def _leaky_grad(h):
    return np.where(h > 0, 1.0, SLOPE)


def _mix(w, b, x):
    # per-position linear map over the channel axis of a (C, H, W) array
    return np.einsum("oi,ihw->ohw", w, x) + b[:, None, None]


def _check_image(x, cfg: ToyConfig):
    if x.shape != (3, cfg.image, cfg.image):
        raise ValueError(f"expected image of shape (3, {cfg.image}, {cfg.image}), got {x.shape}")


def _check_scene(z, cfg: ToyConfig):
    want = (cfg.scene_channels, cfg.depth, cfg.grid, cfg.grid)
    if z.shape != want:
        raise ValueError(f"expected scene of shape {want}, got {z.shape}")


def _mask(cfg: ToyConfig):
    return sphere_mask(cfg.grid, SAFE_RADIUS_FRAC)


def encode(p: ToyParams, x: np.ndarray, cache: dict | None = None) -> np.ndarray:
    cfg = p.config
    x = np.asarray(x, dtype=np.float64)
    _check_image(x, cfg)
    h1 = _mix(p["enc_mix1.w"], p["enc_mix1.b"], x)
    a1 = _leaky(h1)
    f, s = cfg.features, cfg.grid
    pooled = a1.reshape(f, s, 2, s, 2).mean(axis=(2, 4))
    h2 = _mix(p["enc_proj.w"], p["enc_proj.b"], pooled)
    z = h2.reshape(cfg.scene_channels, cfg.depth, s, s) * _mask(cfg)
    if cache is not None:
        cache.update(x=x, h1=h1, pooled=pooled)
    return z


def decode(p: ToyParams, z: np.ndarray, cache: dict | None = None) -> np.ndarray:
    cfg = p.config
    z = np.asarray(z, dtype=np.float64)
    _check_scene(z, cfg)
    s = cfg.grid
    zf = z.reshape(cfg.scene_channels * cfg.depth, s, s)
    h3 = _mix(p["dec_proj.w"], p["dec_proj.b"], zf)
    a3 = _leaky(h3)
    up = a3.repeat(2, axis=1).repeat(2, axis=2)
    h4 = _mix(p["dec_mix1.w"], p["dec_mix1.b"], up)
    y = 1.0 / (1.0 + np.exp(-h4))
    if cache is not None:
        cache.update(zf=zf, h3=h3, up=up, y=y)
    return y


def _encode_backward(p: ToyParams, cache: dict, dz: np.ndarray, grad: ToyParams) -> None:
    cfg = p.config
    s = cfg.grid
    dh2 = (dz * _mask(cfg)).reshape(cfg.scene_channels * cfg.depth, s, s)
    grad["enc_proj.w"][...] += np.einsum("ohw,ihw->oi", dh2, cache["pooled"])
    grad["enc_proj.b"][...] += dh2.sum(axis=(1, 2))
    dpooled = np.einsum("oi,ohw->ihw", p["enc_proj.w"], dh2)
    da1 = np.repeat(np.repeat(dpooled, 2, axis=1), 2, axis=2) / 4.0
    dh1 = da1 * _leaky_grad(cache["h1"])
    grad["enc_mix1.w"][...] += np.einsum("ohw,ihw->oi", dh1, cache["x"])
    grad["enc_mix1.b"][...] += dh1.sum(axis=(1, 2))


def _decode_backward(p: ToyParams, cache: dict, dy: np.ndarray, grad: ToyParams) -> np.ndarray:
    cfg = p.config
    s, f = cfg.grid, cfg.features
    y = cache["y"]
    dh4 = dy * y * (1.0 - y)
    grad["dec_mix1.w"][...] += np.einsum("ohw,ihw->oi", dh4, cache["up"])
    grad["dec_mix1.b"][...] += dh4.sum(axis=(1, 2))
    dup = np.einsum("oi,ohw->ihw", p["dec_mix1.w"], dh4)
    da3 = dup.reshape(f, s, 2, s, 2).sum(axis=(2, 4))
    dh3 = da3 * _leaky_grad(cache["h3"])
    grad["dec_proj.w"][...] += np.einsum("ohw,ihw->oi", dh3, cache["zf"])
    grad["dec_proj.b"][...] += dh3.sum(axis=(1, 2))
    dzf = np.einsum("oi,ohw->ihw", p["dec_proj.w"], dh3)
    return dzf.reshape(cfg.scene_channels, cfg.depth, s, s)


def _rms_grad(r: np.ndarray) -> tuple[float, np.ndarray]:
    val = math.sqrt(float(np.mean(r * r)))
    if val == 0.0:
        return 0.0, np.zeros_like(r)
    return val, r / (r.size * val)


def pair_loss_and_grad(p: ToyParams, sample, scene_weight: float = DEFAULT_SCENE_WEIGHT,
                       need_grad: bool = True) -> tuple[LossBreakdown, ToyParams | None]:
    """Loss of one posed pair and its gradient with respect to every parameter.

    The rotation layer is a permutation, so its adjoint is the inverse rotation.
    """
    x1 = np.asarray(sample.x1, dtype=np.float64)
    x2 = np.asarray(sample.x2, dtype=np.float64)
    if x1.shape != x2.shape:
        raise ValueError(f"pair shapes differ: {x1.shape} vs {x2.shape}")
    pose = sample.pose
    ce1, ce2, cd1, cd2 = {}, {}, {}, {}
    z1 = encode(p, x1, ce1)
    z2 = encode(p, x2, ce2)
    z1r = rotate_scene(z1, pose, "shear")
    z2r = rotate_scene(z2, pose, "shear", inverse=True)
    g1 = decode(p, z1r, cd1)
    g2 = decode(p, z2r, cd2)

    e1 = g1 - x2
    e2 = g2 - x1
    l_render = float(np.mean(np.abs(e1))) + float(np.mean(np.abs(e2)))
    ra, dra = _rms_grad(z2 - z1r)
    rb, drb = _rms_grad(z1 - z2r)
    loss = combine_losses(l_render, ra + rb, scene_weight)
    if not need_grad:
        return loss, None

    grad = ToyParams(p.config)
    dz1r = _decode_backward(p, cd1, np.sign(e1) / e1.size, grad)
    dz2r = _decode_backward(p, cd2, np.sign(e2) / e2.size, grad)
    dz1r -= scene_weight * dra
    dz2r -= scene_weight * drb
    dz2 = scene_weight * dra + rotate_scene(dz2r, pose, "shear")
    dz1 = scene_weight * drb + rotate_scene(dz1r, pose, "shear", inverse=True)
    _encode_backward(p, ce1, dz1, grad)
    _encode_backward(p, ce2, dz2, grad)
    return loss, grad


def batch_loss_and_grad(p: ToyParams, samples, scene_weight: float = DEFAULT_SCENE_WEIGHT):
    """Mean loss and gradient over ``samples``, accumulated in index order."""
    acc = np.zeros(p.config.size)
    lr = ls = 0.0
    for s in samples:
        loss, g = pair_loss_and_grad(p, s, scene_weight)
        acc += g.vector
        lr += loss.l_render
        ls += loss.l_scene
    k = len(samples)
    return combine_losses(lr / k, ls / k, scene_weight), ToyParams(p.config, acc / k)


@dataclass
class AdamState:
    lr: float = 2e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: np.ndarray | None = None
    v: np.ndarray | None = None


def adam_step(state: AdamState, params: np.ndarray, grads: np.ndarray) -> np.ndarray:
    """One bias-corrected Adam update; returns new params, mutates ``state``."""
    params = np.asarray(params, dtype=np.float64)
    grads = np.asarray(grads, dtype=np.float64)
    if params.shape != grads.shape:
        raise ValueError(f"parameter/gradient shape mismatch: {params.shape} vs {grads.shape}")
    if state.m is None:
        state.m = np.zeros_like(params)
        state.v = np.zeros_like(params)
    elif state.m.shape != params.shape:
        raise ValueError("Adam moments do not match parameter shape")
    state.step += 1
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grads
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grads * grads
    mhat = state.m / (1.0 - state.beta1 ** state.step)
    vhat = state.v / (1.0 - state.beta2 ** state.step)
    return params - state.lr * mhat / (np.sqrt(vhat) + state.eps)


LOG_FIELDS = ["step", "l_render", "l_scene", "total", "psnr"]


@dataclass
class TrainResult:
    params: ToyParams
    log: list[dict] = field(default_factory=list)
    adam: AdamState | None = None


def render_pair(p: ToyParams, sample) -> np.ndarray:
    """g(rotate(f(x1))): the model's prediction of the second view."""
    return decode(p, rotate_scene(encode(p, sample.x1), sample.pose, "shear"))


def train(dataset, steps: int, lr: float = 2e-4, scene_weight: float = DEFAULT_SCENE_WEIGHT,
          seed: int = 0, batch_size: int = 8, holdout=None,
          config: ToyConfig = ToyConfig(), log_every: int = 1) -> TrainResult:
    """Adam on random minibatches of posed pairs (sampled with replacement).

    Parameters are initialized from ``seed``; batch indices come from a child
    stream of the same seed. Log rows are taken before each update; their PSNR
    is measured on ``holdout`` (default: the last pair, withheld from training).
    """
    if len(dataset) == 0:
        raise ValueError("training needs a non-empty dataset")
    params = init_params(seed, config)
    pick = SplitMix64(seed).spawn(0x42415443)  # "BATC"
    probe = holdout
    if probe is None:
        probe = dataset[-1]
        if len(dataset) > 1:
            dataset = dataset[:-1]
    adam = AdamState(lr=lr)
    log = []
    for step in range(steps):
        idx = [pick.integers(len(dataset)) for _ in range(batch_size)]
        loss, grad = batch_loss_and_grad(params, [dataset[i] for i in idx], scene_weight)
        if step % log_every == 0:
            log.append({"step": step, "l_render": loss.l_render, "l_scene": loss.l_scene,
                        "total": loss.total, "psnr": psnr(render_pair(params, probe), probe.x2)})
        params = ToyParams(config, adam_step(adam, params.vector, grad.vector))
    return TrainResult(params, log, adam)


def evaluate(p: ToyParams, samples, scene_weight: float = DEFAULT_SCENE_WEIGHT) -> dict:
    """Mean total loss, PSNR of g(rotate(f(x1))) against x2, and equivariance gap."""
    totals, psnrs, gaps = [], [], []
    for s in samples:
        loss, _ = pair_loss_and_grad(p, s, scene_weight, need_grad=False)
        totals.append(loss.total)
        psnrs.append(psnr(render_pair(p, s), s.x2))
        gaps.append(equivariance_gap(lambda x: encode(p, x), s.x1, s.pose,
                                     lambda x, pose, s=s: s.x2))
    return {"pairs": len(samples), "mean_total": float(np.mean(totals)),
            "mean_psnr_db": float(np.mean(psnrs)), "mean_equiv_gap": float(np.mean(gaps))}


def save_checkpoint(out_dir, params: ToyParams, hparams: dict) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tsr_write(params.vector, out / "params.tsr")
    cfg = params.config
    rows = {"features": cfg.features, "scene_channels": cfg.scene_channels,
            "depth": cfg.depth, "grid": cfg.grid, "image": cfg.image, **hparams}
    with open(out / "hparams.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["key", "value"])
        for k, v in rows.items():
            w.writerow([k, repr(v) if isinstance(v, float) else v])


def load_checkpoint(out_dir) -> tuple[ToyParams, dict]:
    out = Path(out_dir)
    with open(out / "hparams.csv", newline="") as fh:
        hp = {row["key"]: row["value"] for row in csv.DictReader(fh)}
    cfg = ToyConfig(*(int(hp[k]) for k in ("features", "scene_channels", "depth", "grid", "image")))
    return ToyParams(cfg, tsr_read(out / "params.tsr")), hp


def write_log(path, log: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=LOG_FIELDS, lineterminator="\n")
        w.writeheader()
        for row in log:
            w.writerow({k: (repr(float(v)) if k != "step" else v) for k, v in row.items()})
