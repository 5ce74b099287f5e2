"""Command-line entry point: ``equirender <command> [flags]``."""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from . import bench, synth, toy_model
from .equivariance import DEFAULT_SCENE_WEIGHT, RelativePose, rotate_scene
from .resample import resample_rotate2d
from .shear import decompose_angle, shear_rotate2d
from .tensor_io import TensorFormatError, ImageFormatError, ppm_read, ppm_write, tsr_read, tsr_write


def _out_dir(path) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p


def cmd_bench_aliasing(args) -> int:
    if args.count < 1:
        raise ValueError("--count must be at least 1")
    if args.source == "synthetic":
        images = bench.synthetic_images(args.count, args.size, args.seed)
    else:
        images = bench.load_image_dir(args.source)[: args.count]
    angles = np.arange(0.0, 360.0, args.angle_step)
    records = bench.bench_aliasing(images, angles, workers=args.workers)
    text = bench.aliasing_csv(records)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_table_resolution(args) -> int:
    text = bench.resolution_csv(bench.resolution_table(args.sizes, args.angle_step))
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def _describe(theta: float) -> str:
    d = decompose_angle(theta)
    return f"{theta!r} = {d.coarse} + {d.small!r}"


def cmd_rotate(args) -> int:
    src = Path(args.input)
    is_ppm = src.suffix.lower() in (".ppm", ".pgm")
    t = ppm_read(src) if is_ppm else tsr_read(src)
    method = args.method
    if t.ndim in (2, 3) and t.shape[-1] == t.shape[-2]:
        theta = -args.theta if args.inverse else args.theta
        if method == "shear":
            out = shear_rotate2d(t, theta)
        elif method == "bilinear":
            out = resample_rotate2d(t, theta)
        else:
            raise ValueError(f"method {method!r} does not apply to 2D input")
        print(f"2d rotation: {_describe(theta)}")
    elif t.ndim == 4 and not is_ppm and t.shape[1] == t.shape[2] == t.shape[3]:
        if method == "bilinear":
            method = "trilinear"
        pose = RelativePose(args.phi, args.theta)
        out = rotate_scene(t, pose, method, inverse=args.inverse)
        order = "azimuth then elevation (inverse)" if args.inverse else "elevation then azimuth"
        print(f"3d rotation ({order}): elevation {_describe(args.theta)}, "
              f"azimuth {_describe(args.phi)}")
    else:
        raise ValueError(f"cannot rotate a tensor of shape {t.shape}")
    out_path = Path(args.out)
    if out_path.suffix.lower() in (".ppm", ".pgm"):
        ppm_write(out, out_path)
    else:
        tsr_write(np.ascontiguousarray(out), out_path)
    return 0


def cmd_synth(args) -> int:
    spec = synth.SceneSpec(n=args.size, num_blobs=args.blobs, seed=args.seed)
    manifest = synth.write_dataset(args.out, args.scenes, args.pairs, spec, export_ppm=args.ppm)
    print(f"wrote {len(manifest)} pairs to {args.out}")
    return 0


def cmd_train(args) -> int:
    data = synth.read_dataset(args.data)
    holdout = synth.read_dataset(args.holdout)[0] if args.holdout else None
    res = toy_model.train(data, args.steps, lr=args.lr, scene_weight=args.scene_weight,
                          seed=args.seed, batch_size=args.batch_size, holdout=holdout)
    out = _out_dir(args.out)
    toy_model.save_checkpoint(out, res.params, {
        "lr": args.lr, "scene_weight": args.scene_weight, "steps": args.steps,
        "seed": args.seed, "batch_size": args.batch_size})
    toy_model.write_log(out / "train_log.csv", res.log)
    if res.log:
        print(f"step 0 total {res.log[0]['total']:.6f} -> step {res.log[-1]['step']} "
              f"total {res.log[-1]['total']:.6f}")
    return 0


def cmd_eval(args) -> int:
    params, hp = toy_model.load_checkpoint(args.model)
    data = synth.read_dataset(args.data)
    sw = float(hp.get("scene_weight", DEFAULT_SCENE_WEIGHT))
    res = toy_model.evaluate(params, data, sw)
    out = _out_dir(args.out)
    with open(out / "eval.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["pairs", "mean_psnr_db", "mean_equiv_gap"])
        w.writerow([res["pairs"], repr(res["mean_psnr_db"]), repr(res["mean_equiv_gap"])])
    print(f"pairs {res['pairs']}  mean psnr {res['mean_psnr_db']:.3f} dB  "
          f"mean gap {res['mean_equiv_gap']:.4f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="equirender",
                                 description="Invertible shear rotations and equivariant toy rendering.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bench-aliasing", help="round-trip rotation error per angle (CSV)")
    p.add_argument("--count", type=int, default=1000)
    p.add_argument("--size", type=int, default=32)
    p.add_argument("--angle-step", type=float, default=1.0)
    p.add_argument("--source", default="synthetic", help="'synthetic' or a directory of .ppm files")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", help="CSV path (default: stdout)")
    p.set_defaults(func=cmd_bench_aliasing)

    p = sub.add_parser("table-resolution", help="angle resolution per grid size (CSV)")
    p.add_argument("--sizes", type=int, nargs="+", default=[8, 16, 32, 64])
    p.add_argument("--angle-step", type=float, default=0.005)
    p.add_argument("--out")
    p.set_defaults(func=cmd_table_resolution)

    p = sub.add_parser("rotate", help="rotate a TSR tensor or PPM/PGM image")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--theta", type=float, default=0.0, help="2D angle, or elevation for 3D")
    p.add_argument("--phi", type=float, default=0.0, help="azimuth for 3D")
    p.add_argument("--method", choices=["shear", "bilinear", "trilinear"], default="shear")
    p.add_argument("--inverse", action="store_true", help="apply the inverse rotation")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_rotate)

    p = sub.add_parser("synth", help="write a synthetic posed-pair dataset")
    p.add_argument("--scenes", type=int, default=64)
    p.add_argument("--pairs", type=int, default=8)
    p.add_argument("--size", type=int, default=8)
    p.add_argument("--blobs", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ppm", action="store_true", help="also export x1/x2 as PPM")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train the toy model")
    p.add_argument("--data", required=True)
    p.add_argument("--holdout", help="dataset whose first pair is tracked in the log")
    p.add_argument("--steps", type=int, default=2000)
    p.add_argument("--lr", type=float, default=2e-4)
    p.add_argument("--scene-weight", type=float, default=DEFAULT_SCENE_WEIGHT)
    p.add_argument("--batch-size", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="mean PSNR and equivariance gap of a checkpoint")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, TensorFormatError, ImageFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
