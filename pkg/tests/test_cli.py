import subprocess
import sys

import numpy as np
import pytest

from equirender.cli import main
from equirender.synth import read_dataset, read_pose
from equirender.tensor_io import ppm_read, ppm_write, tsr_read, tsr_write
from equirender.toy_model import init_params, load_checkpoint


def tree_bytes(root):
    return {p.relative_to(root).as_posix(): p.read_bytes()
            for p in sorted(root.rglob("*")) if p.is_file()}


def test_help_exits_zero():
    r = subprocess.run([sys.executable, "-m", "equirender", "--help"], capture_output=True, text=True)
    assert r.returncode == 0
    for cmd in ("bench-aliasing", "table-resolution", "rotate", "synth", "train", "eval"):
        assert cmd in r.stdout


def test_missing_file_is_one_line_error(tmp_path, capsys):
    code = main(["rotate", "--in", str(tmp_path / "none.tsr"), "--theta", "3",
                 "--out", str(tmp_path / "o.tsr")])
    assert code != 0
    err = capsys.readouterr().err.strip()
    assert err.startswith("error:") and "\n" not in err


def test_invalid_flag_nonzero():
    with pytest.raises(SystemExit) as e:
        main(["synth", "--scenes", "x", "--out", "y"])
    assert e.value.code != 0


def test_rotate_zero_identity_2d_and_3d(tmp_path):
    rng = np.random.default_rng(0)
    for name, t in (("img", rng.random((3, 9, 9))), ("vol", rng.random((4, 8, 8, 8)))):
        src, dst = tmp_path / f"{name}.tsr", tmp_path / f"{name}_out.tsr"
        tsr_write(t, src)
        assert main(["rotate", "--in", str(src), "--out", str(dst)]) == 0
        assert dst.read_bytes() == src.read_bytes()


@pytest.mark.parametrize("shape, args", [((3, 11, 11), ["--theta", "37.5"]),
                                         ((4, 8, 8, 8), ["--theta", "-22", "--phi", "131"])])
def test_rotate_inverse_round_trip(tmp_path, capsys, shape, args):
    t = np.random.default_rng(1).random(shape).astype(np.float32)
    src, mid, back = tmp_path / "a.tsr", tmp_path / "b.tsr", tmp_path / "c.tsr"
    tsr_write(t, src)
    assert main(["rotate", "--in", str(src), "--out", str(mid), *args]) == 0
    assert "=" in capsys.readouterr().out
    assert not np.array_equal(tsr_read(mid), t)
    assert main(["rotate", "--in", str(mid), "--out", str(back), "--inverse", *args]) == 0
    assert back.read_bytes() == src.read_bytes()


def test_rotate_ppm_quantization_bound(tmp_path):
    img = np.random.default_rng(2).random((3, 12, 12))
    np.save(tmp_path / "ref.npy", img)
    src = tmp_path / "in.ppm"
    ppm_write(img, src)
    out = tmp_path / "out.ppm"
    assert main(["rotate", "--in", str(src), "--out", str(out)]) == 0
    assert np.abs(ppm_read(out) - img).max() <= 1 / 510 + 1e-9


def test_rotate_bad_shape(tmp_path):
    tsr_write(np.zeros((3, 4, 5)), tmp_path / "x.tsr")
    assert main(["rotate", "--in", str(tmp_path / "x.tsr"), "--out", str(tmp_path / "y.tsr")]) == 1


def test_table_resolution(tmp_path):
    out = tmp_path / "t.csv"
    assert main(["table-resolution", "--sizes", "8", "16", "--angle-step", "0.01",
                 "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "n,formula_deg,bruteforce_deg" and len(lines) == 3
    assert main(["table-resolution", "--sizes", "1"]) == 1


def test_bench_aliasing_deterministic_and_parallel(tmp_path):
    flags = ["bench-aliasing", "--count", "5", "--size", "16", "--angle-step", "15", "--seed", "3"]
    a, b, c = (tmp_path / f"{k}.csv" for k in "abc")
    assert main(flags + ["--out", str(a)]) == 0
    assert main(flags + ["--out", str(b)]) == 0
    assert main(flags + ["--workers", "2", "--out", str(c)]) == 0
    assert a.read_bytes() == b.read_bytes() == c.read_bytes()
    rows = a.read_text().splitlines()
    assert len(rows) == 1 + 2 * 24


def test_bench_aliasing_from_dir(tmp_path):
    for i in range(2):
        ppm_write(np.random.default_rng(i).random((3, 8, 8)), tmp_path / f"{i}.ppm")
    out = tmp_path / "r.csv"
    assert main(["bench-aliasing", "--source", str(tmp_path), "--angle-step", "90",
                 "--out", str(out)]) == 0
    assert all(line.split(",")[2] == "0.0" for line in out.read_text().splitlines()[1:])
    assert main(["bench-aliasing", "--source", str(tmp_path / "missing")]) == 1


def test_synth_train_eval_flow(tmp_path):
    d1, d2 = tmp_path / "d1", tmp_path / "d2"
    flags = ["synth", "--scenes", "2", "--pairs", "2", "--seed", "4", "--ppm"]
    assert main(flags + ["--out", str(d1)]) == 0
    assert main(flags + ["--out", str(d2)]) == 0
    assert tree_bytes(d1) == tree_bytes(d2)
    assert len(read_dataset(d1)) == 4
    assert (d1 / "scene_0" / "pair_0" / "x1.ppm").exists()
    read_pose(d1 / "scene_0" / "pair_0" / "pose.csv")

    m0, m1, m1b = tmp_path / "m0", tmp_path / "m1", tmp_path / "m1b"
    assert main(["train", "--data", str(d1), "--steps", "0", "--seed", "9", "--out", str(m0)]) == 0
    params, hp = load_checkpoint(m0)
    assert np.array_equal(params.vector, init_params(9).vector)
    assert hp["steps"] == "0"

    train = ["train", "--data", str(d1), "--steps", "3", "--batch-size", "2", "--seed", "9"]
    assert main(train + ["--out", str(m1)]) == 0
    assert main(train + ["--out", str(m1b)]) == 0
    assert tree_bytes(m1) == tree_bytes(m1b)
    log = (m1 / "train_log.csv").read_text().splitlines()
    assert log[0] == "step,l_render,l_scene,total,psnr" and len(log) == 4

    e = tmp_path / "e"
    assert main(["eval", "--model", str(m1), "--data", str(d1), "--out", str(e)]) == 0
    rows = (e / "eval.csv").read_text().splitlines()
    assert rows[0] == "pairs,mean_psnr_db,mean_equiv_gap"
    pairs, psnr, gap = rows[1].split(",")
    assert pairs == "4" and np.isfinite(float(psnr)) and float(gap) >= 0
