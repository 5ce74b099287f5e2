import numpy as np
import pytest
from scipy.ndimage import laplace

from equirender.bench import (AliasingRecord, aliasing_csv, bench_aliasing, gen_bandlimited_image,
                              load_image_dir, resolution_csv, resolution_table, synthetic_images)
from equirender.rng import SplitMix64
from equirender.tensor_io import ppm_write


def test_bandlimited_deterministic_and_range():
    a, b = gen_bandlimited_image(32, 3), gen_bandlimited_image(32, 3)
    assert np.array_equal(a, b)
    assert a.shape == (3, 32, 32) and a.dtype == np.float32
    assert a.min() == 0.0 and a.max() == 1.0
    assert not np.array_equal(a, gen_bandlimited_image(32, 4))
    with pytest.raises(ValueError):
        gen_bandlimited_image(7, 0)


def test_bandlimited_has_less_high_frequency_energy():
    for seed in range(100):
        raw = SplitMix64(seed).uniform(size=(3, 32, 32))
        smooth = gen_bandlimited_image(32, seed).astype(np.float64)
        lap = lambda x: np.var([laplace(c, mode="reflect") for c in x])
        assert lap(smooth) < lap(raw)


def _check_invariants(records):
    for r in records:
        assert isinstance(r, AliasingRecord)
        if r.method == "shear":
            assert r.mean_abs_err == 0.0 and r.max_abs_err == 0.0
        elif r.angle_deg % 90 == 0:
            assert r.mean_abs_err == 0.0
        assert 0 <= r.mean_abs_err <= r.max_abs_err or r.mean_abs_err == r.max_abs_err == 0


def test_bench_small_run():
    imgs = synthetic_images(6, 16, 0)
    recs = bench_aliasing(imgs, [0, 20, 45, 90, 135, 180, 270, 300])
    assert len(recs) == 16
    _check_invariants(recs)
    by = {(r.method, r.angle_deg): r for r in recs}
    assert by[("bilinear", 45.0)].mean_abs_err > 0
    assert all(r.num_images == 6 for r in recs)


def test_bench_mean_is_per_image_l1():
    imgs = synthetic_images(3, 16, 5)
    from equirender.resample import resample_rotate2d
    expect = np.mean([np.mean(np.abs(resample_rotate2d(resample_rotate2d(im, 33.0), -33.0)
                                     - im.astype(np.float64))) for im in imgs])
    rec = [r for r in bench_aliasing(imgs, [33.0]) if r.method == "bilinear"][0]
    assert rec.mean_abs_err == pytest.approx(expect, rel=1e-12)


def test_bench_worker_count_does_not_change_results():
    imgs = synthetic_images(7, 16, 1)
    angles = [0, 15, 45, 100]
    assert aliasing_csv(bench_aliasing(imgs, angles, 1)) == aliasing_csv(bench_aliasing(imgs, angles, 3))


def test_aliasing_csv_format():
    recs = bench_aliasing(synthetic_images(2, 8, 0), [10.0, 0.0])
    lines = aliasing_csv(recs).splitlines()
    assert lines[0] == "angle_deg,method,mean_abs_err,max_abs_err,num_images"
    assert [l.split(",")[:2] for l in lines[1:]] == [
        ["0.0", "bilinear"], ["10.0", "bilinear"], ["0.0", "shear"], ["10.0", "shear"]]
    value = lines[2].split(",")[2]
    assert repr(float(value)) == value


def test_bench_errors(tmp_path):
    with pytest.raises(ValueError):
        bench_aliasing(np.zeros((0, 3, 8, 8)), [0])
    with pytest.raises(FileNotFoundError):
        load_image_dir(tmp_path / "nope")
    with pytest.raises(FileNotFoundError):
        load_image_dir(tmp_path)


def test_load_image_dir(tmp_path):
    imgs = synthetic_images(3, 8, 0)
    for i, im in enumerate(imgs):
        ppm_write(im, tmp_path / f"{i:02d}.ppm")
    back = load_image_dir(tmp_path)
    assert back.shape == (3, 3, 8, 8)
    assert np.abs(back - imgs).max() <= 1 / 510 + 1e-7


def test_resolution_table_and_csv():
    rows = resolution_table([2, 8], step=0.01)
    assert rows[0] == (2, 90.0, None)
    assert rows[1][0] == 8 and abs(rows[1][1] - rows[1][2]) <= 0.01
    text = resolution_csv(rows)
    assert text.splitlines()[0] == "n,formula_deg,bruteforce_deg"
    assert text.splitlines()[1] == "2,90.0,none"
    with pytest.raises(ValueError):
        resolution_table([1])
