import filecmp

import numpy as np
import pytest

from equirender.equivariance import RelativePose, rotate_scene, sphere_mask
from equirender.rng import SplitMix64
from equirender.shear import angle_resolution
from equirender.synth import (SceneSpec, gen_scene, generate, make_pair, project_ortho,
                              read_dataset, read_pose, write_dataset, write_pose)


def test_splitmix_reference_outputs():
    # published SplitMix64 test vector (seed 1234567)
    r = SplitMix64(1234567)
    assert r.next_u64() == 6457827717110365317
    assert r.next_u64() == 3203168211198807973
    assert list(SplitMix64(1234567).next_u64(2)) == [6457827717110365317, 3203168211198807973]


def test_splitmix_uniform_range():
    u = SplitMix64(9).uniform(-2, 3, size=10000)
    assert u.min() >= -2 and u.max() < 3
    assert abs(u.mean() - 0.5) < 0.05


def test_scene_deterministic():
    spec = SceneSpec(n=8, seed=42)
    assert np.array_equal(gen_scene(spec), gen_scene(spec))
    assert not np.array_equal(gen_scene(spec), gen_scene(SceneSpec(n=8, seed=43)))


@pytest.mark.parametrize("n", [8, 12, 16])
def test_scene_postconditions(n):
    for seed in range(5):
        z = gen_scene(SceneSpec(n=n, seed=seed, num_blobs=4))
        assert z.shape == (4, n, n, n) and z.dtype == np.float32
        outside = ~sphere_mask(n, 0.8)
        assert not z[:, outside].any()
        assert z[0].min() >= 0 and z[0].max() <= 1
        assert z.min() >= 0 and z.max() <= 1
        assert z[0].sum() > 0


def test_scene_not_rotationally_symmetric():
    z = gen_scene(SceneSpec(seed=7))
    assert not np.array_equal(rotate_scene(z, RelativePose(90, 0)), z)


def test_scene_errors():
    with pytest.raises(ValueError):
        gen_scene(SceneSpec(n=7))


def test_project_single_voxel():
    z = np.zeros((4, 8, 8, 8), dtype=np.float32)
    z[:, 3, 2, 5] = [1.0, 0.2, 0.4, 0.6]
    img = project_ortho(z)
    expect = np.zeros((3, 8, 8), dtype=np.float32)
    expect[:, 2, 5] = [0.2, 0.4, 0.6]
    assert np.array_equal(img, expect)


def test_project_occlusion():
    z = np.zeros((4, 8, 8, 8), dtype=np.float32)
    z[:, 1, 0, 0] = [1.0, 1.0, 0.0, 0.0]   # front, red
    z[:, 4, 0, 0] = [1.0, 0.0, 1.0, 0.0]   # behind, green
    assert project_ortho(z)[:, 0, 0].tolist() == [1.0, 0.0, 0.0]


def test_project_partial_transmittance():
    z = np.zeros((4, 8, 8, 8))
    z[:, 0, 0, 0] = [0.5, 1.0, 0.0, 0.0]
    z[:, 1, 0, 0] = [0.5, 0.0, 1.0, 0.0]
    assert project_ortho(z)[:, 0, 0] == pytest.approx([0.5, 0.25, 0.0])


def test_project_transparent_is_black():
    z = np.random.default_rng(0).random((4, 8, 8, 8)).astype(np.float32)
    z[0] = 0
    assert not project_ortho(z).any()


def test_project_upsample_and_errors():
    z = gen_scene(SceneSpec(seed=1))
    small, big = project_ortho(z), project_ortho(z, 2)
    assert big.shape == (3, 16, 16)
    assert np.array_equal(big[:, ::2, ::2], small)
    with pytest.raises(ValueError):
        project_ortho(z[:3])


def test_pair_self_consistency_and_determinism():
    scene = gen_scene(SceneSpec(seed=3))
    a = make_pair(scene, SplitMix64(11), upsample=2)
    b = make_pair(scene, SplitMix64(11), upsample=2)
    assert np.array_equal(a.x1, b.x1) and np.array_equal(a.x2, b.x2) and a.pose == b.pose
    assert np.array_equal(project_ortho(rotate_scene(a.z1, a.pose, "shear"), 2), a.x2)
    assert np.array_equal(project_ortho(a.z1, 2), a.x1)


def test_pose_ranges():
    scene = gen_scene(SceneSpec(seed=3))
    rng = SplitMix64(5)
    for _ in range(50):
        s = make_pair(scene, rng)
        assert -60 <= s.pose.d_elev < 60
        assert -180 <= s.pose.d_azim < 180


def test_zero_pose_gives_identical_views():
    scene = gen_scene(SceneSpec(seed=4))
    z1 = rotate_scene(scene, RelativePose(123.0, 17.0))
    small = RelativePose(0.5 * angle_resolution(8), -0.5 * angle_resolution(8))
    for pose in (RelativePose(0, 0), small):
        assert np.array_equal(project_ortho(rotate_scene(z1, pose)), project_ortho(z1))


def test_pose_csv_round_trip(tmp_path):
    pose = RelativePose(-123.456789012345678, 0.1 + 0.2)
    write_pose(tmp_path / "pose.csv", pose)
    assert (tmp_path / "pose.csv").read_text().splitlines()[0] == "d_azim_deg,d_elev_deg"
    back = read_pose(tmp_path / "pose.csv")
    assert abs(back.d_azim - pose.d_azim) < 1e-12 and abs(back.d_elev - pose.d_elev) < 1e-12


def test_write_dataset_layout_and_determinism(tmp_path):
    m = write_dataset(tmp_path / "a", 2, 3, SceneSpec(), seed=5)
    write_dataset(tmp_path / "b", 2, 3, SceneSpec(), seed=5)
    assert len(m) == 6
    pair_dirs = sorted(p for p in (tmp_path / "a").glob("scene_*/pair_*") if p.is_dir())
    assert len(pair_dirs) == 6
    for d in pair_dirs:
        assert {"x1.tsr", "x2.tsr", "pose.csv"} <= {f.name for f in d.iterdir()}
    rows = (tmp_path / "a" / "manifest.csv").read_text().splitlines()
    assert len(rows) == 7
    cmp = filecmp.dircmp(tmp_path / "a", tmp_path / "b")
    assert not cmp.diff_files and not cmp.left_only and not cmp.right_only
    for d in pair_dirs:
        rel = d.relative_to(tmp_path / "a")
        for f in d.iterdir():
            assert f.read_bytes() == (tmp_path / "b" / rel / f.name).read_bytes()


def test_read_dataset_matches_memory(tmp_path):
    spec = SceneSpec(seed=9)
    write_dataset(tmp_path, 2, 2, spec)
    disk = read_dataset(tmp_path)
    mem = generate(spec, 2, 2)
    for a, b in zip(disk, mem):
        assert np.array_equal(a.x1, b.x1) and np.array_equal(a.x2, b.x2)
        assert a.pose == b.pose


def test_read_dataset_missing(tmp_path):
    with pytest.raises(FileNotFoundError):
        read_dataset(tmp_path)
