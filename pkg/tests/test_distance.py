import numpy as np
import pytest

from vesselfield.distance import (
    DegenerateMaskError,
    EmptyMaskError,
    signed_distance_from_mask,
    squared_edt,
)
from vesselfield.volume import GridSpacing, VoxelVolume

from conftest import brute_force_signed_distance, brute_force_sq_edt


def line_mask(values, spacing=GridSpacing(1, 1, 1)):
    return VoxelVolume(np.asarray(values, dtype=float).reshape(-1, 1, 1), spacing)


def test_sq_edt_1d():
    d = squared_edt(line_mask([0, 1, 0]))
    assert np.allclose(d.data.ravel(), [1, 0, 1])


def test_sq_edt_anisotropic_scaling():
    d = squared_edt(line_mask([0, 1, 0], GridSpacing(2, 1, 7)))
    assert np.allclose(d.data.ravel(), [4, 0, 4])


def test_sq_edt_empty_mask():
    with pytest.raises(EmptyMaskError):
        squared_edt(line_mask([0, 0, 0]))


def test_sq_edt_matches_brute_force_on_random_masks():
    rng = np.random.default_rng(7)
    for _ in range(10):
        dims = tuple(rng.integers(2, 17, size=3))
        mask = (rng.random(dims) < 0.3).astype(float)
        if not mask.any():
            mask.flat[0] = 1.0
        spacing = GridSpacing(*rng.uniform(0.4, 3.0, size=3))
        vol = VoxelVolume(mask, spacing)
        got = squared_edt(vol).data
        want = brute_force_sq_edt(mask != 0, spacing)
        assert np.allclose(got, want, rtol=1e-12, atol=1e-12)


def test_signed_distance_1d():
    sdf = signed_distance_from_mask(line_mask([0, 1, 0]))
    assert np.allclose(sdf.data.ravel(), [1, -1, 1])


def test_signed_distance_sphere_center():
    n, r = 32, 8.0
    c = (n - 1) / 2.0
    ii, jj, kk = np.meshgrid(*[np.arange(n)] * 3, indexing="ij")
    dist = np.sqrt((ii - c) ** 2 + (jj - c) ** 2 + (kk - c) ** 2)
    mask = VoxelVolume((dist <= r).astype(float), GridSpacing(1, 1, 1))
    sdf = signed_distance_from_mask(mask)
    center = sdf.data[n // 2, n // 2, n // 2]
    assert abs(center - (-r)) <= 1.0


def test_signed_distance_degenerate():
    with pytest.raises(DegenerateMaskError):
        signed_distance_from_mask(line_mask([1, 1, 1]))
    with pytest.raises(DegenerateMaskError):
        signed_distance_from_mask(line_mask([0, 0, 0]))


def test_signed_distance_matches_brute_force():
    rng = np.random.default_rng(11)
    for _ in range(6):
        dims = tuple(rng.integers(3, 13, size=3))
        mask = (rng.random(dims) < 0.4).astype(float)
        if not mask.any():
            mask.flat[0] = 1.0
        if mask.all():
            mask.flat[0] = 0.0
        spacing = GridSpacing(*rng.uniform(0.4, 2.5, size=3))
        vol = VoxelVolume(mask, spacing)
        got = signed_distance_from_mask(vol).data
        want = brute_force_signed_distance(mask != 0, spacing)
        ref = max(1e-30, float(np.max(np.abs(want))))
        assert float(np.max(np.abs(got - want))) / ref <= 1e-9


def test_sign_consistency():
    rng = np.random.default_rng(3)
    mask = (rng.random((9, 8, 7)) < 0.35).astype(float)
    mask.flat[0] = 1.0
    mask.flat[-1] = 0.0
    vol = VoxelVolume(mask, GridSpacing(0.8, 1.0, 2.0))
    sdf = signed_distance_from_mask(vol).data
    assert np.all((sdf < 0) == (mask != 0))


def test_lipschitz_in_physical_space():
    rng = np.random.default_rng(5)
    mask = (rng.random((10, 9, 8)) < 0.3).astype(float)
    mask.flat[3] = 1.0
    mask.flat[-1] = 0.0
    spacing = GridSpacing(0.7, 1.2, 2.1)
    vol = VoxelVolume(mask, spacing)
    sdf = signed_distance_from_mask(vol)
    pts = vol.num_voxels
    idx = rng.integers(0, pts, size=(400, 2))
    flat = sdf.data.reshape(-1)
    coords = np.stack(np.unravel_index(np.arange(pts), vol.dims), axis=-1)
    world = coords * np.array(spacing.as_tuple())
    for a, b in idx:
        if a == b:
            continue
        lhs = abs(flat[a] - flat[b])
        rhs = np.linalg.norm(world[a] - world[b])
        assert lhs <= rhs + 1e-9
