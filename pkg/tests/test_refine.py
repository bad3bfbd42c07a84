import numpy as np
import pytest

from vesselfield.distance import signed_distance_from_mask
from vesselfield.energy import EnergyConfig
from vesselfield.phantom import DegradeSpec, degrade, preset, tree_mask
from vesselfield.refine import (
    DegenerateOccupancyWarning,
    RefineConfig,
    RefineTrace,
    init_from_occupancy,
    refine_sdf,
)
from vesselfield.volume import GridSpacing, VoxelVolume, create_volume


def tube_occupancy(noisy=False):
    tree, dims, spacing = preset("tube64")
    mask = tree_mask(tree, dims, spacing)
    if not noisy:
        return mask
    return degrade(mask, DegradeSpec(2, 0.02, 20, 2.0, seed=7))


def test_init_matches_signed_edt():
    mask = tube_occupancy()
    sdf = init_from_occupancy(mask, 0.5)
    want = signed_distance_from_mask(mask)
    assert np.array_equal(sdf.data, want.data)


def test_init_sign_agrees_with_thresholded_mask():
    y = tube_occupancy(noisy=True)
    sdf = init_from_occupancy(y, 0.5)
    assert np.all((sdf.data < 0) == (y.data >= 0.5))


def test_init_degenerate_fallbacks():
    empty = create_volume((8, 8, 8), fill=0.0)
    with pytest.warns(DegenerateOccupancyWarning):
        sdf = init_from_occupancy(empty, 0.5)
    assert np.all(sdf.data == empty.physical_diagonal())

    full = create_volume((8, 8, 8), GridSpacing(0.5, 0.5, 1.0), fill=1.0)
    with pytest.warns(DegenerateOccupancyWarning):
        sdf = init_from_occupancy(full, 0.5)
    assert np.all(sdf.data == -0.5)


def test_init_threshold_validation():
    with pytest.raises(ValueError):
        init_from_occupancy(create_volume((4, 4, 4)), 0.0)


def test_refine_zero_weights_is_stationary():
    rng = np.random.default_rng(1)
    f0 = VoxelVolume(rng.normal(size=(8, 8, 8)), GridSpacing(1, 1, 1))
    y = create_volume((8, 8, 8), fill=0.0)
    cfg = RefineConfig(energy=EnergyConfig().disable(["sdf", "occ", "eik", "gauss", "sur"]))
    out, trace = refine_sdf(f0, y, None, cfg)
    assert np.array_equal(out.data, f0.data)
    assert trace.iterations == [0]
    assert trace.total == [0.0]


def test_refine_near_stationary_at_exact_sdf():
    n = 32
    c = (n - 1) / 2.0
    ii, jj, kk = np.meshgrid(*[np.arange(n, dtype=float)] * 3, indexing="ij")
    f0 = VoxelVolume(np.sqrt((ii - c) ** 2 + (jj - c) ** 2 + (kk - c) ** 2) - 8.0,
                     GridSpacing(1, 1, 1))
    y = f0.with_data((f0.data < 0).astype(float))
    cfg = RefineConfig(
        energy=EnergyConfig().disable(["sdf", "occ", "gauss", "sur"]),
        grad_tol=1e-5,  # stationarity scale of the discretized field
        max_iters=50,
    )
    out, trace = refine_sdf(f0, y, None, cfg)
    assert trace.total[-1] <= trace.total[0]
    assert abs(trace.total[-1] - trace.total[0]) / trace.total[0] <= 1e-3


def test_refine_preserves_grid():
    y = tube_occupancy(noisy=True)
    f0 = init_from_occupancy(y)
    cfg = RefineConfig(max_iters=3, trace_every=1,
                       energy=EnergyConfig.for_spacing(y.spacing))
    out, trace = refine_sdf(f0, y, None, cfg)
    assert out.dims == f0.dims and out.spacing == f0.spacing


def test_refine_trace_monotone_iterations_and_rows():
    y = tube_occupancy(noisy=True)
    f0 = init_from_occupancy(y)
    cfg = RefineConfig(max_iters=25, trace_every=10,
                       energy=EnergyConfig.for_spacing(y.spacing))
    out, trace = refine_sdf(f0, y, None, cfg)
    assert trace.iterations == sorted(trace.iterations)
    assert trace.iterations[0] == 0 and trace.iterations[-1] == 25
    assert all(np.isfinite(trace.total))
    row = trace.row(0)
    assert {"iteration", "total", "grad_sup"} <= set(row)
    assert "sdf" not in trace.terms  # unsupervised: no reference SDF


def test_refine_descent_guarantee_last_not_above_first():
    y = tube_occupancy(noisy=True)
    f0 = init_from_occupancy(y)
    cfg = RefineConfig(max_iters=40, trace_every=20,
                       energy=EnergyConfig.for_spacing(y.spacing))
    _, trace = refine_sdf(f0, y, None, cfg)
    assert trace.total[-1] <= trace.total[0]


def test_refine_fallback_on_non_improvement():
    # a huge step on a near-stationary smooth field increases the energy;
    # the fallback must hand back the input and flag it
    rng = np.random.default_rng(4)
    f0 = VoxelVolume(np.fromfunction(lambda i, j, k: i * 1.0, (12, 12, 12)),
                     GridSpacing(1, 1, 1))
    y = f0.with_data((f0.data < 6).astype(float))
    cfg = RefineConfig(step_size=5.0, max_iters=3, trace_every=1,
                       energy=EnergyConfig.for_spacing(f0.spacing))
    out, trace = refine_sdf(f0, y, None, cfg)
    if trace.non_improved:
        assert np.array_equal(out.data, f0.data)
        assert trace.total[-1] == trace.total[0]
    assert trace.total[-1] <= trace.total[0]


def test_refine_supervised_tracks_reference():
    y = tube_occupancy()
    f_ref = signed_distance_from_mask(y)
    rng = np.random.default_rng(9)
    f0 = f_ref.with_data(f_ref.data + rng.normal(0, 0.5, size=f_ref.dims))
    cfg = RefineConfig(max_iters=100, trace_every=50,
                       energy=EnergyConfig.for_spacing(y.spacing))
    out, trace = refine_sdf(f0, y, f_ref, cfg)
    assert "sdf" in trace.terms
    assert trace.terms["sdf"][-1] < trace.terms["sdf"][0]


def test_refine_config_validation():
    with pytest.raises(ValueError):
        RefineConfig(step_size=0.0)
    with pytest.raises(ValueError):
        RefineConfig(max_iters=0)
    with pytest.raises(ValueError):
        RefineConfig(decay1=1.0)


def test_refine_deterministic():
    y = tube_occupancy(noisy=True)
    f0 = init_from_occupancy(y)
    cfg = RefineConfig(max_iters=10, trace_every=5,
                       energy=EnergyConfig.for_spacing(y.spacing))
    out1, t1 = refine_sdf(f0, y, None, cfg)
    out2, t2 = refine_sdf(f0, y, None, cfg)
    assert np.array_equal(out1.data, out2.data)
    assert t1.total == t2.total
