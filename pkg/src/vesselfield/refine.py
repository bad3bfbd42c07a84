"""SDF refinement: initialize from a fixed occupancy volume, then run
first-order moment-based gradient descent on the grid samples of the
total energy.  The occupancy is data, never an optimization variable.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .distance import signed_distance_from_mask
from .energy import EnergyConfig, total_energy
from .volume import VoxelVolume, check_occupancy, check_same_grid, check_sdf


class DegenerateOccupancyWarning(UserWarning):
    """Thresholded occupancy had no surface; a constant fallback field was used."""


@dataclass(frozen=True)
class RefineConfig:
    """Optimizer settings for grid-sample descent.

    step_size is in mm per iteration (the moment normalization makes the
    update scale-free); decay1/decay2 are the first/second moment decays.
    """

    energy: EnergyConfig = field(default_factory=EnergyConfig)
    step_size: float = 1e-2
    max_iters: int = 500
    grad_tol: float = 1e-9
    decay1: float = 0.9
    decay2: float = 0.999
    eps: float = 1e-8
    trace_every: int = 10

    def __post_init__(self):
        if not self.step_size > 0:
            raise ValueError("step_size must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not (0.0 < self.decay1 < 1.0 and 0.0 < self.decay2 < 1.0):
            raise ValueError("moment decays must lie in (0, 1)")
        if self.trace_every < 1:
            raise ValueError("trace_every must be >= 1")


@dataclass
class RefineTrace:
    """Energies recorded along the descent (iteration 0 is the input field)."""

    iterations: list
    total: list
    terms: dict  # term name -> list of unweighted values, aligned with iterations
    grad_sup: list
    non_improved: bool = False

    def row(self, i: int) -> dict:
        out = {"iteration": self.iterations[i], "total": self.total[i],
               "grad_sup": self.grad_sup[i]}
        out.update({name: vals[i] for name, vals in self.terms.items()})
        return out


def init_from_occupancy(y: VoxelVolume, threshold: float = 0.5) -> VoxelVolume:
    """Signed EDT of the thresholded occupancy (negative inside).

    Degenerate thresholdings fall back to a constant field (positive grid
    diagonal when empty, -dx when full) and emit DegenerateOccupancyWarning.
    """
    check_occupancy(y)
    if not (0.0 < threshold < 1.0):
        raise ValueError(f"threshold must lie in (0, 1), got {threshold}")
    mask = y.data >= threshold
    if not mask.any():
        warnings.warn("occupancy thresholded to empty; returning constant "
                      "background field", DegenerateOccupancyWarning)
        return y.with_data(np.full(y.dims, y.physical_diagonal()))
    if mask.all():
        warnings.warn("occupancy thresholded to all-foreground; returning "
                      "constant interior field", DegenerateOccupancyWarning)
        return y.with_data(np.full(y.dims, -y.spacing.dx))
    return signed_distance_from_mask(y.with_data(mask.astype(np.float64)))


def refine_sdf(f0: VoxelVolume, y: VoxelVolume | None,
               f_ref: VoxelVolume | None = None,
               cfg: RefineConfig | None = None) -> tuple[VoxelVolume, RefineTrace]:
    """Minimize the total energy over the SDF samples.

    Stops at max_iters or when the gradient sup-norm drops below grad_tol.
    Guarantee: if the final energy exceeds the initial one, the input field
    is returned unchanged and the trace is flagged non_improved, so the
    last recorded total never exceeds the first.
    """
    cfg = cfg or RefineConfig()
    check_sdf(f0)
    if y is not None:
        check_same_grid(f0, y)
    if f_ref is not None:
        check_same_grid(f0, f_ref)

    f = f0.data.copy()
    vol = f0.with_data(f)
    m = np.zeros_like(f)
    v = np.zeros_like(f)

    iterations: list = []
    totals: list = []
    grad_sups: list = []
    term_series: dict = {}

    def record(it: int, value: float, terms: dict, gsup: float):
        iterations.append(it)
        totals.append(value)
        grad_sups.append(gsup)
        for name, val in terms.items():
            term_series.setdefault(name, []).append(val)

    final_value = None
    for t in range(cfg.max_iters + 1):
        res = total_energy(vol, y, f_ref, cfg.energy)
        if not np.isfinite(res.value):
            raise FloatingPointError(
                f"non-finite total energy at iteration {t}: "
                + ", ".join(f"{k}={v:.3e}" for k, v in res.terms.items()))
        gsup = float(np.max(np.abs(res.gradient))) if res.gradient.size else 0.0
        stop = t == cfg.max_iters or gsup < cfg.grad_tol
        if t % cfg.trace_every == 0 or stop:
            record(t, res.value, res.terms, gsup)
        if stop:
            final_value = res.value
            break
        m = cfg.decay1 * m + (1.0 - cfg.decay1) * res.gradient
        v = cfg.decay2 * v + (1.0 - cfg.decay2) * res.gradient ** 2
        mhat = m / (1.0 - cfg.decay1 ** (t + 1))
        vhat = v / (1.0 - cfg.decay2 ** (t + 1))
        f -= cfg.step_size * mhat / (np.sqrt(vhat) + cfg.eps)

    trace = RefineTrace(iterations, totals, term_series, grad_sups)
    if final_value > totals[0]:
        # descent guarantee: fall back to the input field and record its
        # (already computed) energy as the final entry
        trace.non_improved = True
        record(iterations[-1] + 1, totals[0], {k: v[0] for k, v in term_series.items()},
               grad_sups[0])
        return f0.copy(), trace
    return vol, trace
