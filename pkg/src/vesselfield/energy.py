"""Discrete energy terms over an SDF voxel grid: value plus analytic
gradient with respect to every sample.

All terms are means over the voxel domain, so gradients carry a 1/N
factor.  Spatial derivatives for the eikonal penalty are taken in voxel
units (central differences in the interior, one-sided at the ends) with
the anisotropy ratio gamma = dz/dx applied to the z component; the
in-plane spacings are assumed equal and a warning is emitted when they
are not.

The Gaussian blur uses a truncated sampled kernel (radius ceil(3*sigma),
renormalized) with reflect padding.  Under that padding the blur
operator is its own transpose, which keeps the regularizer gradient
exact up to rounding.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from math import ceil

import numpy as np
from scipy.ndimage import correlate1d
from scipy.special import expit

from .volume import GridSpacing, VoxelVolume, check_occupancy, check_same_grid, check_sdf

BCE_EPS = 1e-7

TERM_NAMES = ("sdf", "occ", "eik", "gauss", "sur")


class InPlaneAnisotropyWarning(UserWarning):
    """dx != dy: the eikonal penalty only corrects for dz anisotropy."""


@dataclass(frozen=True)
class EnergyConfig:
    """Weights and scales of the total energy.

    sigma is in voxels; beta (surface suppression sharpness) in 1/mm;
    tau (occupancy temperature) in mm.
    """

    lambda_sdf: float = 0.1
    lambda_occ: float = 0.01
    lambda_eik: float = 0.01
    lambda_gauss: float = 0.1
    lambda_sur: float = 0.1
    sigma: float = 2.0
    beta: float = 2.0
    tau: float = 0.5

    def __post_init__(self):
        for name in ("lambda_sdf", "lambda_occ", "lambda_eik", "lambda_gauss", "lambda_sur"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        for name in ("sigma", "beta", "tau"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @classmethod
    def for_spacing(cls, spacing: GridSpacing, **overrides) -> "EnergyConfig":
        """Defaults with resolution-independent scales: beta decays the
        surface penalty within about one in-plane voxel, tau maps a
        half-voxel signed distance to a confident occupancy."""
        cfg = cls(beta=2.0 / spacing.dx, tau=0.5 * spacing.dx)
        return replace(cfg, **overrides) if overrides else cfg

    def weight(self, term: str) -> float:
        return getattr(self, f"lambda_{term}")

    def disable(self, terms) -> "EnergyConfig":
        """Copy with the given term weights zeroed (ablation switches)."""
        unknown = set(terms) - set(TERM_NAMES)
        if unknown:
            raise ValueError(f"unknown energy terms: {sorted(unknown)}")
        return replace(self, **{f"lambda_{t}": 0.0 for t in terms})


@dataclass
class TermResult:
    value: float
    gradient: np.ndarray


@dataclass
class EnergyResult:
    value: float
    gradient: np.ndarray
    terms: dict  # unweighted value of each active term


def sdf_term(f: VoxelVolume, f_ref: VoxelVolume) -> TermResult:
    """Mean absolute deviation from a reference SDF (subgradient 0 at ties)."""
    check_same_grid(f, f_ref)
    check_sdf(f)
    check_sdf(f_ref)
    diff = f.data - f_ref.data
    n = diff.size
    return TermResult(float(np.mean(np.abs(diff))), np.sign(diff) / n)


def data_term(f: VoxelVolume, y: VoxelVolume, tau: float) -> TermResult:
    """Binary cross-entropy between the SDF-implied occupancy
    o(f) = sigmoid(-f/tau) and an occupancy volume."""
    check_same_grid(f, y)
    check_sdf(f)
    check_occupancy(y)
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")
    o_raw = expit(-f.data / tau)
    o = np.clip(o_raw, BCE_EPS, 1.0 - BCE_EPS)
    yd = y.data
    value = float(np.mean(-(yd * np.log(o) + (1.0 - yd) * np.log1p(-o))))
    active = (o_raw > BCE_EPS) & (o_raw < 1.0 - BCE_EPS)
    grad = np.where(active, (yd - o_raw) / tau, 0.0) / f.num_voxels
    return TermResult(value, grad)


def _diff(f: np.ndarray, axis: int) -> np.ndarray:
    """Voxel-unit derivative: central in the interior, one-sided at the ends."""
    return np.gradient(f, axis=axis)


def _diff_adjoint(w: np.ndarray, axis: int) -> np.ndarray:
    """Transpose of _diff along the same axis."""
    wm = np.moveaxis(w, axis, 0)
    n = wm.shape[0]
    out = np.zeros_like(wm)
    out[2:] += 0.5 * wm[1 : n - 1]
    out[: n - 2] -= 0.5 * wm[1 : n - 1]
    out[0] -= wm[0]
    out[1] += wm[0]
    out[n - 1] += wm[n - 1]
    out[n - 2] -= wm[n - 1]
    return np.moveaxis(out, 0, axis)


def eikonal_residual(f: VoxelVolume) -> np.ndarray:
    """Per-voxel squared deviation of the (anisotropy-corrected) squared
    gradient magnitude from one."""
    if min(f.dims) < 2:
        raise ValueError(f"eikonal term needs at least 2 voxels per axis, got {f.dims}")
    gamma = f.spacing.gamma
    d = f.data
    gx, gy, gz = _diff(d, 0), _diff(d, 1), _diff(d, 2)
    return (gx * gx + gy * gy + (gamma * gz) ** 2 - 1.0) ** 2


def eikonal_term(f: VoxelVolume) -> TermResult:
    """Near-unit-gradient penalty with z derivatives scaled by gamma = dz/dx."""
    if min(f.dims) < 2:
        raise ValueError(f"eikonal term needs at least 2 voxels per axis, got {f.dims}")
    check_sdf(f)
    sp = f.spacing
    if sp.dx != sp.dy:
        warnings.warn(
            f"in-plane spacing differs (dx={sp.dx}, dy={sp.dy}); the eikonal "
            "penalty scales only the z derivative", InPlaneAnisotropyWarning)
    gamma = sp.gamma
    d = f.data
    n = d.size
    gx, gy, gz = _diff(d, 0), _diff(d, 1), _diff(d, 2)
    resid = gx * gx + gy * gy + (gamma * gz) ** 2 - 1.0
    value = float(np.mean(resid * resid))
    scale = 4.0 / n
    grad = (_diff_adjoint(scale * resid * gx, 0)
            + _diff_adjoint(scale * resid * gy, 1)
            + _diff_adjoint(scale * gamma * gamma * resid * gz, 2))
    return TermResult(value, grad)


def _gaussian_kernel(sigma: float) -> np.ndarray:
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    radius = int(ceil(3.0 * sigma))
    t = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (t / sigma) ** 2)
    return k / k.sum()


def gaussian_blur_array(data: np.ndarray, sigma: float) -> np.ndarray:
    """Separable truncated-Gaussian blur with reflect padding (self-transpose)."""
    k = _gaussian_kernel(sigma)
    out = data
    for axis in range(data.ndim):
        out = correlate1d(out, k, axis=axis, mode="reflect", output=np.float64)
    return out


def gaussian_blur_3d(f: VoxelVolume, sigma: float) -> VoxelVolume:
    """Separable 3D Gaussian blur of a volume (sigma in voxels)."""
    return f.with_data(gaussian_blur_array(f.data, sigma))


def gaussian_term(f: VoxelVolume, sigma: float) -> TermResult:
    """Distance-weighted smoothness: mean of |f| * (f - blur(f))^2, smoothing
    aggressively far from the surface and lightly near it."""
    check_sdf(f)
    d = f.data
    n = d.size
    r = d - gaussian_blur_array(d, sigma)
    absf = np.abs(d)
    value = float(np.mean(absf * r * r))
    wr = absf * r
    grad = (np.sign(d) * r * r + 2.0 * (wr - gaussian_blur_array(wr, sigma))) / n
    return TermResult(value, grad)


def surface_term(f: VoxelVolume, beta: float) -> TermResult:
    """Floating-surface suppression: mean of exp(-beta * |f|)."""
    check_sdf(f)
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    d = f.data
    e = np.exp(-beta * np.abs(d))
    return TermResult(float(np.mean(e)), -beta * np.sign(d) * e / d.size)


def total_energy(f: VoxelVolume, y: VoxelVolume | None,
                 f_ref: VoxelVolume | None, cfg: EnergyConfig) -> EnergyResult:
    """Weighted sum of the active terms with analytic gradient.

    A term is active when its weight is positive (the reference term
    additionally requires f_ref, the occupancy term requires y); the
    per-term breakdown reports unweighted values of active terms only.
    """
    parts: dict[str, TermResult] = {}
    if cfg.lambda_sdf > 0 and f_ref is not None:
        parts["sdf"] = sdf_term(f, f_ref)
    if cfg.lambda_occ > 0 and y is not None:
        parts["occ"] = data_term(f, y, cfg.tau)
    if cfg.lambda_eik > 0:
        parts["eik"] = eikonal_term(f)
    if cfg.lambda_gauss > 0:
        parts["gauss"] = gaussian_term(f, cfg.sigma)
    if cfg.lambda_sur > 0:
        parts["sur"] = surface_term(f, cfg.beta)

    value = 0.0
    gradient = np.zeros_like(f.data)
    for name, res in parts.items():
        w = cfg.weight(name)
        value += w * res.value
        gradient += w * res.gradient
    return EnergyResult(value, gradient, {name: res.value for name, res in parts.items()})
