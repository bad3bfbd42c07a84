"""Shared oracles and helpers for the test suite.

Oracles here are deliberately naive (brute force, direct convolution,
central finite differences) and independent of the library's fast paths.
"""

from __future__ import annotations

import numpy as np

from vesselfield.volume import GridSpacing, VoxelVolume


def voxel_centers_mm(dims, spacing: GridSpacing) -> np.ndarray:
    """(N, 3) physical centers of every voxel, x-fastest order irrelevant."""
    nx, ny, nz = dims
    ii, jj, kk = np.meshgrid(np.arange(nx), np.arange(ny), np.arange(nz), indexing="ij")
    pts = np.stack([ii * spacing.dx, jj * spacing.dy, kk * spacing.dz], axis=-1)
    return pts.reshape(-1, 3)


def brute_force_sq_edt(mask: np.ndarray, spacing: GridSpacing) -> np.ndarray:
    """O(n^2) squared distance to the nearest foreground voxel center."""
    mask = np.asarray(mask, dtype=bool)
    pts = voxel_centers_mm(mask.shape, spacing)
    fg = pts[mask.reshape(-1)]
    assert len(fg) > 0
    out = np.empty(pts.shape[0])
    for i, p in enumerate(pts):
        d = fg - p
        out[i] = np.min(np.einsum("ij,ij->i", d, d))
    return out.reshape(mask.shape)


def brute_force_signed_distance(mask: np.ndarray, spacing: GridSpacing) -> np.ndarray:
    """Brute-force two-sided signed distance, negative inside."""
    mask = np.asarray(mask, dtype=bool)
    d_fg = np.sqrt(brute_force_sq_edt(mask, spacing))
    d_bg = np.sqrt(brute_force_sq_edt(~mask, spacing))
    return d_fg - d_bg


def central_fd_gradient(value_fn, f: np.ndarray, step: float | None = None) -> np.ndarray:
    """Central finite-difference gradient of a scalar functional of a volume."""
    if step is None:
        step = 1e-4 * max(1.0, float(np.max(np.abs(f))))
    grad = np.empty_like(f)
    it = np.nditer(f, flags=["multi_index"])
    while not it.finished:
        idx = it.multi_index
        fp = f.copy()
        fp[idx] += step
        fm = f.copy()
        fm[idx] -= step
        grad[idx] = (value_fn(fp) - value_fn(fm)) / (2.0 * step)
        it.iternext()
    return grad


def rel_err(a: np.ndarray, b: np.ndarray) -> float:
    """Relative error of a against reference b under the sup norm."""
    denom = max(float(np.max(np.abs(b))), 1e-30)
    return float(np.max(np.abs(a - b))) / denom


def random_volume(rng, dims, spacing=None, lo=-2.0, hi=2.0) -> VoxelVolume:
    spacing = spacing or GridSpacing(1.0, 1.0, 1.0)
    return VoxelVolume(rng.uniform(lo, hi, size=dims), spacing)
