"""Exact anisotropic Euclidean distance transforms on binary masks.

The squared transform is separable: a two-sweep pass along the first
axis seeds per-line distances, then each remaining axis applies the
lower-envelope-of-parabolas pass (O(n) per line) with that axis's
physical spacing.  Results are exact up to floating-point rounding.
Each line is independent, so results do not depend on processing order.
"""

from __future__ import annotations

from math import inf

import numpy as np

from .volume import GridSpacing, VoxelVolume, check_binary


class EmptyMaskError(ValueError):
    """Mask has no foreground voxel, so distances are undefined."""


class DegenerateMaskError(ValueError):
    """Mask is all-foreground or all-background; no surface exists."""


def _binary_axis_pass(mask: np.ndarray, axis: int, h: float) -> np.ndarray:
    """Squared distance (mm^2) to the nearest foreground voxel along one axis."""
    d = np.where(mask, 0.0, inf)
    d = np.moveaxis(d, axis, -1)
    n = d.shape[-1]
    for i in range(1, n):
        np.minimum(d[..., i], d[..., i - 1] + 1.0, out=d[..., i])
    for i in range(n - 2, -1, -1):
        np.minimum(d[..., i], d[..., i + 1] + 1.0, out=d[..., i])
    return np.moveaxis((d * h) ** 2, -1, axis)


def _envelope_line(f: list, xs: list) -> list:
    """Lower envelope pass: out[q] = min_j (f[j] + (x_q - x_j)^2).

    Sites with f == inf are skipped; an all-inf line stays all-inf.
    """
    n = len(f)
    v = [0] * n
    z = [0.0] * (n + 1)
    k = -1
    for q in range(n):
        fq = f[q]
        if fq == inf:
            continue
        xq = xs[q]
        gq = fq + xq * xq
        if k < 0:
            k = 0
            v[0] = q
            z[0] = -inf
            z[1] = inf
            continue
        j = v[k]
        s = (gq - f[j] - xs[j] * xs[j]) / (2.0 * (xq - xs[j]))
        while s <= z[k]:
            k -= 1
            j = v[k]
            s = (gq - f[j] - xs[j] * xs[j]) / (2.0 * (xq - xs[j]))
        k += 1
        v[k] = q
        z[k] = s
        z[k + 1] = inf
    if k < 0:
        return f
    out = [0.0] * n
    ki = 0
    for q in range(n):
        xq = xs[q]
        while z[ki + 1] < xq:
            ki += 1
        j = v[ki]
        dx = xq - xs[j]
        out[q] = dx * dx + f[j]
    return out


def _lower_envelope_pass(d: np.ndarray, axis: int, h: float) -> np.ndarray:
    moved = np.ascontiguousarray(np.moveaxis(d, axis, -1))
    shape = moved.shape
    flat = moved.reshape(-1, shape[-1])
    xs = [i * h for i in range(shape[-1])]
    out = np.empty_like(flat)
    for r in range(flat.shape[0]):
        out[r] = _envelope_line(flat[r].tolist(), xs)
    return np.moveaxis(out.reshape(shape), -1, axis)


def squared_edt_array(mask: np.ndarray, spacing: GridSpacing) -> np.ndarray:
    """Squared distance (mm^2) from every voxel center to the nearest
    foreground voxel center of a boolean mask array."""
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise EmptyMaskError("mask has no foreground voxel")
    d = _binary_axis_pass(mask, 0, spacing.dx)
    d = _lower_envelope_pass(d, 1, spacing.dy)
    d = _lower_envelope_pass(d, 2, spacing.dz)
    return d


def squared_edt(mask: VoxelVolume) -> VoxelVolume:
    """Squared Euclidean distance transform of a binary mask volume."""
    check_binary(mask)
    return mask.with_data(squared_edt_array(mask.data != 0.0, mask.spacing))


def signed_distance_from_mask(mask: VoxelVolume) -> VoxelVolume:
    """Signed distance field of a binary mask: negative inside (mask == 1),
    positive outside, built from the two complementary transforms
    sqrt(edt to foreground) - sqrt(edt to background)."""
    check_binary(mask)
    fg = mask.data != 0.0
    if not fg.any() or fg.all():
        raise DegenerateMaskError(
            "mask must contain both foreground and background voxels")
    d_fg = np.sqrt(squared_edt_array(fg, mask.spacing))
    d_bg = np.sqrt(squared_edt_array(~fg, mask.spacing))
    return mask.with_data(d_fg - d_bg)
