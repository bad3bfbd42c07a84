"""Dense 3D voxel grids with anisotropic physical spacing.

A volume stores its samples in a ``(nx, ny, nz)`` float64 array indexed
``data[i, j, k]``.  The canonical linear order (used by the raw file
format) is x-fastest: linear index ``l = i + nx * (j + ny * k)``, which
is ``data.ravel(order="F")``.  Samples sit at voxel centers, voxel
(0, 0, 0) at the physical origin, so sample (i, j, k) lies at
``(i * dx, j * dy, k * dz)`` mm.

Sign convention for signed distance fields: negative inside the vessel,
positive outside.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class GridSpacing:
    """Physical voxel spacing in mm along each axis (dz = slice thickness)."""

    dx: float
    dy: float
    dz: float

    def __post_init__(self):
        for name in ("dx", "dy", "dz"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"spacing {name} must be positive and finite, got {v}")

    @property
    def gamma(self) -> float:
        """Slice-thickness anisotropy ratio dz/dx (always recomputed)."""
        return self.dz / self.dx

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.dx, self.dy, self.dz)


UNIT_SPACING = GridSpacing(1.0, 1.0, 1.0)


@dataclass
class VoxelVolume:
    """Scalar samples on a regular anisotropic grid.

    Treat instances as immutable once constructed: operations return new
    volumes and never write into a shared ``data`` array, so volumes are
    safe to share across threads.
    """

    data: np.ndarray
    spacing: GridSpacing = field(default=UNIT_SPACING)

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 3:
            raise ValueError(f"volume data must be 3D, got shape {arr.shape}")
        if min(arr.shape) < 1:
            raise ValueError(f"all dimensions must be >= 1, got {arr.shape}")
        self.data = arr

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.data.shape

    @property
    def num_voxels(self) -> int:
        return self.data.size

    def index_to_world(self, ijk) -> np.ndarray:
        """Physical position (mm) of the voxel center at index (i, j, k)."""
        ijk = np.asarray(ijk)
        if np.any(ijk < 0) or np.any(ijk >= self.dims):
            raise ValueError(f"index {tuple(ijk)} out of range for dims {self.dims}")
        return ijk * np.asarray(self.spacing.as_tuple())

    def world_to_nearest_index(self, xyz) -> tuple[int, int, int]:
        """Index of the voxel center nearest to a physical position (mm)."""
        ijk = np.rint(np.asarray(xyz, dtype=np.float64) / self.spacing.as_tuple()).astype(int)
        if np.any(ijk < 0) or np.any(ijk >= self.dims):
            raise ValueError(f"position {tuple(xyz)} maps outside dims {self.dims}")
        return (int(ijk[0]), int(ijk[1]), int(ijk[2]))

    def voxel_centers(self) -> np.ndarray:
        """(nx, ny, nz, 3) array of physical voxel-center coordinates."""
        nx, ny, nz = self.dims
        xs = np.arange(nx) * self.spacing.dx
        ys = np.arange(ny) * self.spacing.dy
        zs = np.arange(nz) * self.spacing.dz
        gx, gy, gz = np.meshgrid(xs, ys, zs, indexing="ij")
        return np.stack([gx, gy, gz], axis=-1)

    def physical_diagonal(self) -> float:
        """Length (mm) of the diagonal of the voxel-center bounding box."""
        nx, ny, nz = self.dims
        return math.sqrt(((nx - 1) * self.spacing.dx) ** 2
                         + ((ny - 1) * self.spacing.dy) ** 2
                         + ((nz - 1) * self.spacing.dz) ** 2)

    def with_data(self, data: np.ndarray) -> "VoxelVolume":
        """New volume with the same grid geometry but different samples."""
        if data.shape != self.dims:
            raise ValueError(f"data shape {data.shape} does not match dims {self.dims}")
        return VoxelVolume(data, self.spacing)

    def copy(self) -> "VoxelVolume":
        return VoxelVolume(self.data.copy(), self.spacing)


def create_volume(dims, spacing: GridSpacing = UNIT_SPACING, fill: float = 0.0) -> VoxelVolume:
    """Volume of the given voxel counts with every sample set to ``fill``."""
    dims = tuple(int(d) for d in dims)
    if len(dims) != 3 or min(dims) < 1:
        raise ValueError(f"dims must be three positive counts, got {dims}")
    return VoxelVolume(np.full(dims, float(fill), dtype=np.float64), spacing)


def check_same_grid(a: VoxelVolume, b: VoxelVolume) -> None:
    if a.dims != b.dims:
        raise ValueError(f"volume dims mismatch: {a.dims} vs {b.dims}")
    if a.spacing != b.spacing:
        raise ValueError(f"volume spacing mismatch: {a.spacing} vs {b.spacing}")


def check_sdf(vol: VoxelVolume) -> None:
    """Signed distance fields must be finite everywhere."""
    if not np.all(np.isfinite(vol.data)):
        raise ValueError("SDF volume contains NaN or infinite samples")


def check_occupancy(vol: VoxelVolume) -> None:
    """Occupancy samples are probabilities in [0, 1]."""
    if not np.all(np.isfinite(vol.data)):
        raise ValueError("occupancy volume contains NaN or infinite samples")
    lo, hi = float(vol.data.min()), float(vol.data.max())
    if lo < 0.0 or hi > 1.0:
        raise ValueError(f"occupancy samples must lie in [0, 1], got range [{lo}, {hi}]")


def check_binary(vol: VoxelVolume) -> None:
    """Binary masks contain exactly 0 or 1."""
    d = vol.data
    if not np.all((d == 0.0) | (d == 1.0)):
        raise ValueError("mask samples must be exactly 0 or 1")
