"""Variational signed-distance-field reconstruction of vascular surfaces
from noisy, slice-sparse binary occupancy volumes."""

from .volume import (
    GridSpacing,
    UNIT_SPACING,
    VoxelVolume,
    check_binary,
    check_occupancy,
    check_sdf,
    create_volume,
)
from .distance import (
    DegenerateMaskError,
    EmptyMaskError,
    signed_distance_from_mask,
    squared_edt,
)

__version__ = "0.1.0"
