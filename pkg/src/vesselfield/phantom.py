"""Synthetic ground-truthed vascular phantoms: capsule-tree SDFs plus a
degradation model for sparse, noisy acquisition.

Randomness is a pure function of (seed, counter) so phantoms are
reproducible bit-exactly on any platform.  The generator is splitmix64:

    state(k) = (seed + (k + 1) * 0x9E3779B97F4A7C15) mod 2^64
    mix(z):   z ^= z >> 30;  z *= 0xBF58476D1CE4E5B9
              z ^= z >> 27;  z *= 0x94D049BB133111EB
              z ^= z >> 31
    u01(k) = (mix(state(k)) >> 11) * 2^-53

Independent streams (voxel flips, speckle placement) use sub-seeds drawn
from the root sequence at fixed counters.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .volume import GridSpacing, VoxelVolume, check_binary

_SM_INC = np.uint64(0x9E3779B97F4A7C15)
_SM_M1 = np.uint64(0xBF58476D1CE4E5B9)
_SM_M2 = np.uint64(0x94D049BB133111EB)


def _mix64(z: np.ndarray) -> np.ndarray:
    # mod-2^64 wraparound is the point of the mixing arithmetic
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _SM_M1
        z = (z ^ (z >> np.uint64(27))) * _SM_M2
        return z ^ (z >> np.uint64(31))


def counter_uniforms(seed: int, start: int, count: int) -> np.ndarray:
    """Uniform [0,1) values at counters start .. start+count-1."""
    k = np.arange(start, start + count, dtype=np.uint64)
    with np.errstate(over="ignore"):
        state = np.uint64(seed & 0xFFFFFFFFFFFFFFFF) + (k + np.uint64(1)) * _SM_INC
    return (_mix64(state) >> np.uint64(11)) * 2.0 ** -53


def _stream_seed(seed: int, stream: int) -> int:
    """Sub-seed for an independent stream, drawn from the root sequence."""
    k = np.uint64(stream)
    with np.errstate(over="ignore"):
        state = np.uint64(seed & 0xFFFFFFFFFFFFFFFF) + (k + np.uint64(1)) * _SM_INC
    return int(_mix64(state))


@dataclass
class CenterlineTree:
    """Vascular centerline: node positions (mm), tree edges, per-node radii (mm)."""

    nodes: np.ndarray
    edges: np.ndarray
    radii: np.ndarray

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=np.float64).reshape(-1, 3)
        self.edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        self.radii = np.asarray(self.radii, dtype=np.float64).reshape(-1)
        n, m = len(self.nodes), len(self.edges)
        if len(self.radii) != n:
            raise ValueError("one radius per node required")
        if not np.all(self.radii > 0):
            raise ValueError("all radii must be positive")
        if m < 1:
            raise ValueError("tree needs at least one edge")
        if np.any(self.edges < 0) or np.any(self.edges >= n):
            raise ValueError("edge indices out of range")
        if m != n - 1 or not self._connected():
            raise ValueError("edges must form a connected acyclic tree")

    def _connected(self) -> bool:
        parent = list(range(len(self.nodes)))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for a, b in self.edges:
            ra, rb = find(int(a)), find(int(b))
            if ra == rb:
                return False
            parent[ra] = rb
        return len({find(i) for i in range(len(self.nodes))}) == 1

    def endpoints(self) -> np.ndarray:
        """Indices of degree-1 nodes."""
        deg = np.zeros(len(self.nodes), dtype=int)
        for a, b in self.edges:
            deg[a] += 1
            deg[b] += 1
        return np.flatnonzero(deg == 1)


@dataclass(frozen=True)
class DegradeSpec:
    """Acquisition degradation: keep every k-th axial slice, flip kept
    voxels with a small probability, add spurious foreground balls."""

    keep_every_k_slices: int = 1
    flip_probability: float = 0.0
    speckle_count: int = 0
    speckle_radius: float = 2.0
    seed: int = 0

    def __post_init__(self):
        if self.keep_every_k_slices < 1:
            raise ValueError("keep_every_k_slices must be >= 1")
        if not (0.0 <= self.flip_probability < 0.5):
            raise ValueError("flip_probability must be in [0, 0.5)")
        if self.speckle_count < 0:
            raise ValueError("speckle_count must be >= 0")
        if self.speckle_count > 0 and not self.speckle_radius > 0:
            raise ValueError("speckle_radius must be positive")


def tree_sdf(tree: CenterlineTree, dims, spacing: GridSpacing) -> VoxelVolume:
    """Signed distance to the union of tapered capsules along the tree edges
    (distance to segment minus the radius lerped at the closest point)."""
    dims = tuple(int(d) for d in dims)
    if min(dims) < 1:
        raise ValueError(f"dims must be positive, got {dims}")
    extent = (np.array(dims) - 1) * np.array(spacing.as_tuple())
    if np.any(tree.nodes < -1e-9) or np.any(tree.nodes > extent + 1e-9):
        raise ValueError("tree nodes lie outside the voxel-center bounding box")

    nx, ny, nz = dims
    xs = np.arange(nx) * spacing.dx
    ys = np.arange(ny) * spacing.dy
    zs = np.arange(nz) * spacing.dz
    gx, gy, gz = np.meshgrid(xs, ys, zs, indexing="ij")
    pts = np.stack([gx, gy, gz], axis=-1).reshape(-1, 3)

    best = np.full(pts.shape[0], np.inf)
    for a, b in tree.edges:
        pa, pb = tree.nodes[a], tree.nodes[b]
        ra, rb = tree.radii[a], tree.radii[b]
        ab = pb - pa
        denom = float(ab @ ab)
        rel = pts - pa
        t = np.clip(rel @ ab / denom, 0.0, 1.0) if denom > 0 else np.zeros(len(pts))
        closest = pa + t[:, None] * ab
        dist = np.linalg.norm(pts - closest, axis=1)
        np.minimum(best, dist - (ra + t * (rb - ra)), out=best)
    return VoxelVolume(best.reshape(dims), spacing)


def tree_mask(tree: CenterlineTree, dims, spacing: GridSpacing) -> VoxelVolume:
    """Binary occupancy of the tree: 1 strictly inside the capsule union."""
    sdf = tree_sdf(tree, dims, spacing)
    return sdf.with_data((sdf.data < 0.0).astype(np.float64))


def degrade(mask: VoxelVolume, spec: DegradeSpec) -> VoxelVolume:
    """Simulated sparse, noisy acquisition of a clean binary mask.

    Axial slices whose index is not divisible by keep_every_k_slices are
    zeroed; kept slices receive i.i.d. label flips and spurious foreground
    balls (speckles, radius in voxels).  Deterministic in spec.seed.
    """
    check_binary(mask)
    nx, ny, nz = mask.dims
    out = mask.data.copy()

    if spec.flip_probability > 0.0:
        u = counter_uniforms(_stream_seed(spec.seed, 0), 0, out.size)
        flips = (u < spec.flip_probability).reshape(mask.dims, order="F")
        out = np.where(flips, 1.0 - out, out)

    if spec.speckle_count > 0:
        u = counter_uniforms(_stream_seed(spec.seed, 1), 0, 3 * spec.speckle_count)
        centers = np.floor(u.reshape(-1, 3) * np.array([nx, ny, nz])).astype(int)
        centers = np.minimum(centers, np.array([nx, ny, nz]) - 1)
        r = spec.speckle_radius
        ri = int(np.ceil(r))
        for cx, cy, cz in centers:
            x0, x1 = max(cx - ri, 0), min(cx + ri, nx - 1)
            y0, y1 = max(cy - ri, 0), min(cy + ri, ny - 1)
            z0, z1 = max(cz - ri, 0), min(cz + ri, nz - 1)
            ii, jj, kk = np.meshgrid(np.arange(x0, x1 + 1), np.arange(y0, y1 + 1),
                                     np.arange(z0, z1 + 1), indexing="ij")
            ball = (ii - cx) ** 2 + (jj - cy) ** 2 + (kk - cz) ** 2 <= r * r
            region = out[x0:x1 + 1, y0:y1 + 1, z0:z1 + 1]
            region[ball] = 1.0

    if spec.keep_every_k_slices > 1:
        dropped = np.arange(nz) % spec.keep_every_k_slices != 0
        out[:, :, dropped] = 0.0
    return mask.with_data(out)


def preset(name: str) -> tuple[CenterlineTree, tuple[int, int, int], GridSpacing]:
    """Built-in phantoms.

    tube64:    64^3 isotropic grid, one slanted tube crossing both z faces.
    ybranch96: 96x96x48 grid with 2 mm slices (gamma = 2); a trunk entering
               the bottom face that bifurcates into two tapering arms ending
               on the top face (3 endpoints on grid faces).
    """
    if name == "tube64":
        tree = CenterlineTree(
            nodes=[[24.0, 28.0, 0.0], [40.0, 36.0, 63.0]],
            edges=[[0, 1]],
            radii=[5.0, 5.0],
        )
        return tree, (64, 64, 64), GridSpacing(1.0, 1.0, 1.0)
    if name == "ybranch96":
        tree = CenterlineTree(
            nodes=[[48.0, 48.0, 0.0], [48.0, 48.0, 48.0],
                   [24.0, 48.0, 94.0], [72.0, 48.0, 94.0]],
            edges=[[0, 1], [1, 2], [1, 3]],
            radii=[5.0, 5.0, 3.5, 3.5],
        )
        return tree, (96, 96, 48), GridSpacing(1.0, 1.0, 2.0)
    raise ValueError(f"unknown phantom preset: {name!r}")


PRESET_NAMES = ("tube64", "ybranch96")
