"""Zero-level-set triangle mesh extraction and component analysis.

Marching cubes with the standard 256-case table, linear interpolation
along grid edges in physical coordinates, and vertex sharing through
canonical edge keys so the result is independent of cube visit order.
Triangles are wound so normals point toward positive field values
(outward for the negative-inside SDF convention).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .mc_tables import EDGE_TABLE, TRI_TABLE
from .volume import VoxelVolume

# per-cube edge -> (axis, corner-offset of the edge's low end)
_EDGE_GEOMETRY = (
    (0, (0, 0, 0)),  # 0: x edge on the k face
    (1, (1, 0, 0)),  # 1
    (0, (0, 1, 0)),  # 2
    (1, (0, 0, 0)),  # 3
    (0, (0, 0, 1)),  # 4: x edge on the k+1 face
    (1, (1, 0, 1)),  # 5
    (0, (0, 1, 1)),  # 6
    (1, (0, 0, 1)),  # 7
    (2, (0, 0, 0)),  # 8: vertical edges
    (2, (1, 0, 0)),  # 9
    (2, (1, 1, 0)),  # 10
    (2, (0, 1, 0)),  # 11
)


@dataclass
class TriangleMesh:
    """Vertex/triangle soup in physical mm."""

    vertices: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    triangles: np.ndarray = field(default_factory=lambda: np.zeros((0, 3), dtype=np.int64))

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        self.triangles = np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        if len(self.triangles):
            if self.triangles.min() < 0 or self.triangles.max() >= len(self.vertices):
                raise ValueError("triangle indices out of range")
            t = self.triangles
            if np.any((t[:, 0] == t[:, 1]) | (t[:, 1] == t[:, 2]) | (t[:, 0] == t[:, 2])):
                raise ValueError("degenerate triangle (repeated vertex index)")

    @property
    def is_empty(self) -> bool:
        return len(self.triangles) == 0

    def triangle_areas(self) -> np.ndarray:
        v = self.vertices
        t = self.triangles
        if len(t) == 0:
            return np.zeros(0)
        cross = np.cross(v[t[:, 1]] - v[t[:, 0]], v[t[:, 2]] - v[t[:, 0]])
        return 0.5 * np.linalg.norm(cross, axis=1)

    def area(self) -> float:
        return float(self.triangle_areas().sum())

    def signed_volume(self) -> float:
        """Divergence-theorem volume; positive for outward-oriented closed meshes."""
        v = self.vertices
        t = self.triangles
        if len(t) == 0:
            return 0.0
        a, b, c = v[t[:, 0]], v[t[:, 1]], v[t[:, 2]]
        return float(np.einsum("ij,ij->i", a, np.cross(b, c)).sum() / 6.0)


@dataclass
class ComponentReport:
    """Connected components of a mesh: the floating-artifact count."""

    count: int
    triangle_counts: list
    areas: list

    @property
    def total_area(self) -> float:
        return float(sum(self.areas))


def marching_cubes(f: VoxelVolume, iso: float = 0.0) -> TriangleMesh:
    """Extract the iso-surface of a volume as a triangle mesh in mm.

    Samples exactly at iso are nudged up by 1e-9*dx so every cube case is
    unambiguous; a field entirely above or below iso gives an empty mesh.
    """
    if min(f.dims) < 2:
        raise ValueError(f"marching cubes needs at least 2 voxels per axis, got {f.dims}")
    if not np.isfinite(iso):
        raise ValueError(f"iso value must be finite, got {iso}")
    data = f.data
    if np.any(data == iso):
        data = np.where(data == iso, iso + 1e-9 * f.spacing.dx, data)

    inside = (data < iso).astype(np.uint8)
    case = (inside[:-1, :-1, :-1]
            | inside[1:, :-1, :-1] << 1
            | inside[1:, 1:, :-1] << 2
            | inside[:-1, 1:, :-1] << 3
            | inside[:-1, :-1, 1:] << 4
            | inside[1:, :-1, 1:] << 5
            | inside[1:, 1:, 1:] << 6
            | inside[:-1, 1:, 1:] << 7)
    active = np.argwhere(np.asarray(EDGE_TABLE, dtype=np.int32)[case] != 0)
    if len(active) == 0:
        return TriangleMesh()

    sp = np.asarray(f.spacing.as_tuple())
    vertices: list = []
    triangles: list = []
    edge_vertex: dict = {}

    for i, j, k in active:
        cube_case = int(case[i, j, k])
        edge_bits = EDGE_TABLE[cube_case]
        local = [-1] * 12
        for e in range(12):
            if not edge_bits & (1 << e):
                continue
            axis, (oi, oj, ok) = _EDGE_GEOMETRY[e]
            base = (int(i) + oi, int(j) + oj, int(k) + ok)
            key = (axis, *base)
            vid = edge_vertex.get(key)
            if vid is None:
                hi = list(base)
                hi[axis] += 1
                f0 = data[base]
                f1 = data[tuple(hi)]
                t = (iso - f0) / (f1 - f0)
                pos = np.asarray(base) * sp
                pos[axis] += t * sp[axis]
                vid = len(vertices)
                vertices.append(pos)
                edge_vertex[key] = vid
            local[e] = vid
        tri = TRI_TABLE[cube_case]
        for n in range(0, len(tri), 3):
            # table order winds toward the low side; flip for outward normals
            triangles.append((local[tri[n]], local[tri[n + 2]], local[tri[n + 1]]))

    return TriangleMesh(np.asarray(vertices), np.asarray(triangles, dtype=np.int64))


def connected_components(mesh: TriangleMesh) -> ComponentReport:
    """Union-find over shared vertex indices; per-component triangle count
    and surface area (mm^2), largest area first."""
    if mesh.is_empty:
        return ComponentReport(0, [], [])
    n = len(mesh.vertices)
    parent = np.arange(n)

    def find(a: int) -> int:
        root = a
        while parent[root] != root:
            root = parent[root]
        while parent[a] != root:
            parent[a], a = root, parent[a]
        return root

    for t0, t1, t2 in mesh.triangles:
        r0 = find(int(t0))
        r1 = find(int(t1))
        r2 = find(int(t2))
        parent[r1] = r0
        parent[r2] = r0

    areas = mesh.triangle_areas()
    comp_tris: dict = {}
    comp_area: dict = {}
    for idx, tri in enumerate(mesh.triangles):
        root = find(int(tri[0]))
        comp_tris[root] = comp_tris.get(root, 0) + 1
        comp_area[root] = comp_area.get(root, 0.0) + float(areas[idx])
    order = sorted(comp_area, key=lambda r: (-comp_area[r], r))
    return ComponentReport(len(order),
                           [comp_tris[r] for r in order],
                           [comp_area[r] for r in order])


def surface_samples(mesh: TriangleMesh, n: int, seed: int = 0) -> np.ndarray:
    """n points sampled area-uniformly over the mesh, deterministic per seed."""
    if mesh.is_empty:
        raise ValueError("cannot sample points from an empty mesh")
    if n < 1:
        raise ValueError("sample count must be >= 1")
    areas = mesh.triangle_areas()
    total = areas.sum()
    if total <= 0:
        raise ValueError("mesh has zero total area")
    rng = np.random.default_rng(seed)
    tri_idx = rng.choice(len(areas), size=n, p=areas / total)
    u = rng.random(n)
    v = rng.random(n)
    flip = u + v > 1.0
    u[flip] = 1.0 - u[flip]
    v[flip] = 1.0 - v[flip]
    t = mesh.triangles[tri_idx]
    a = mesh.vertices[t[:, 0]]
    b = mesh.vertices[t[:, 1]]
    c = mesh.vertices[t[:, 2]]
    return a + u[:, None] * (b - a) + v[:, None] * (c - a)
