"""Triangulated disk domains and their boundary curves.

The generator seeds concentric rings of nodes, triangulates them with
Delaunay, and relaxes interior nodes with a few Laplacian sweeps.  Boundary
nodes are equally spaced in angle and lie exactly on the circle; they are
numbered last, counter-clockwise, so the FEM trace is a trailing block.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import Delaunay

MIN_ANGLE_DEG = 20.0


@dataclass(frozen=True)
class TriMesh:
    vertices: np.ndarray
    triangles: np.ndarray
    boundary_nodes: np.ndarray
    h: float
    radius: float

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def n_boundary(self) -> int:
        return len(self.boundary_nodes)

    def signed_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        """Unique edges (sorted vertex pairs) and the triangle-to-edge map.

        ``tri_edges[t, k]`` is the edge opposite local vertex ``k``.
        """
        t = self.triangles
        local = np.stack([t[:, [1, 2]], t[:, [2, 0]], t[:, [0, 1]]], axis=1)
        flat = np.sort(local.reshape(-1, 2), axis=1)
        edges, inverse = np.unique(flat, axis=0, return_inverse=True)
        return edges, inverse.reshape(-1, 3)


@dataclass(frozen=True)
class BoundaryGrid:
    """Boundary nodes of a disk mesh, viewed as a closed curve.

    Arc lengths are measured along the circle, not along chords.
    """

    node_positions: np.ndarray
    arc_lengths: np.ndarray
    segments: np.ndarray
    radius: float
    angles: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return len(self.node_positions)

    @property
    def circumference(self) -> float:
        return 2.0 * np.pi * self.radius

    def segment_angles(self) -> tuple[np.ndarray, np.ndarray]:
        """Start angle and (positive) angular width of every segment."""
        a0 = self.angles
        width = np.diff(np.append(a0, a0[0] + 2.0 * np.pi))
        return a0, width

    def is_uniform(self, rtol: float = 1e-12) -> bool:
        _, width = self.segment_angles()
        return bool(np.all(np.abs(width - width.mean()) <= rtol * width.mean()))


def _ring_nodes(radius: float, h: float) -> tuple[np.ndarray, np.ndarray]:
    # floor rounding: halving h always at least doubles the counts
    n_b = max(6, int(np.floor(2.0 * np.pi * radius / h + 1e-9)))
    theta = 2.0 * np.pi * np.arange(n_b) / n_b
    boundary = radius * np.column_stack([np.cos(theta), np.sin(theta)])

    n_rings = max(1, int(np.floor(radius / (0.8 * h) + 1e-9)))
    dr = radius / n_rings
    pts = [np.zeros((1, 2))]
    for k in range(1, n_rings):
        r = k * dr
        n_k = max(6, int(np.ceil(2.0 * np.pi * r / (0.7 * h))))
        phase = 0.5 * (k % 2) * 2.0 * np.pi / n_k
        a = phase + 2.0 * np.pi * np.arange(n_k) / n_k
        pts.append(r * np.column_stack([np.cos(a), np.sin(a)]))
    return np.vstack(pts), boundary


def _triangulate(points: np.ndarray) -> np.ndarray:
    tri = Delaunay(points).simplices.astype(np.int64)
    p = points[tri]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    area = 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
    flip = area < 0
    tri[flip] = tri[flip][:, [0, 2, 1]]
    # cocircular boundary points can leave slivers with zero area
    return tri[np.abs(area) > 1e-14 * points.std() ** 2]


def _smooth(interior: np.ndarray, boundary: np.ndarray, sweeps: int) -> np.ndarray:
    n_i = len(interior)
    for _ in range(sweeps):
        pts = np.vstack([interior, boundary])
        tri = _triangulate(pts)
        e = np.vstack([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]])
        e = np.unique(np.sort(e, axis=1), axis=0)
        acc = np.zeros_like(pts)
        deg = np.zeros(len(pts))
        for a, b in ((0, 1), (1, 0)):
            np.add.at(acc, e[:, a], pts[e[:, b]])
            np.add.at(deg, e[:, a], 1.0)
        interior = acc[:n_i] / deg[:n_i, None]
    return interior


def generate_disk_mesh(radius: float, h: float, smoothing_sweeps: int = 6) -> TriMesh:
    """Triangulate the disk of the given radius with target edge length ``h``."""
    radius = float(radius)
    h = float(h)
    if not (np.isfinite(radius) and np.isfinite(h)):
        raise ValueError("radius and h must be finite")
    if radius <= 0 or h <= 0:
        raise ValueError("radius and h must be positive")
    if h >= radius:
        raise ValueError(f"h={h} must be smaller than radius={radius}")

    interior, boundary = _ring_nodes(radius, h)
    interior = _smooth(interior, boundary, smoothing_sweeps)
    pts = np.vstack([interior, boundary])
    tri = _triangulate(pts)
    n_i = len(interior)
    boundary_nodes = np.arange(n_i, len(pts))
    return TriMesh(pts, tri, boundary_nodes, h, radius)


def extract_boundary(mesh: TriMesh) -> BoundaryGrid:
    pos = mesh.vertices[mesh.boundary_nodes]
    ang = np.unwrap(np.arctan2(pos[:, 1], pos[:, 0]))
    ang = ang - 2.0 * np.pi * np.floor(ang[0] / (2.0 * np.pi))
    n = len(pos)
    arc = mesh.radius * (ang - ang[0])
    seg = np.column_stack([np.arange(n), np.roll(np.arange(n), -1)])
    return BoundaryGrid(pos, arc, seg, mesh.radius, ang)


def triangle_angles(mesh: TriMesh) -> np.ndarray:
    """Interior angles in degrees, shape (n_triangles, 3)."""
    p = mesh.vertices[mesh.triangles]
    out = np.empty((len(p), 3))
    for k in range(3):
        a = p[:, (k + 1) % 3] - p[:, k]
        b = p[:, (k + 2) % 3] - p[:, k]
        cosv = np.einsum("ij,ij->i", a, b) / (np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1))
        out[:, k] = np.degrees(np.arccos(np.clip(cosv, -1.0, 1.0)))
    return out


@dataclass
class MeshReport:
    checks: dict[str, bool]
    min_angle: float
    max_edge: float

    @property
    def ok(self) -> bool:
        return all(self.checks.values())

    def failed(self) -> list[str]:
        return [k for k, v in self.checks.items() if not v]


def validate_mesh(mesh: TriMesh) -> MeshReport:
    """Check every structural and quality invariant of a disk mesh."""
    checks: dict[str, bool] = {}
    checks["positive_area"] = bool(np.all(mesh.signed_areas() > 0))

    bpos = mesh.vertices[mesh.boundary_nodes]
    rad = np.hypot(bpos[:, 0], bpos[:, 1])
    checks["boundary_on_circle"] = bool(np.all(np.abs(rad - mesh.radius) <= 1e-12 * mesh.radius))
    ang = np.unwrap(np.arctan2(bpos[:, 1], bpos[:, 0]))
    steps = np.diff(np.append(ang, ang[0] + 2.0 * np.pi))
    checks["boundary_ccw_simple"] = bool(np.all(steps > 0) and abs(steps.sum() - 2.0 * np.pi) < 1e-9)
    nb = len(mesh.boundary_nodes)
    checks["boundary_trailing"] = bool(
        np.array_equal(mesh.boundary_nodes, np.arange(mesh.n_vertices - nb, mesh.n_vertices))
    )

    edges, tri_edges = mesh.edges()
    count = np.bincount(tri_edges.ravel(), minlength=len(edges))
    checks["edge_manifold"] = bool(count.max() <= 2)
    on_bnd = np.isin(edges, mesh.boundary_nodes).all(axis=1)
    bset = set(map(tuple, np.sort(np.column_stack([mesh.boundary_nodes, np.roll(mesh.boundary_nodes, -1)]), axis=1)))
    is_loop_edge = np.array([tuple(e) in bset for e in edges]) if len(edges) else np.zeros(0, bool)
    checks["boundary_edges_single"] = bool(np.all(count[is_loop_edge] == 1) and np.all(count[~is_loop_edge] == 2))
    checks["loop_edges_present"] = bool(is_loop_edge.sum() == nb and np.all(on_bnd[is_loop_edge]))

    lengths = np.linalg.norm(mesh.vertices[edges[:, 0]] - mesh.vertices[edges[:, 1]], axis=1)
    max_edge = float(lengths.max())
    min_angle = float(triangle_angles(mesh).min())
    checks["max_edge"] = max_edge <= 2.0 * mesh.h
    checks["min_angle"] = min_angle >= MIN_ANGLE_DEG
    return MeshReport(checks, min_angle, max_edge)
