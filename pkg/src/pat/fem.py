"""P2 + cubic bubble finite elements on a disk mesh.

Each triangle carries seven nodal degrees of freedom: three vertices, three
edge midpoints and the centroid.  The basis is Lagrangian on these seven
points, so the seven-point rule with weights 1/20, 2/15, 9/20 (times the
triangle area) lumps the mass matrix to a positive diagonal.

Global numbering: vertices first (mesh order, so boundary vertices are the
trailing vertex block), then edges, then one bubble per triangle.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Callable

import numpy as np
import scipy.sparse as sp
from scipy.special import roots_jacobi, roots_legendre

from .geometry import BoundaryGrid, TriMesh, extract_boundary

# barycentric coordinates of the seven local nodes
LOCAL_NODES = np.array(
    [
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.0, 0.5, 0.5],
        [0.5, 0.0, 0.5],
        [0.5, 0.5, 0.0],
        [1.0 / 3, 1.0 / 3, 1.0 / 3],
    ]
)
LUMPING_WEIGHTS = np.array([1 / 20, 1 / 20, 1 / 20, 2 / 15, 2 / 15, 2 / 15, 9 / 20])


@lru_cache(maxsize=None)
def triangle_rule(degree: int) -> tuple[np.ndarray, np.ndarray]:
    """Collapsed Gauss-Jacobi rule on the reference triangle.

    Returns barycentric points (Q, 3) and weights summing to one; exact for
    polynomials of total degree ``degree``.
    """
    n = degree // 2 + 1
    xa, wa = roots_jacobi(n, 1.0, 0.0)
    xb, wb = roots_legendre(n)
    a = 0.5 * (xa + 1.0)
    b = 0.5 * (xb + 1.0)
    A, B = np.meshgrid(a, b, indexing="ij")
    W = np.outer(wa, wb) / 8.0
    x = A.ravel()
    y = (B * (1.0 - A)).ravel()
    w = 2.0 * W.ravel()
    return np.column_stack([1.0 - x - y, x, y]), w


def basis(lam: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Values (Q, 7) and barycentric derivatives (Q, 7, 3) of the nodal basis."""
    l0, l1, l2 = lam[:, 0], lam[:, 1], lam[:, 2]
    Q = len(lam)
    b = l0 * l1 * l2
    db = np.column_stack([l1 * l2, l0 * l2, l0 * l1])
    val = np.empty((Q, 7))
    der = np.zeros((Q, 7, 3))
    for k in range(3):
        val[:, k] = lam[:, k] * (2 * lam[:, k] - 1) + 3 * b
        der[:, k, k] = 4 * lam[:, k] - 1
        der[:, k, :] += 3 * db
        i, j = (k + 1) % 3, (k + 2) % 3
        val[:, 3 + k] = 4 * lam[:, i] * lam[:, j] - 12 * b
        der[:, 3 + k, i] = 4 * lam[:, j]
        der[:, 3 + k, j] = 4 * lam[:, i]
        der[:, 3 + k, :] -= 12 * db
    val[:, 6] = 27 * b
    der[:, 6, :] = 27 * db
    return val, der


class P2BubbleSpace:
    """Degree-of-freedom layout and geometric factors for one mesh."""

    def __init__(self, mesh: TriMesh):
        self.mesh = mesh
        self.boundary = extract_boundary(mesh)
        nv, nt = mesh.n_vertices, mesh.n_triangles
        edges, tri_edges = mesh.edges()
        self.edges = edges
        ne = len(edges)
        self.n_dofs = nv + ne + nt
        self.tri_dofs = np.column_stack([mesh.triangles, nv + tri_edges, nv + ne + np.arange(nt)])

        p = mesh.vertices[mesh.triangles]
        self.areas = mesh.signed_areas()
        # gradients of barycentric coordinates, (nt, 3, 2)
        d = np.empty((nt, 3, 2))
        for k in range(3):
            e = p[:, (k + 2) % 3] - p[:, (k + 1) % 3]
            d[:, k, 0] = -e[:, 1]
            d[:, k, 1] = e[:, 0]
        self.grad_lambda = d / (2.0 * self.areas[:, None, None])

        coords = np.empty((self.n_dofs, 2))
        coords[:nv] = mesh.vertices
        coords[nv : nv + ne] = 0.5 * (mesh.vertices[edges[:, 0]] + mesh.vertices[edges[:, 1]])
        coords[nv + ne :] = p.mean(axis=1)
        self.dof_coords = coords

        bn = mesh.boundary_nodes
        seg = np.sort(np.column_stack([bn, np.roll(bn, -1)]), axis=1)
        lookup = {tuple(e): i for i, e in enumerate(edges)}
        self.boundary_edge_dofs = nv + np.array([lookup[tuple(s)] for s in seg])
        self.boundary_vertex_dofs = bn.copy()
        on_b = np.zeros(self.n_dofs, bool)
        on_b[self.boundary_vertex_dofs] = True
        on_b[self.boundary_edge_dofs] = True
        self.is_boundary_dof = on_b
        self.interior_dofs = np.flatnonzero(~on_b)
        self.boundary_dofs = np.flatnonzero(on_b)

    @property
    def n_boundary(self) -> int:
        return self.mesh.n_boundary

    def trace(self, coeffs: np.ndarray) -> np.ndarray:
        """P1 boundary trace: values at the boundary vertices (last axis)."""
        return coeffs[..., self.boundary_vertex_dofs]

    def quadrature_points(self, degree: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        lam, w = triangle_rule(degree)
        p = self.mesh.vertices[self.mesh.triangles]
        x = np.einsum("qk,tkd->tqd", lam, p)
        return lam, w, x

    def _assemble(self, local: np.ndarray) -> sp.csr_matrix:
        rows = np.repeat(self.tri_dofs, 7, axis=1).ravel()
        cols = np.tile(self.tri_dofs, (1, 7)).ravel()
        n = self.n_dofs
        return sp.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()

    def physical_gradients(self, lam: np.ndarray) -> np.ndarray:
        _, der = basis(lam)
        return np.einsum("qik,tkd->tqid", der, self.grad_lambda)

    @cached_property
    def stiffness(self) -> sp.csr_matrix:
        return assemble_stiffness(self)


@dataclass
class NodalField:
    space: P2BubbleSpace
    coefficients: np.ndarray

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=float)
        if self.coefficients.shape != (self.space.n_dofs,):
            raise ValueError(
                f"expected {self.space.n_dofs} coefficients, got {self.coefficients.shape}"
            )
        if not np.all(np.isfinite(self.coefficients)):
            raise ValueError("field contains non-finite values")

    @classmethod
    def zeros(cls, space: P2BubbleSpace) -> "NodalField":
        return cls(space, np.zeros(space.n_dofs))

    def __add__(self, other: "NodalField") -> "NodalField":
        _check_same(self, other)
        return NodalField(self.space, self.coefficients + other.coefficients)

    def __sub__(self, other: "NodalField") -> "NodalField":
        _check_same(self, other)
        return NodalField(self.space, self.coefficients - other.coefficients)

    def __mul__(self, a: float) -> "NodalField":
        return NodalField(self.space, a * self.coefficients)

    __rmul__ = __mul__

    def __neg__(self) -> "NodalField":
        return NodalField(self.space, -self.coefficients)

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """Point values; NaN outside the mesh."""
        return evaluate_field(self.space, self.coefficients, points)


def _check_same(a: NodalField, b: NodalField) -> None:
    if a.space is not b.space and a.space.n_dofs != b.space.n_dofs:
        raise ValueError("fields live on different meshes")


SpeedLike = "float | Callable[[np.ndarray], np.ndarray] | object"


def inverse_speed_squared(speed, x: np.ndarray) -> np.ndarray:
    """1/c^2 at points ``x`` (..., 2) for a scalar, callable or SpeedField."""
    if np.isscalar(speed):
        c = np.full(x.shape[:-1], float(speed))
    elif hasattr(speed, "value"):
        c = speed.value(x)
    else:
        c = np.asarray(speed(x), dtype=float)
    if np.any(~np.isfinite(c)) or np.any(c <= 0):
        raise ValueError("sound speed must be finite and positive")
    return 1.0 / c**2


def assemble_weighted_mass(
    space: P2BubbleSpace, speed=1.0, lumped: bool = True, degree: int = 8
) -> sp.csr_matrix:
    """Mass matrix of ``(1/c^2) v w``; row-sum lumped to a diagonal by default.

    The speed is sampled at quadrature points from its analytic definition.
    For the nodal P2+bubble basis the row sums coincide with the seven-point
    lumping weights whenever c is constant.
    """
    lam, w, x = space.quadrature_points(degree)
    val, _ = basis(lam)
    coef = inverse_speed_squared(speed, x) * space.areas[:, None]  # (nt, Q)
    local = np.einsum("tq,q,qi,qj->tij", coef, w, val, val)
    M = space._assemble(local)
    if lumped:
        return sp.diags(np.asarray(M.sum(axis=1)).ravel()).tocsr()
    return M


def assemble_stiffness(space: P2BubbleSpace) -> sp.csr_matrix:
    lam, w = triangle_rule(5)
    g = space.physical_gradients(lam)  # (nt, Q, 7, 2)
    local = np.einsum("t,q,tqid,tqjd->tij", space.areas, w, g, g)
    return space._assemble(local)


def assemble_boundary_mass(space: P2BubbleSpace, boundary: BoundaryGrid | None = None) -> sp.csr_matrix:
    """Coupling ``<lambda, w>`` on the circle: volume dofs x boundary P1 dofs.

    Each chord edge is mapped onto its circular arc with a shared linear
    parameter; the arc-length element is constant along the arc.
    """
    boundary = space.boundary if boundary is None else boundary
    if boundary.n != space.n_boundary or not np.allclose(
        boundary.node_positions, space.mesh.vertices[space.mesh.boundary_nodes], atol=1e-12
    ):
        raise ValueError("boundary grid does not belong to this mesh")
    _, width = boundary.segment_angles()
    ds = boundary.radius * width
    t, wt = roots_legendre(3)
    t = 0.5 * (t + 1.0)
    wt = 0.5 * wt
    p1 = np.column_stack([1 - t, t])  # boundary hats at segment start/end
    p2 = np.column_stack([(1 - t) * (1 - 2 * t), t * (2 * t - 1), 4 * t * (1 - t)])
    local = np.einsum("q,qa,qb->ab", wt, p2, p1)  # (3, 2)
    nb = boundary.n
    j0 = np.arange(nb)
    j1 = np.roll(j0, -1)
    vdofs = space.boundary_vertex_dofs
    rows = np.column_stack([vdofs[j0], vdofs[j1], space.boundary_edge_dofs])
    cols = np.column_stack([j0, j1])
    R = np.repeat(rows, 2, axis=1).ravel()
    C = np.tile(cols, (1, 3)).ravel()
    data = (ds[:, None, None] * local[None]).reshape(nb, -1).ravel()
    return sp.coo_matrix((data, (R, C)), shape=(space.n_dofs, nb)).tocsr()


def boundary_p1_mass(boundary: BoundaryGrid) -> np.ndarray:
    """Dense P1 mass matrix on the circle (arc-length measure)."""
    _, width = boundary.segment_angles()
    ds = boundary.radius * width
    nb = boundary.n
    M = np.zeros((nb, nb))
    i = np.arange(nb)
    j = np.roll(i, -1)
    np.add.at(M, (i, i), ds / 3)
    np.add.at(M, (j, j), ds / 3)
    np.add.at(M, (i, j), ds / 6)
    np.add.at(M, (j, i), ds / 6)
    return M


def project_analytic(fn: Callable[[np.ndarray], np.ndarray], space: P2BubbleSpace) -> NodalField:
    """P2 nodal interpolation; the hierarchical bubble component is zero.

    ``fn`` takes points of shape (n, 2).  The centroid coefficient is set to
    the P2 interpolant's centroid value, so no bubble is added.
    """
    nv = space.mesh.n_vertices
    n_p2 = nv + len(space.edges)
    vals = np.asarray(fn(space.dof_coords[:n_p2]), dtype=float)
    if vals.shape != (n_p2,):
        vals = np.broadcast_to(vals, (n_p2,)).copy()
    if not np.all(np.isfinite(vals)):
        raise ValueError("function is not finite at every node")
    coeffs = np.empty(space.n_dofs)
    coeffs[:n_p2] = vals
    td = space.tri_dofs
    # P2 Lagrange basis at the centroid: vertices -1/9, midpoints 4/9
    coeffs[n_p2:] = (-vals[td[:, :3]].sum(axis=1) + 4.0 * vals[td[:, 3:6]].sum(axis=1)) / 9.0
    return NodalField(space, coeffs)


def h10_inner(f: NodalField, g: NodalField, A: sp.spmatrix | None = None) -> float:
    if f.coefficients.shape != g.coefficients.shape:
        raise ValueError("dimension mismatch")
    A = f.space.stiffness if A is None else A
    if A.shape[0] != f.coefficients.size:
        raise ValueError("dimension mismatch")
    return float(f.coefficients @ (A @ g.coefficients))


def l2_inner(f: NodalField, g: NodalField, M: sp.spmatrix | None = None) -> float:
    M = assemble_weighted_mass(f.space, 1.0, lumped=False) if M is None else M
    return float(f.coefficients @ (M @ g.coefficients))


def _locate(space: P2BubbleSpace, points: np.ndarray) -> np.ndarray:
    from matplotlib.tri import Triangulation

    m = space.mesh
    tri = Triangulation(m.vertices[:, 0], m.vertices[:, 1], m.triangles)
    return tri.get_trifinder()(points[:, 0], points[:, 1])


def evaluate_field(space: P2BubbleSpace, coeffs: np.ndarray, points: np.ndarray) -> np.ndarray:
    points = np.atleast_2d(np.asarray(points, dtype=float))
    idx = _locate(space, points)
    out = np.full(len(points), np.nan)
    ok = idx >= 0
    if not ok.any():
        return out
    t = idx[ok]
    p = space.mesh.vertices[space.mesh.triangles[t]]
    # barycentric coordinates via the constant lambda gradients
    lam = np.empty((len(t), 3))
    for k in range(3):
        lam[:, k] = np.einsum("nd,nd->n", points[ok] - p[:, (k + 1) % 3], space.grad_lambda[t, k])
    val, _ = basis(lam)
    out[ok] = np.einsum("ni,ni->n", val, coeffs[space.tri_dofs[t]])
    return out
