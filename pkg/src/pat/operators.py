"""Forward operator L: f -> y|_Sigma, its adjoint, and data-space utilities."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cq import CQWeightSet, compute_cq_weights
from .fem import NodalField, P2BubbleSpace, boundary_p1_mass
from .geometry import BoundaryGrid, TriMesh
from .io import read_trace, write_trace
from .wavesolver import DirichletSolver, TimeGrid, TransmissionSolver, WaveOperators

BOUNDARY_TOL = 1e-12


@dataclass
class BoundaryTrace:
    values: np.ndarray  # (N+1, n_b), time-major
    dt: float
    arc: np.ndarray  # arc-length coordinate of each boundary node
    radius: float

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2 or self.values.shape[1] != len(self.arc):
            raise ValueError("trace shape does not match the boundary grid")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("trace contains non-finite values")

    @property
    def N(self) -> int:
        return self.values.shape[0] - 1

    @property
    def n_b(self) -> int:
        return self.values.shape[1]

    @property
    def T(self) -> float:
        return self.N * self.dt

    def like(self, values: np.ndarray) -> "BoundaryTrace":
        return BoundaryTrace(values, self.dt, self.arc, self.radius)

    def __add__(self, other: "BoundaryTrace") -> "BoundaryTrace":
        _same_shape(self, other)
        return self.like(self.values + other.values)

    def __sub__(self, other: "BoundaryTrace") -> "BoundaryTrace":
        _same_shape(self, other)
        return self.like(self.values - other.values)

    def __mul__(self, a: float) -> "BoundaryTrace":
        return self.like(a * self.values)

    __rmul__ = __mul__

    def save(self, path) -> None:
        write_trace(path, self.values, self.dt, self.radius)

    @classmethod
    def load(cls, path) -> "BoundaryTrace":
        values, dt, radius = read_trace(path)
        n_b = values.shape[1]
        arc = radius * 2.0 * np.pi * np.arange(n_b) / n_b
        return cls(values, dt, arc, radius)


def _same_shape(a: BoundaryTrace, b: BoundaryTrace) -> None:
    if a.values.shape != b.values.shape:
        raise ValueError(f"trace shapes differ: {a.values.shape} vs {b.values.shape}")


class OperatorSetup:
    """Mesh, speed, time grid, matrices and CQ weights of one discretization."""

    def __init__(
        self,
        mesh: TriMesh,
        speed,
        grid: TimeGrid,
        weights: CQWeightSet | None = None,
        cache_dir=None,
    ):
        self.mesh = mesh
        self.speed = speed
        self.grid = grid
        self.space = P2BubbleSpace(mesh)
        self.boundary: BoundaryGrid = self.space.boundary
        self.ops = WaveOperators(self.space, speed)
        if weights is None:
            weights = compute_cq_weights(self.boundary, grid.N, grid.dt, cache_dir=cache_dir)
        self.weights = weights
        self.solver = TransmissionSolver(self.ops, grid, weights)
        self.dirichlet = DirichletSolver(self.ops)
        self.boundary_mass = boundary_p1_mass(self.boundary)

    @property
    def n_dofs(self) -> int:
        return self.space.n_dofs

    def zero_trace(self) -> BoundaryTrace:
        return self.trace(np.zeros((self.grid.N + 1, self.boundary.n)))

    def trace(self, values: np.ndarray) -> BoundaryTrace:
        return BoundaryTrace(values, self.grid.dt, self.boundary.arc_lengths, self.boundary.radius)

    def field(self, coeffs: np.ndarray) -> NodalField:
        return NodalField(self.space, coeffs)

    def project(self, fn) -> NodalField:
        """Nodal interpolation with boundary dofs set to zero."""
        from .fem import project_analytic

        f = project_analytic(fn, self.space)
        f.coefficients[self.space.boundary_dofs] = 0.0
        return f


def forward_L(f: NodalField, setup: OperatorSetup) -> BoundaryTrace:
    """Boundary trace of the wave started from f with zero velocity."""
    rec = setup.solver.run(_check_source(f, setup))
    return setup.trace(rec.trace)


def _check_source(f, setup: OperatorSetup) -> np.ndarray:
    c = np.asarray(getattr(f, "coefficients", f), dtype=float)
    if c.shape != (setup.n_dofs,):
        raise ValueError("field does not belong to this setup")
    scale = max(float(np.max(np.abs(c))), 1.0)
    bmax = float(np.max(np.abs(c[setup.space.boundary_dofs]))) if c.size else 0.0
    if bmax > BOUNDARY_TOL * scale:
        raise ValueError(f"f must vanish on the boundary (max |f| there = {bmax:.3g})")
    return c


def forward_boundary_values(f: NodalField, setup: OperatorSetup) -> np.ndarray:
    """Like forward_L but keeps every boundary dof, edge midpoints included.

    Shape (N+1, len(space.boundary_dofs)).  Time reversal fed with these
    values undoes the interior march exactly up to the missing final state.
    """
    c = _check_source(f, setup)
    return setup.solver.run(c, full_boundary=True).boundary_values


def adjoint_L(h: BoundaryTrace, setup: OperatorSetup) -> NodalField:
    """L* h: reversed-time transmission solve, then the Dirichlet Riesz map.

    The data enter as the jump of the normal derivative across the boundary.
    With v the reversed-time solution, z'(0) = -v'(T) is taken from a
    second-order one-sided difference and paired with the (1/c^2) mass.
    """
    vals = np.asarray(getattr(h, "values", h), dtype=float)
    N, dt = setup.grid.N, setup.grid.dt
    if vals.shape != (N + 1, setup.boundary.n):
        raise ValueError("trace does not match the setup's time grid and boundary")
    if N < 2:
        raise ValueError("adjoint needs at least two time steps")
    rec = setup.solver.run(np.zeros(setup.n_dofs), rho=vals[::-1])
    v2, v1, v0 = rec.final  # v^{N-2}, v^{N-1}, v^N
    dz0 = -(3.0 * v0 - 4.0 * v1 + v2) / (2.0 * dt)
    load = setup.ops.M @ dz0
    return NodalField(setup.space, setup.dirichlet.poisson(load))


def l2_sigma_inner(a: BoundaryTrace, b: BoundaryTrace, boundary_mass: np.ndarray | None = None) -> float:
    """Trapezoidal rule in time, P1 mass on the circle in space."""
    _same_shape(a, b)
    if boundary_mass is None:
        n_b = a.n_b
        ds = a.radius * 2.0 * np.pi / n_b
        row = np.zeros(n_b)
        row[0] = 2.0 * ds / 3.0
        row[1] += ds / 6.0
        row[-1] += ds / 6.0
        Mb_b = np.fft.irfft(np.fft.rfft(row)[None, :] * np.fft.rfft(b.values, axis=1), n=n_b, axis=1)
    else:
        Mb_b = b.values @ boundary_mass
    w = np.full(a.N + 1, a.dt)
    w[0] *= 0.5
    w[-1] *= 0.5
    return float(np.einsum("t,tj,tj->", w, a.values, Mb_b))


def l2_sigma_norm(a: BoundaryTrace) -> float:
    return float(np.sqrt(max(l2_sigma_inner(a, a), 0.0)))


def add_noise(m: BoundaryTrace, delta: float, seed: int) -> BoundaryTrace:
    """White Gaussian noise rescaled to L2(Sigma) norm exactly ``delta``."""
    if delta < 0:
        raise ValueError("noise level must be non-negative")
    if delta == 0:
        return m.like(m.values.copy())
    rng = np.random.default_rng(seed)
    e = m.like(rng.standard_normal(m.values.shape))
    return m.like(m.values + (delta / l2_sigma_norm(e)) * e.values)


def resample_trace(trace: BoundaryTrace, dst_n_b: int, dst_grid: TimeGrid) -> BoundaryTrace:
    """Bilinear resampling: periodic linear in arc length, linear in time.

    Both boundaries are equally spaced node sets starting at angle 0.
    """
    src = trace.values
    T_src = trace.T
    t_dst = dst_grid.times
    if t_dst[-1] > T_src * (1 + 1e-12) + 1e-14:
        raise ValueError(f"destination time {t_dst[-1]:.6g} exceeds source span {T_src:.6g}")
    # time
    u = np.clip(t_dst / trace.dt, 0.0, trace.N)
    i0 = np.minimum(np.floor(u).astype(int), trace.N - 1) if trace.N > 0 else np.zeros_like(u, int)
    a = u - i0
    if trace.N > 0:
        in_time = (1 - a)[:, None] * src[i0] + a[:, None] * src[i0 + 1]
    else:
        in_time = np.repeat(src, len(t_dst), axis=0)
    # space
    n_src = trace.n_b
    phi = np.arange(dst_n_b) * n_src / dst_n_b
    j0 = np.floor(phi).astype(int) % n_src
    b = phi - np.floor(phi)
    out = (1 - b)[None, :] * in_time[:, j0] + b[None, :] * in_time[:, (j0 + 1) % n_src]
    exact = np.isclose(b, 0.0, atol=1e-13)
    out[:, exact] = in_time[:, j0[exact]]
    arc = trace.radius * 2.0 * np.pi * np.arange(dst_n_b) / dst_n_b
    return BoundaryTrace(out, dst_grid.dt, arc, trace.radius)


def adjoint_mismatch(setup: OperatorSetup, f: NodalField, h: BoundaryTrace) -> float:
    """|<Lf, h> - <f, L*h>| / (|Lf| |h|)."""
    Lf = forward_L(f, setup)
    Lh = adjoint_L(h, setup)
    lhs = l2_sigma_inner(Lf, h)
    rhs = float(f.coefficients @ (setup.ops.A @ Lh.coefficients))
    return abs(lhs - rhs) / (l2_sigma_norm(Lf) * l2_sigma_norm(h))


def smooth_probe_pair(setup: OperatorSetup, seed: int = 0) -> tuple[NodalField, BoundaryTrace]:
    """A smooth field vanishing on the circle and a smooth trace, both seeded.

    f = (1 - |x|^2)^2 * sum a_ij cos(i pi x + 0.3) cos(j pi y - 0.2), i, j < 3;
    h = sum b_kl cos(k theta + phi_kl) sin(l pi t / T + psi_kl), k < 4, 1 <= l < 4.
    """
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((3, 3))

    def fn(x):
        w = np.clip(1.0 - (x**2).sum(-1), 0.0, None) ** 2
        s = sum(
            a[i, j] * np.cos(i * np.pi * x[..., 0] + 0.3) * np.cos(j * np.pi * x[..., 1] - 0.2)
            for i in range(3)
            for j in range(3)
        )
        return w * s

    rng = np.random.default_rng(seed + 100)
    t = setup.grid.times[:, None]
    theta = 2.0 * np.pi * np.arange(setup.boundary.n) / setup.boundary.n
    T = setup.grid.T
    v = np.zeros((t.size, theta.size))
    for k in range(4):
        for l in range(1, 4):
            b = rng.standard_normal()
            phi = rng.uniform(0.0, 6.0)
            psi = rng.uniform(0.0, 3.0)
            v += b * np.cos(k * theta + phi)[None, :] * np.sin(l * np.pi * t / T + psi)
    return setup.project(fn), setup.trace(v)
