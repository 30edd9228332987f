"""Time marching for the wave equation on the disk.

``TransmissionSolver`` couples the interior leapfrog scheme with the
convolution-quadrature boundary equation on the circle,

    M v'' + A v - B lam = 0,
    1/2 v + V[lam + rho] - K[v] = 0   on the boundary,

where lam is the interior normal derivative and rho its jump across the
boundary.  The boundary equation is tested with P1 hats and sees the
interior field through the L2 projection Mb^{-1} B^T v of its quadratic
trace, so that the coupling terms pair exactly as in the energy identity.
(Using vertex values instead excites a slowly growing low-frequency mode.)
All weight matrices are circulant; every boundary solve is a division in
the discrete Fourier basis.

The explicit coupling needs dt <= h/14 on the boundary, a little stricter
than the interior leapfrog limit.

The module also holds the interior Dirichlet march used by time reversal
and the two elliptic solves.
"""
from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import factorized

from .cq import CQWeightSet, compute_cq_weights
from .fem import (
    NodalField,
    P2BubbleSpace,
    assemble_boundary_mass,
    assemble_stiffness,
    assemble_weighted_mass,
    boundary_p1_mass,
)

log = logging.getLogger(__name__)

BLOWUP_FACTOR = 1e6


class InstabilityError(FloatingPointError):
    """The time march produced non-finite or exploding values."""


@dataclass(frozen=True)
class TimeGrid:
    T: float
    N: int

    def __post_init__(self):
        if not (np.isfinite(self.T) and self.T > 0):
            raise ValueError("T must be positive")
        if int(self.N) < 1:
            raise ValueError("N must be at least 1")

    @property
    def dt(self) -> float:
        return self.T / self.N

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.N + 1)

    @classmethod
    def from_step(cls, T: float, dt: float) -> "TimeGrid":
        """Grid with N = ceil(T / dt) steps covering [0, T]."""
        N = int(np.ceil(T / dt - 1e-9))
        return cls(T, N)

    def check_stability(self, h: float, c_max: float, ratio: float = 0.1) -> None:
        if self.dt * c_max > ratio * h * (1 + 1e-12):
            raise ValueError(
                f"time step {self.dt:.4g} too large: dt*c_max = {self.dt * c_max:.4g} > {ratio}*h = {ratio * h:.4g}"
            )


@dataclass
class SolveRecord:
    trace: np.ndarray  # (N+1, n_b) boundary vertex values of v
    lam: np.ndarray  # (N+1, n_b) interior normal derivative
    final: tuple[np.ndarray, np.ndarray, np.ndarray]  # v^{N-2}, v^{N-1}, v^N
    dt: float
    energy: np.ndarray | None = None
    max_abs: np.ndarray | None = None
    snapshots: dict[int, np.ndarray] = field(default_factory=dict)
    boundary_values: np.ndarray | None = None  # (N+1, all boundary dofs) when requested

    @property
    def N(self) -> int:
        return self.trace.shape[0] - 1

    def write_diagnostics(self, path) -> None:
        if self.energy is None:
            raise ValueError("solve was run without energy tracking")
        t = self.dt * np.arange(len(self.energy))
        with open(path, "w") as fh:
            fh.write("step,time,energy,max_abs_v\n")
            for n, (tn, e, m) in enumerate(zip(t, self.energy, self.max_abs)):
                fh.write(f"{n},{tn:.17g},{e:.17g},{m:.17g}\n")


def interior_energy(v_prev, v_next, M, A, dt: float) -> float:
    """Discrete energy at the half step between two consecutive snapshots.

    Uses y' = (v_next - v_prev)/dt and the product v_next^T A v_prev, the
    form conserved exactly by the leapfrog scheme.
    """
    a = getattr(v_prev, "coefficients", v_prev)
    b = getattr(v_next, "coefficients", v_next)
    d = (b - a) / dt
    return float(d @ (M @ d) + b @ (A @ a))


def _amplitude_guard(v: np.ndarray, ref: float, n: int) -> float:
    amax = float(np.max(np.abs(v))) if v.size else 0.0
    if not np.isfinite(amax) or amax > BLOWUP_FACTOR * ref:
        raise InstabilityError(f"time march blew up at step {n} (max |v| = {amax:.3g})")
    return amax


class WaveOperators:
    """Mesh matrices shared by all time marches on one (mesh, speed) pair."""

    def __init__(self, space: P2BubbleSpace, speed=1.0):
        self.space = space
        self.speed = speed
        self.M = assemble_weighted_mass(space, speed, lumped=True)
        self.m_diag = self.M.diagonal()
        self.A = space.stiffness if hasattr(space, "stiffness") else assemble_stiffness(space)
        self.B = assemble_boundary_mass(space)
        self.BT = self.B.T.tocsr()
        self._interior = None

    def interior_blocks(self):
        if self._interior is None:
            I = self.space.interior_dofs
            A = self.A.tocsr()
            self._interior = (A[I][:, I].tocsc(), A[I][:, self.space.boundary_dofs].tocsr())
        return self._interior

    def energy(self, v_prev, v_next, dt: float) -> float:
        return interior_energy(v_prev, v_next, self.M, self.A, dt)


class TransmissionSolver:
    """Explicit FEM march with a convolution-quadrature transparent boundary."""

    def __init__(self, ops: WaveOperators, grid: TimeGrid, weights: CQWeightSet | None = None):
        self.ops = ops
        self.grid = grid
        bnd = ops.space.boundary
        if weights is None:
            weights = compute_cq_weights(bnd, grid.N, grid.dt)
        if weights.N < grid.N or weights.n_b != bnd.n or abs(weights.dt - grid.dt) > 1e-14 * grid.dt:
            raise ValueError("CQ weights do not match the time grid or boundary")
        self.weights = weights
        self.n_b = bnd.n

    def run(
        self,
        v0: np.ndarray | NodalField,
        rho: np.ndarray | None = None,
        track_energy: bool = False,
        snapshot_steps=(),
        reflecting: bool = False,
        full_boundary: bool = False,
    ) -> SolveRecord:
        ops, grid = self.ops, self.grid
        N, dt = grid.N, grid.dt
        nb = self.n_b
        v0 = np.asarray(getattr(v0, "coefficients", v0), dtype=float)
        if v0.shape != (ops.space.n_dofs,):
            raise ValueError("initial field has the wrong size")
        if rho is None:
            rho = np.zeros((N + 1, nb))
        rho = np.asarray(getattr(rho, "values", rho), dtype=float)
        if rho.shape != (N + 1, nb):
            raise ValueError(f"rho must have shape {(N + 1, nb)}, got {rho.shape}")

        bdofs = ops.space.boundary_vertex_dofs
        minv = dt * dt / ops.m_diag
        A, B, BT = ops.A, ops.B, ops.BT
        ev, ek = self.weights.eig_v, self.weights.eig_k
        ev0 = ev[0]
        nf = ev.shape[1]
        phi_hat = np.zeros((N + 1, nf), complex)
        vb_hat = np.zeros((N + 1, nf), complex)
        rho_hat = np.fft.rfft(rho, axis=1)
        mb_eig = np.fft.rfft(boundary_p1_mass(ops.space.boundary)[0]).real

        trace = np.zeros((N + 1, nb))
        lam = np.zeros((N + 1, nb))
        all_bd = ops.space.boundary_dofs
        bvals = np.zeros((N + 1, all_bd.size)) if full_boundary else None
        energy = np.zeros(N + 1) if track_energy else None
        max_abs = np.zeros(N + 1) if track_energy else None
        snaps = {}
        want = set(int(s) for s in snapshot_steps)

        ref = max(float(np.max(np.abs(v0))), float(np.max(np.abs(rho))), 1e-300)
        v_prev = None
        v = v0.copy()
        ring = deque(maxlen=3)
        for n in range(N + 1):
            if n in want:
                snaps[n] = v.copy()
            vb = v[bdofs]
            trace[n] = vb
            if full_boundary:
                bvals[n] = v[all_bd]
            if not reflecting:
                bt_hat = np.fft.rfft(BT @ v)
                vb_hat[n] = bt_hat / mb_eig
                rhs = -0.5 * bt_hat
                rhs += np.einsum("jk,jk->k", ek[n::-1], vb_hat[: n + 1])
                if n:
                    rhs -= np.einsum("jk,jk->k", ev[n:0:-1], phi_hat[:n])
                phi_hat[n] = rhs / ev0
                lam[n] = np.fft.irfft(phi_hat[n] - rho_hat[n], n=nb)
            amax = _amplitude_guard(v, ref, n)
            if track_energy:
                max_abs[n] = amax
            ring.append(v)
            if n == N:
                break
            force = -(A @ v) + B @ lam[n]
            if v_prev is None:
                v_next = v + 0.5 * minv * force
            else:
                v_next = 2.0 * v - v_prev + minv * force
            if track_energy:
                energy[n] = ops.energy(v, v_next, dt)
            v_prev, v = v, v_next
        if track_energy:
            # energy at the last half step is not available; repeat the previous one
            energy[N] = energy[N - 1] if N >= 1 else 0.0
        while len(ring) < 3:
            ring.appendleft(ring[0])
        return SolveRecord(trace, lam, tuple(ring), dt, energy, max_abs, snaps, bvals)


def solve_transmission(
    space: P2BubbleSpace,
    speed,
    v0,
    rho,
    grid: TimeGrid,
    weights: CQWeightSet | None = None,
    track_energy: bool = False,
) -> SolveRecord:
    """One transmission march; builds the matrices and weights on the fly."""
    solver = TransmissionSolver(WaveOperators(space, speed), grid, weights)
    return solver.run(v0, rho, track_energy=track_energy)


def solve_reflecting(ops: WaveOperators, v0, grid: TimeGrid, track_energy: bool = True) -> SolveRecord:
    """Interior leapfrog with homogeneous Neumann data (lam = 0), no boundary integrals."""
    N, dt = grid.N, grid.dt
    v = np.asarray(getattr(v0, "coefficients", v0), dtype=float).copy()
    minv = dt * dt / ops.m_diag
    bdofs = ops.space.boundary_vertex_dofs
    trace = np.zeros((N + 1, len(bdofs)))
    energy = np.zeros(N + 1) if track_energy else None
    max_abs = np.zeros(N + 1) if track_energy else None
    ref = max(float(np.max(np.abs(v))), 1e-300)
    ring = deque(maxlen=3)
    v_prev = None
    for n in range(N + 1):
        trace[n] = v[bdofs]
        amax = _amplitude_guard(v, ref, n)
        ring.append(v)
        if track_energy:
            max_abs[n] = amax
        if n == N:
            break
        force = -(ops.A @ v)
        v_next = v + 0.5 * minv * force if v_prev is None else 2.0 * v - v_prev + minv * force
        if track_energy:
            energy[n] = ops.energy(v, v_next, dt)
        v_prev, v = v, v_next
    if track_energy:
        energy[N] = energy[N - 1]
    while len(ring) < 3:
        ring.appendleft(ring[0])
    return SolveRecord(trace, np.zeros_like(trace), tuple(ring), dt, energy, max_abs)


def boundary_dof_values(space: P2BubbleSpace, vertex_values: np.ndarray) -> np.ndarray:
    """Values on all boundary dofs (ordered as ``space.boundary_dofs``) from vertex data.

    Edge midpoints take the mean of their two vertices, i.e. the P1 trace.
    Data that already cover every boundary dof pass through unchanged.
    Works on the last axis.
    """
    vertex_values = np.asarray(vertex_values, dtype=float)
    if vertex_values.shape[-1] == space.boundary_dofs.size != space.n_boundary:
        return vertex_values
    mid = 0.5 * (vertex_values + np.roll(vertex_values, -1, axis=-1))
    out = np.zeros(vertex_values.shape[:-1] + (space.n_dofs,))
    out[..., space.boundary_vertex_dofs] = vertex_values
    out[..., space.boundary_edge_dofs] = mid
    return out[..., space.boundary_dofs]


def solve_interior_dirichlet(
    ops: WaveOperators,
    g: np.ndarray,
    initial: np.ndarray,
    grid: TimeGrid,
    second: np.ndarray | None = None,
    snapshot_steps=(),
) -> tuple[np.ndarray, dict[int, np.ndarray]]:
    """Forward leapfrog with Dirichlet values ``g[n]`` imposed on the boundary.

    ``g`` holds either boundary vertex values or values on every boundary dof.
    ``initial`` is v^0 (zero velocity start) unless ``second`` supplies v^1,
    in which case the march is an exact continuation of a stored run.
    Returns the last three states and the requested snapshots.
    """
    N, dt = grid.N, grid.dt
    space = ops.space
    g = np.asarray(getattr(g, "values", g), dtype=float)
    if g.shape not in ((N + 1, space.n_boundary), (N + 1, space.boundary_dofs.size)):
        raise ValueError(f"Dirichlet data must have shape {(N + 1, space.n_boundary)}")
    I = space.interior_dofs
    bd = space.boundary_dofs
    gb = boundary_dof_values(space, g)
    minv = dt * dt / ops.m_diag
    A = ops.A
    want = set(int(s) for s in snapshot_steps)
    snaps = {}

    v = np.asarray(getattr(initial, "coefficients", initial), dtype=float).copy()
    if v.shape != (space.n_dofs,):
        raise ValueError("initial field has the wrong size")
    v[bd] = gb[0]
    ref = max(float(np.max(np.abs(v))), float(np.max(np.abs(g))), 1e-300)
    ring = deque([v], maxlen=3)
    if 0 in want:
        snaps[0] = v.copy()
    if N == 0:
        return np.stack([v, v, v]), snaps
    if second is not None:
        v1 = np.asarray(getattr(second, "coefficients", second), dtype=float).copy()
    else:
        v1 = v + 0.5 * minv * (-(A @ v))
    v1[bd] = gb[1]
    v_prev, v = v, v1
    ring.append(v)
    if 1 in want:
        snaps[1] = v.copy()
    for n in range(1, N):
        v_next = 2.0 * v - v_prev
        v_next[I] += minv[I] * (-(A @ v)[I])
        v_next[bd] = gb[n + 1]
        _amplitude_guard(v_next, ref, n + 1)
        v_prev, v = v, v_next
        ring.append(v)
        if n + 1 in want:
            snaps[n + 1] = v.copy()
    while len(ring) < 3:
        ring.appendleft(ring[0])
    return np.stack(ring), snaps


def solve_interior_dirichlet_backward(
    ops: WaveOperators,
    g: np.ndarray,
    final_value,
    grid: TimeGrid,
    final_step=None,
) -> NodalField:
    """Backward-in-time interior solve, returns z(., 0).

    z(T) = ``final_value`` and z'(T) = 0 unless ``final_step`` gives
    z(T - dt), which makes the march the exact reverse of a stored forward
    run.  Boundary values z = g are imposed strongly.
    """
    g = np.asarray(getattr(g, "values", g), dtype=float)
    final = np.asarray(getattr(final_value, "coefficients", final_value), dtype=float)
    second = None if final_step is None else getattr(final_step, "coefficients", final_step)
    states, _ = solve_interior_dirichlet(ops, g[::-1], final, grid, second=second)
    return NodalField(ops.space, states[-1])


class DirichletSolver:
    """Cached sparse factorization of the interior stiffness block."""

    def __init__(self, ops: WaveOperators):
        self.ops = ops
        A_II, A_IB = ops.interior_blocks()
        self._solve = factorized(A_II)
        self.A_IB = A_IB

    def poisson(self, load: np.ndarray) -> np.ndarray:
        space = self.ops.space
        u = np.zeros(space.n_dofs)
        u[space.interior_dofs] = self._solve(np.asarray(load, dtype=float)[space.interior_dofs])
        return u

    def laplace(self, boundary_values: np.ndarray) -> np.ndarray:
        space = self.ops.space
        boundary_values = np.asarray(boundary_values, dtype=float)
        if boundary_values.shape not in ((space.n_boundary,), (space.boundary_dofs.size,)):
            raise ValueError(f"need {space.n_boundary} boundary values, got {boundary_values.shape}")
        gb = boundary_dof_values(space, boundary_values)
        u = np.zeros(space.n_dofs)
        u[space.boundary_dofs] = gb
        u[space.interior_dofs] = self._solve(-(self.A_IB @ gb))
        return u


def solve_poisson_dirichlet(space: P2BubbleSpace, rhs, ops: WaveOperators | None = None, load=None) -> NodalField:
    """-Laplace u = rhs weakly with u = 0 on the boundary.

    ``rhs`` is a field whose load vector is formed with the consistent unit
    mass; pass ``load`` directly to use a different pairing.
    """
    ops = WaveOperators(space, 1.0) if ops is None else ops
    if load is None:
        coeffs = np.asarray(getattr(rhs, "coefficients", rhs), dtype=float)
        if coeffs.shape != (space.n_dofs,):
            raise ValueError("right-hand side has the wrong size")
        load = assemble_weighted_mass(space, 1.0, lumped=False) @ coeffs
    return NodalField(space, DirichletSolver(ops).poisson(load))


def solve_laplace_dirichlet(space: P2BubbleSpace, boundary_values, ops: WaveOperators | None = None) -> NodalField:
    """Discrete harmonic extension of vertex values on the boundary."""
    ops = WaveOperators(space, 1.0) if ops is None else ops
    return NodalField(space, DirichletSolver(ops).laplace(boundary_values))
