"""Reconstruction: Landweber with the discrepancy principle, time reversal,
and the Neumann series built on harmonic-extension time reversal."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .fem import NodalField, assemble_weighted_mass
from .operators import BoundaryTrace, OperatorSetup, adjoint_L, forward_L, forward_boundary_values, l2_sigma_norm
from .wavesolver import boundary_dof_values
from .wavesolver import solve_interior_dirichlet_backward

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class LandweberConfig:
    omega: float
    tau: float = 1.5
    delta: float = 0.0
    k_max: int = 200
    snapshot_every: int = 5

    def __post_init__(self):
        if not self.omega > 0:
            raise ValueError("omega must be positive")
        if not self.tau > 1:
            raise ValueError("tau must exceed 1")
        if self.delta < 0:
            raise ValueError("delta must be non-negative")
        if self.k_max < 0:
            raise ValueError("k_max must be non-negative")


@dataclass
class ReconReport:
    final: NodalField
    residuals: list[float]
    stop_index: int | None  # first k with residual <= tau * delta
    returned_index: int
    stop_reason: str  # "discrepancy" or "cap"
    snapshots: dict[int, NodalField] = field(default_factory=dict)
    errors: list[float] = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return len(self.residuals) - 1

    def write_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("iter,residual,phantom_error\n")
            for k, r in enumerate(self.residuals):
                e = f"{self.errors[k]:.17g}" if k < len(self.errors) else ""
                fh.write(f"{k},{r:.17g},{e}\n")


def _h10(setup: OperatorSetup, a: np.ndarray, b: np.ndarray) -> float:
    return float(a @ (setup.ops.A @ b))


def _normal_operator(setup: OperatorSetup, f: np.ndarray) -> np.ndarray:
    return adjoint_L(forward_L(NodalField(setup.space, f), setup), setup).coefficients


@dataclass
class OmegaEstimate:
    omega: float
    lam_max: float
    rayleigh: list[float]
    converged: bool


def estimate_omega(setup: OperatorSetup, power_iters: int = 10, seed: int = 0, safety: float = 0.95) -> OmegaEstimate:
    """Power iteration for the largest eigenvalue of L*L in the H0^1 product.

    Returns omega = safety / lam_max.  ``converged`` is False if the Rayleigh
    quotient still moves by more than 10% over the last three iterations.
    """
    if power_iters < 5:
        raise ValueError("need at least 5 power iterations")
    rng = np.random.default_rng(seed)
    space = setup.space
    load = np.zeros(space.n_dofs)
    load[space.interior_dofs] = rng.standard_normal(space.interior_dofs.size)
    x = setup.dirichlet.poisson(load)
    x /= np.sqrt(_h10(setup, x, x))
    rayleigh = []
    for _ in range(power_iters):
        y = _normal_operator(setup, x)
        rayleigh.append(_h10(setup, x, y))
        x = y / np.sqrt(_h10(setup, y, y))
    lam = rayleigh[-1]
    tail = rayleigh[-3:]
    converged = (max(tail) - min(tail)) <= 0.1 * abs(lam)
    if not converged:
        log.warning("power iteration not settled: %s", tail)
    return OmegaEstimate(safety / lam, lam, rayleigh, converged)


def landweber(
    m: BoundaryTrace,
    setup: OperatorSetup,
    config: LandweberConfig,
    f_true: NodalField | None = None,
    error_norm: str = "L2",
) -> ReconReport:
    """f_k = f_{k-1} - omega L*[L f_{k-1} - m], starting from f_0 = 0.

    Stops at the first k with ||m - L f_k|| <= tau * delta or at k_max, and
    returns that iterate.
    """
    space = setup.space
    f = np.zeros(space.n_dofs)
    Lf = np.zeros_like(m.values)
    residuals: list[float] = []
    errors: list[float] = []
    snaps: dict[int, NodalField] = {}
    threshold = config.tau * config.delta
    stop_index = None
    reason = "cap"
    k = 0
    while True:
        r = m.like(m.values - Lf)
        res = l2_sigma_norm(r)
        residuals.append(res)
        if f_true is not None:
            errors.append(relative_error(NodalField(space, f), f_true, error_norm))
        if config.snapshot_every and k % config.snapshot_every == 0:
            snaps[k] = NodalField(space, f.copy())
        # with delta = 0 this fires only on an exactly zero residual
        if res <= threshold:
            stop_index, reason = k, "discrepancy"
            break
        if k >= config.k_max:
            break
        step = config.omega * adjoint_L(r, setup).coefficients
        f = f + step
        Lf = Lf + forward_L(NodalField(space, step), setup).values
        k += 1
    return ReconReport(NodalField(space, f), residuals, stop_index, k, reason, snaps, errors)


def time_reversal(m: BoundaryTrace, setup: OperatorSetup, mode: str = "plain") -> NodalField:
    """Backward interior solve with the data as Dirichlet values.

    ``plain`` starts from z(T) = 0, ``harmonic`` from the harmonic extension
    of m(., T).  Both start with z'(T) = 0.  A raw array may also carry
    values on every boundary dof instead of the vertices only.
    """
    vals = np.asarray(getattr(m, "values", m), dtype=float)
    n_full = setup.space.boundary_dofs.size
    if vals.shape not in ((setup.grid.N + 1, setup.boundary.n), (setup.grid.N + 1, n_full)):
        raise ValueError("trace does not match the setup's time grid and boundary")
    if mode == "plain":
        final = np.zeros(setup.n_dofs)
    elif mode == "harmonic":
        final = setup.dirichlet.laplace(vals[-1])
    else:
        raise ValueError(f"unknown time-reversal mode {mode!r}")
    return solve_interior_dirichlet_backward(setup.ops, vals, final, setup.grid)


def _to_h01(f: NodalField) -> NodalField:
    c = f.coefficients.copy()
    c[f.space.boundary_dofs] = 0.0
    return NodalField(f.space, c)


class DivergenceWarning(RuntimeWarning):
    pass


def neumann_series(m: BoundaryTrace, setup: OperatorSetup, J: int, history: list | None = None) -> NodalField:
    """f_0 = TR_h[m], f_k = f_{k-1} - TR_h[L f_{k-1} - m] with harmonic TR.

    Iterates are restricted to zero boundary values before L is applied.
    The simulated part L f_{k-1} reaches the time reversal with its values
    on every boundary dof; only the data m get interpolated edge midpoints.
    Interpolating both makes grid-scale modes grow from one step to the next.
    Growth of the iterate norm by more than 10x in one step is flagged.
    """
    if J < 0:
        raise ValueError("J must be non-negative")
    vals = np.asarray(getattr(m, "values", m), dtype=float)
    m_full = boundary_dof_values(setup.space, vals)
    f = time_reversal(m_full, setup, "harmonic")
    if history is not None:
        history.append(f)
    for _ in range(J):
        f0 = _to_h01(f)
        r = forward_boundary_values(f0, setup) - m_full
        f_new = f0 - time_reversal(r, setup, "harmonic")
        n_old = np.linalg.norm(f.coefficients)
        if n_old > 0 and np.linalg.norm(f_new.coefficients) > 10.0 * n_old:
            import warnings

            warnings.warn("Neumann series iterate grew more than 10x", DivergenceWarning)
        f = f_new
        if history is not None:
            history.append(f)
    return f


def relative_error(f_rec: NodalField, f_true: NodalField, norm: str = "L2") -> float:
    """||f_rec - f_true|| / ||f_true|| in the discrete L2 or H0^1 norm."""
    if f_rec.coefficients.shape != f_true.coefficients.shape:
        raise ValueError("fields live on different meshes; project first")
    d = f_rec.coefficients - f_true.coefficients
    if norm == "L2":
        G = _unit_mass(f_true.space)
    elif norm == "H01":
        G = f_true.space.stiffness
    else:
        raise ValueError(f"unknown norm {norm!r}")
    ref = float(f_true.coefficients @ (G @ f_true.coefficients))
    if ref <= 0:
        raise ValueError("reference field has zero norm")
    return float(np.sqrt(max(d @ (G @ d), 0.0) / ref))


def _unit_mass(space):
    M = getattr(space, "_unit_mass", None)
    if M is None:
        M = assemble_weighted_mass(space, 1.0, lumped=False)
        space._unit_mass = M
    return M
