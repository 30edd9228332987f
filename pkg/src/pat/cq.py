"""Lubich convolution quadrature (BDF2) for the 2D retarded layer potentials.

Laplace-domain kernels, with r = |x - y| on the circle of radius R:

    single layer  K0(r s) / (2 pi)
    double layer  -s K1(r s) / (2 pi) * dr/dn_y,   dr/dn_y = r / (2 R)

Boundary functions are P1 hats in the angle variable on equally spaced
nodes, so every Galerkin matrix is symmetric circulant.  An entry of the
first row is a single integral of the kernel against the cubic B-spline
(the correlation of two hats); only its first row is ever stored.
"""
from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy.special import roots_legendre

from .bessel import bessel_k01
from .geometry import BoundaryGrid

MACHINE_EPS = 2.0**-52
GAUSS_POINTS = 12
# target phase/decay change per Gauss panel
PANEL_RATE = 6.0
GRADING = 0.15
GRADED_LAYERS = 17


def gamma_bdf2(z):
    """Characteristic quotient of BDF2: 3/2 - 2 z + z^2 / 2."""
    z = np.asarray(z, dtype=complex) if np.iscomplexobj(z) else np.asarray(z)
    return 1.5 - 2.0 * z + 0.5 * z * z


@dataclass(frozen=True)
class CQConfig:
    N: int
    machine_eps: float = MACHINE_EPS

    @property
    def L(self) -> int:
        return 2 * self.N

    @property
    def beta(self) -> float:
        return self.machine_eps ** (1.0 / (2 * self.N))

    def contour(self) -> np.ndarray:
        """Contour points beta * exp(2 pi i l / L) for l = 0..L-1."""
        return self.beta * np.exp(2j * np.pi * np.arange(self.L) / self.L)


def lubich_inverse(values: np.ndarray, config: CQConfig, half: bool = True) -> tuple[np.ndarray, float]:
    """Recover w_0..w_N from transfer-function samples on the contour.

    ``values`` has the frequency index first.  With ``half`` only samples
    l = 0..L/2 are given and conjugate symmetry supplies the rest; otherwise
    all L samples are used and the discarded imaginary residue is returned.
    """
    L, N = config.L, config.N
    scale = config.beta ** (-np.arange(N + 1, dtype=float))
    scale = scale.reshape((-1,) + (1,) * (values.ndim - 1))
    if half:
        w = np.fft.irfft(np.conj(values), n=L, axis=0)[: N + 1]
        return w * scale, 0.0
    full = np.fft.fft(values, axis=0)[: N + 1] / L
    w = full * scale
    resid = float(np.abs(w.imag).max() / max(np.abs(w.real).max(), 1e-300))
    return w.real, resid


def cq_scalar_weights(transfer, N: int, dt: float, machine_eps: float = MACHINE_EPS) -> np.ndarray:
    """CQ weights of a scalar transfer function F(s), n = 0..N."""
    cfg = CQConfig(N, machine_eps)
    s = gamma_bdf2(cfg.contour()[: N + 1]) / dt
    w, _ = lubich_inverse(np.asarray(transfer(s), dtype=complex), cfg)
    return w


def _cubic_bspline(x: np.ndarray) -> np.ndarray:
    """Correlation of two unit hat functions; support [-2, 2]."""
    a = np.abs(x)
    out = np.where(a <= 1.0, 2.0 / 3.0 - a**2 + 0.5 * a**3, (2.0 - a) ** 3 / 6.0)
    return np.where(a >= 2.0, 0.0, out)


def _panels(a: float, b: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = roots_legendre(GAUSS_POINTS)
    edges = np.linspace(a, b, n + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    return (mid[:, None] + half[:, None] * x).ravel(), (half[:, None] * w).ravel()


@lru_cache(maxsize=64)
def _row_rule(n_b: int, n_sub: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes v in [0, J+2] and the (J+1, n_nodes) matrix of B-spline weights.

    Row j integrates k(|v|) C(v - j) over the real line, folded onto v >= 0.
    The unit interval at the log singularity v = 0 is geometrically graded.
    """
    J = n_b // 2
    nodes, weights = [], []
    for k in range(GRADED_LAYERS):
        hi = GRADING**k
        lo = GRADING ** (k + 1) if k < GRADED_LAYERS - 1 else 0.0
        m = max(1, int(np.ceil(n_sub * (hi - lo))))
        x, w = _panels(lo, hi, m)
        nodes.append(x)
        weights.append(w)
    for a in range(1, J + 2):
        x, w = _panels(float(a), float(a + 1), n_sub)
        nodes.append(x)
        weights.append(w)
    v = np.concatenate(nodes)
    w = np.concatenate(weights)
    j = np.arange(J + 1)[:, None]
    P = (_cubic_bspline(v[None, :] - j) + _cubic_bspline(-v[None, :] - j)) * w[None, :]
    keep = np.any(P != 0.0, axis=0)
    return v[keep], np.ascontiguousarray(P[:, keep])


def galerkin_rows(boundary: BoundaryGrid, s: complex) -> tuple[np.ndarray, np.ndarray]:
    """First rows of the single- and double-layer Galerkin matrices at ``s``."""
    n_b = boundary.n
    R = boundary.radius
    h = 2.0 * np.pi / n_b
    rate = abs(s) * R * h
    n_sub = max(1, int(np.ceil(rate / PANEL_RATE)))
    v, P = _row_rule(n_b, n_sub)
    r = 2.0 * R * np.sin(0.5 * h * v)
    k0, k1 = bessel_k01(r * s)
    kv = k0 / (2.0 * np.pi)
    kk = -s * r * k1 / (4.0 * np.pi * R)
    scale = (R * h) ** 2
    half_v = scale * (P @ kv)
    half_k = scale * (P @ kk)
    idx = np.minimum(np.arange(n_b), n_b - np.arange(n_b))
    return half_v[idx], half_k[idx]


def circulant_eigenvalues(rows: np.ndarray) -> np.ndarray:
    """Eigenvalues (real rfft) of symmetric circulant matrices given by rows."""
    return np.fft.rfft(rows, axis=-1).real


def circulant_matrix(row: np.ndarray) -> np.ndarray:
    n = len(row)
    idx = (np.arange(n)[None, :] - np.arange(n)[:, None]) % n
    return row[idx]


@dataclass
class CQWeightSet:
    dt: float
    N: int
    radius: float
    n_b: int
    rows_v: np.ndarray
    rows_k: np.ndarray
    config: CQConfig
    imag_residue: float = 0.0
    eig_v: np.ndarray = field(init=False, repr=False)
    eig_k: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not (np.all(np.isfinite(self.rows_v)) and np.all(np.isfinite(self.rows_k))):
            raise FloatingPointError("non-finite CQ weights")
        self.eig_v = circulant_eigenvalues(self.rows_v)
        self.eig_k = circulant_eigenvalues(self.rows_k)
        lam0 = self.eig_v[0]
        if np.min(np.abs(lam0)) <= 1e-14 * np.max(np.abs(lam0)):
            raise np.linalg.LinAlgError("single-layer weight W_0 is singular")

    @property
    def beta(self) -> float:
        return self.config.beta

    @property
    def L(self) -> int:
        return self.config.L

    def matrix(self, kind: str, n: int) -> np.ndarray:
        rows = self._rows(kind)
        return circulant_matrix(rows[n])

    def dense(self, kind: str) -> np.ndarray:
        """All weight matrices, shape (N+1, n_b, n_b)."""
        rows = self._rows(kind)
        n = self.n_b
        idx = (np.arange(n)[None, :] - np.arange(n)[:, None]) % n
        return rows[:, idx]

    @property
    def Wv(self) -> np.ndarray:
        return self.dense("V")

    @property
    def Wk(self) -> np.ndarray:
        return self.dense("K")

    def _rows(self, kind: str) -> np.ndarray:
        if kind == "V":
            return self.rows_v
        if kind == "K":
            return self.rows_k
        raise ValueError(f"unknown kernel kind {kind!r}")

    def eigenvalues(self, kind: str) -> np.ndarray:
        return self.eig_v if kind == "V" else self.eig_k


def compute_cq_weights(
    boundary: BoundaryGrid,
    N: int,
    dt: float,
    machine_eps: float = MACHINE_EPS,
    use_symmetry: bool = True,
    cache_dir: str | os.PathLike | None = None,
) -> CQWeightSet:
    """Single- and double-layer CQ weight matrices for steps n = 0..N."""
    if N < 1 or not dt > 0:
        raise ValueError("need N >= 1 and dt > 0")
    if not boundary.is_uniform():
        raise ValueError("CQ assembly needs equally spaced boundary nodes")
    cfg = CQConfig(int(N), machine_eps)

    cache_dir = cache_dir if cache_dir is not None else os.environ.get("PAT_CACHE_DIR")
    path = None
    if cache_dir and use_symmetry:
        path = Path(cache_dir) / f"cq_{cache_key(boundary, N, dt, machine_eps)}.pacq"
        if path.exists():
            from .io import read_cq_cache

            return read_cq_cache(path, cfg)

    n_freq = cfg.N + 1 if use_symmetry else cfg.L
    s_all = gamma_bdf2(cfg.contour()[:n_freq]) / dt
    fv = np.empty((n_freq, boundary.n), complex)
    fk = np.empty((n_freq, boundary.n), complex)
    for l, s in enumerate(s_all):
        fv[l], fk[l] = galerkin_rows(boundary, s)
    wv, res_v = lubich_inverse(fv, cfg, half=use_symmetry)
    wk, res_k = lubich_inverse(fk, cfg, half=use_symmetry)
    ws = CQWeightSet(dt, cfg.N, boundary.radius, boundary.n, wv, wk, cfg, max(res_v, res_k))
    if path is not None:
        from .io import write_cq_cache

        path.parent.mkdir(parents=True, exist_ok=True)
        write_cq_cache(path, ws)
    return ws


def cache_key(boundary: BoundaryGrid, N: int, dt: float, machine_eps: float = MACHINE_EPS) -> str:
    payload = f"{boundary.n}|{int(N)}|{float(dt).hex()}|{float(boundary.radius).hex()}|{machine_eps.hex()}|v1"
    return hashlib.sha256(payload.encode()).hexdigest()[:24]


def retarded_convolve(weights: CQWeightSet, kind: str, history: np.ndarray, n: int) -> np.ndarray:
    """Discrete retarded potential sum_{j<=n} W[n-j] phi^j at step ``n``."""
    history = np.asarray(history, dtype=float)
    if history.ndim != 2 or history.shape[1] != weights.n_b:
        raise ValueError(f"history must have shape (n+1, {weights.n_b})")
    if history.shape[0] != n + 1:
        raise ValueError(f"history length {history.shape[0]} != n+1 = {n + 1}")
    if n > weights.N:
        raise ValueError(f"step {n} beyond the {weights.N} available weights")
    eig = weights.eigenvalues(kind)
    hat = np.fft.rfft(history, axis=1)
    acc = np.einsum("jk,jk->k", eig[n::-1], hat)
    return np.fft.irfft(acc, n=weights.n_b)
