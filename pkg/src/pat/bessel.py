"""Modified Bessel functions K0 and K1 of complex argument, Re z > 0.

Three regimes, all vectorized:

* |z| <= 2: ascending series (logarithmic form),
* 2 < |z| <= 17: Steed's algorithm for the continued fraction CF2
  (Thompson & Barnett, J. Comput. Phys. 64, 1986),
* |z| > 17: Hankel asymptotic expansion, truncated at the smallest term.
"""
from __future__ import annotations

import numpy as np

EULER_GAMMA = 0.57721566490153286061
SERIES_RADIUS = 2.0
ASYMPTOTIC_RADIUS = 17.0
# exp(-z) underflows to zero beyond this real part
UNDERFLOW_RE = 745.0


def _series(z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    t = 0.25 * z * z
    lg = np.log(0.5 * z)
    i0 = np.zeros_like(z)
    i1h = np.zeros_like(z)  # sum t^k / (k! (k+1)!)
    s0 = np.zeros_like(z)
    s1 = np.zeros_like(z)
    term0 = np.ones_like(z)  # t^k / (k!)^2
    term1 = np.ones_like(z)  # t^k / (k! (k+1)!)
    hk = 0.0
    for k in range(40):
        hk1 = hk + 1.0 / (k + 1)
        i0 += term0
        i1h += term1
        s0 += hk * term0
        s1 += (hk + hk1) * term1
        term0 = term0 * t / ((k + 1) * (k + 1))
        term1 = term1 * t / ((k + 1) * (k + 2))
        hk = hk1
        if np.all(np.abs(term0) < 1e-18 * np.abs(i0)):
            break
    i1 = 0.5 * z * i1h
    k0 = -(lg + EULER_GAMMA) * i0 + s0
    k1 = 1.0 / z + i1 * (lg + EULER_GAMMA) - 0.25 * z * s1
    return k0, k1


def _cf2(z: np.ndarray, eps: float = 1e-16, maxit: int = 5000) -> tuple[np.ndarray, np.ndarray]:
    n = z.size
    b = 2.0 * (1.0 + z)
    d = 1.0 / b
    h = d.copy()
    delh = d.copy()
    q1 = np.zeros(n, complex)
    q2 = np.ones(n, complex)
    a1 = 0.25
    q = np.full(n, a1, complex)
    c = np.full(n, a1, complex)
    a = -a1
    s = 1.0 + q * delh
    active = np.arange(n)
    for i in range(2, maxit):
        if active.size == 0:
            break
        a -= 2 * (i - 1)
        c[active] = -a * c[active] / i
        qnew = (q1[active] - b[active] * q2[active]) / a
        q1[active] = q2[active]
        q2[active] = qnew
        q[active] += c[active] * qnew
        b[active] += 2.0
        d[active] = 1.0 / (b[active] + a * d[active])
        delh[active] = (b[active] * d[active] - 1.0) * delh[active]
        h[active] += delh[active]
        dels = q[active] * delh[active]
        s[active] += dels
        active = active[np.abs(dels) >= eps * np.abs(s[active])]
    else:
        raise RuntimeError("CF2 failed to converge")
    h = a1 * h
    k0 = np.sqrt(np.pi / (2.0 * z)) * np.exp(-z) / s
    k1 = k0 * (z + 0.5 - h) / z
    return k0, k1


def _asymptotic(z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    pref = np.sqrt(np.pi / (2.0 * z)) * np.exp(-z)
    out = []
    for nu in (0, 1):
        mu = 4.0 * nu * nu
        total = np.ones_like(z)
        term = np.ones_like(z)
        last = np.full(z.shape, np.inf)
        done = np.zeros(z.shape, bool)
        for k in range(1, 60):
            term = term * (mu - (2 * k - 1) ** 2) / (k * 8.0 * z)
            mag = np.abs(term)
            grow = mag > last
            done |= grow
            total = np.where(done, total, total + term)
            done |= mag < 1e-17 * np.abs(total)
            last = mag
            if done.all():
                break
        out.append(pref * total)
    return out[0], out[1]


def bessel_k01(z, return_underflow: bool = False):
    """K0(z) and K1(z) for complex ``z`` with positive real part.

    Raises ValueError for Re z <= 0.  Where Re z exceeds the exponential
    underflow range both values are exactly zero; ``return_underflow``
    additionally returns that mask.
    """
    z = np.asarray(z, dtype=complex)
    shape = z.shape
    zf = z.ravel()
    if np.any(~np.isfinite(zf)) or np.any(zf.real <= 0):
        raise ValueError("modified Bessel K needs Re(z) > 0")
    k0 = np.zeros(zf.shape, complex)
    k1 = np.zeros(zf.shape, complex)
    r = np.abs(zf)
    under = zf.real > UNDERFLOW_RE
    for mask, fn in (
        (r <= SERIES_RADIUS, _series),
        ((r > SERIES_RADIUS) & (r <= ASYMPTOTIC_RADIUS), _cf2),
        ((r > ASYMPTOTIC_RADIUS) & ~under, _asymptotic),
    ):
        if mask.any():
            a, b = fn(zf[mask])
            k0[mask] = a
            k1[mask] = b
    k0 = k0.reshape(shape)
    k1 = k1.reshape(shape)
    if return_underflow:
        return k0, k1, under.reshape(shape)
    return k0, k1


def modified_bessel_k(order: int, z, return_underflow: bool = False):
    if order not in (0, 1):
        raise ValueError("only orders 0 and 1 are implemented")
    res = bessel_k01(z, return_underflow=return_underflow)
    if return_underflow:
        return res[order], res[2]
    return res[order]
