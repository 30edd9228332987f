"""Sound-speed fields, initial-pressure phantoms and the travel time T0."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

# modified Shepp-Logan table (Toft): intensity, semi-axes a, b, centre, angle in degrees
SHEPP_LOGAN = np.array(
    [
        [1.0, 0.69, 0.92, 0.0, 0.0, 0.0],
        [-0.8, 0.6624, 0.8740, 0.0, -0.0184, 0.0],
        [-0.2, 0.1100, 0.3100, 0.22, 0.0, -18.0],
        [-0.2, 0.1600, 0.4100, -0.22, 0.0, 18.0],
        [0.1, 0.2100, 0.2500, 0.0, 0.35, 0.0],
        [0.1, 0.0460, 0.0460, 0.0, 0.1, 0.0],
        [0.1, 0.0460, 0.0460, 0.0, -0.1, 0.0],
        [0.1, 0.0460, 0.0230, -0.08, -0.605, 0.0],
        [0.1, 0.0230, 0.0230, 0.0, -0.606, 0.0],
        [0.1, 0.0230, 0.0460, 0.06, -0.605, 0.0],
    ]
)
SHEPP_LOGAN_SCALE = 0.9 / 0.92

# ghost phantom: disks (x, y, radius, peak) and annular arcs (r_in, r_out, theta0, theta1, peak)
GHOST_DISKS = np.array(
    [
        [-0.35, 0.30, 0.22, 1.0],
        [0.38, 0.33, 0.16, 0.7],
        [0.00, -0.05, 0.12, 0.9],
    ]
)
GHOST_ARCS = np.array(
    [
        [0.45, 0.62, np.deg2rad(205.0), np.deg2rad(335.0), 0.6],
        [0.70, 0.82, np.deg2rad(20.0), np.deg2rad(160.0), 0.4],
    ]
)
# slope of the quintic smoothstep peaks at 15/8
RAMP_STRETCH = 15.0 / 8.0


def smoothstep5(t):
    """C^2 ramp 6t^5 - 15t^4 + 10t^3, clamped to [0, 1]."""
    t = np.clip(t, 0.0, 1.0)
    return t * t * t * (t * (6.0 * t - 15.0) + 10.0)


def _inner_ramp(depth, smoothing: float):
    """0 outside, 1 once ``depth`` exceeds the ramp width; max slope 1/smoothing."""
    if smoothing <= 0:
        return (np.asarray(depth) > 0).astype(float)
    return smoothstep5(np.asarray(depth) / (RAMP_STRETCH * smoothing))


# -- speed ----------------------------------------------------------------------


def _nontrapping(x):
    return 1.0 + 0.2 * np.sin(2.0 * np.pi * x[..., 0]) + 0.1 * np.cos(2.0 * np.pi * x[..., 1])


def _trapping(x):
    return 1.0 + 0.5 * np.sin(-3.0 * np.pi * x[..., 0]) * np.cos(3.0 * np.pi * x[..., 1])


@dataclass(frozen=True)
class SpeedField:
    """Sound speed: a formula inside B_{R-eps}, blended to 1 by |x| = R - eps/2.

    ``kind`` is constant, nontrapping, trapping or custom (``formula``).  A
    constant field takes ``level`` inside B_R and 1 outside, unblended.
    """

    kind: str = "constant"
    radius: float = 1.0
    eps_smooth: float | None = None
    level: float = 1.0
    formula: Callable | None = None
    bounds: tuple[float, float] | None = None

    def __post_init__(self):
        if self.kind not in ("constant", "nontrapping", "trapping", "custom"):
            raise ValueError(f"unknown speed kind {self.kind!r}")
        if self.kind == "custom" and self.formula is None:
            raise ValueError("custom speed needs a formula")
        if self.kind == "constant" and not self.level > 0:
            raise ValueError("speed must be positive")
        if self.eps_smooth is None:
            object.__setattr__(self, "eps_smooth", 0.1 * self.radius)

    def _inner(self, x):
        if self.kind == "nontrapping":
            return _nontrapping(x)
        if self.kind == "trapping":
            return _trapping(x)
        return np.asarray(self.formula(x), dtype=float)

    def value(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        r = np.hypot(x[..., 0], x[..., 1])
        if self.kind == "constant":
            return np.where(r < self.radius, self.level, 1.0)
        eps = self.eps_smooth
        t = (r - (self.radius - eps)) / (0.5 * eps)
        s = smoothstep5(t)
        c = (1.0 - s) * self._inner(x) + s
        return np.where((t >= 1.0) | (r >= self.radius - 0.5 * eps), 1.0, c)

    __call__ = value

    @property
    def c_min(self) -> float:
        return self._range()[0]

    @property
    def c_max(self) -> float:
        return self._range()[1]

    def _range(self) -> tuple[float, float]:
        if self.bounds is not None:
            return self.bounds
        if self.kind == "constant":
            return (min(self.level, 1.0), max(self.level, 1.0))
        if self.kind == "nontrapping":
            return (0.7, 1.3)
        if self.kind == "trapping":
            return (0.5, 1.5)
        g = np.linspace(-self.radius, self.radius, 801)
        X, Y = np.meshgrid(g, g)
        v = self.value(np.stack([X, Y], axis=-1))
        return (float(v.min()), float(v.max()))


def speed_value(field: SpeedField, x) -> np.ndarray:
    return field.value(x)


def make_speed(kind: str, radius: float = 1.0, eps_smooth: float | None = None, level: float = 1.0) -> SpeedField:
    return SpeedField(kind, radius, eps_smooth, level)


# -- phantoms -------------------------------------------------------------------


def shepp_logan(x, smoothing: float = 0.02) -> np.ndarray:
    """Modified Shepp-Logan phantom scaled into the disk of radius 0.9.

    Each ellipse indicator is replaced by a quintic ramp inside its edge.
    The ramp depth b_min * (1 - rho) never exceeds the distance to the edge
    and has unit-bounded gradient, so the slope of each ramp is at most
    |intensity| / smoothing.
    """
    x = np.asarray(x, dtype=float) / SHEPP_LOGAN_SCALE
    out = np.zeros(x.shape[:-1])
    for A, a, b, x0, y0, phi in SHEPP_LOGAN:
        th = np.deg2rad(phi)
        dx = x[..., 0] - x0
        dy = x[..., 1] - y0
        u = np.cos(th) * dx + np.sin(th) * dy
        v = -np.sin(th) * dx + np.cos(th) * dy
        rho = np.sqrt((u / a) ** 2 + (v / b) ** 2)
        depth = SHEPP_LOGAN_SCALE * min(a, b) * (1.0 - rho)
        out += A * _inner_ramp(depth, smoothing)
    return out


def shepp_logan_center_value() -> float:
    """Sum of intensities of the ellipses that contain the origin."""
    total = 0.0
    for A, a, b, x0, y0, phi in SHEPP_LOGAN:
        th = np.deg2rad(phi)
        u = np.cos(th) * -x0 + np.sin(th) * -y0
        v = -np.sin(th) * -x0 + np.cos(th) * -y0
        if (u / a) ** 2 + (v / b) ** 2 < 1.0:
            total += A
    return total


def _ghost_disk_profile(r, radius, smoothing):
    return _inner_ramp(radius - r, smoothing)


def _ghost_arc_profiles(r, theta, arc, smoothing):
    r_in, r_out, t0, t1, _ = arc
    radial = _band(r, r_in, r_out, smoothing)
    mid = 0.5 * (t0 + t1)
    half = 0.5 * (t1 - t0)
    dtheta = np.angle(np.exp(1j * (theta - mid)))
    # angular ramps measured as arc length on the mid radius
    rm = 0.5 * (r_in + r_out)
    angular = _band(rm * dtheta, -rm * half, rm * half, smoothing)
    return radial, angular


def _band(t, lo, hi, smoothing):
    """Smooth indicator of [lo, hi]: product of two inward ramps."""
    return _inner_ramp(t - lo, smoothing) * _inner_ramp(hi - t, smoothing)


def ghost_phantom(x, smoothing: float = 0.03) -> np.ndarray:
    """Three smoothed disks and two annular arcs, disjoint, inside radius 0.85.

    Disks (centre, radius, peak): (-0.35, 0.30) 0.22 1.0; (0.38, 0.33) 0.16
    0.7; (0, -0.05) 0.12 0.9.  Arcs (radii, angles in degrees, peak):
    0.45-0.62, 205-335, 0.6; 0.70-0.82, 20-160, 0.4.  Each piece is a
    product of quintic ramps in polar coordinates about its own centre, so
    every edge ramp lies inside the piece.
    """
    x = np.asarray(x, dtype=float)
    out = np.zeros(x.shape[:-1])
    for cx, cy, rad, peak in GHOST_DISKS:
        r = np.hypot(x[..., 0] - cx, x[..., 1] - cy)
        out += peak * _ghost_disk_profile(r, rad, smoothing)
    r = np.hypot(x[..., 0], x[..., 1])
    theta = np.arctan2(x[..., 1], x[..., 0])
    for arc in GHOST_ARCS:
        radial, angular = _ghost_arc_profiles(r, theta, arc, smoothing)
        out += arc[4] * radial * angular
    return out


def ghost_phantom_integral(smoothing: float = 0.03, n: int = 200) -> float:
    """Integral of the ghost phantom from its separable polar form."""
    from numpy.polynomial.legendre import leggauss

    xg, wg = leggauss(n)

    def integrate(fn, a, b):
        # composite Gauss on 8 panels keeps the ramp kinks resolved
        edges = np.linspace(a, b, 9)
        total = 0.0
        for lo, hi in zip(edges[:-1], edges[1:]):
            t = 0.5 * (hi - lo) * xg + 0.5 * (hi + lo)
            total += 0.5 * (hi - lo) * np.sum(wg * fn(t))
        return total

    total = 0.0
    for _, _, rad, peak in GHOST_DISKS:
        total += peak * 2.0 * np.pi * integrate(lambda r: _ghost_disk_profile(r, rad, smoothing) * r, 0.0, rad)
    for arc in GHOST_ARCS:
        r_in, r_out, t0, t1, peak = arc
        rm = 0.5 * (r_in + r_out)
        half = 0.5 * (t1 - t0)
        rad_int = integrate(lambda r: _band(r, r_in, r_out, smoothing) * r, r_in, r_out)
        ang_int = integrate(lambda d: _band(rm * d, -rm * half, rm * half, smoothing), -half, half)
        total += peak * rad_int * ang_int
    return float(total)


def gaussian_bump(x, center=(0.0, 0.0), sigma: float = 0.15, amplitude: float = 1.0) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    d2 = (x[..., 0] - center[0]) ** 2 + (x[..., 1] - center[1]) ** 2
    return amplitude * np.exp(-d2 / (2.0 * sigma**2))


PHANTOMS = {
    "shepp_logan": shepp_logan,
    "ghosts": ghost_phantom,
    "gaussian": lambda x, smoothing=None: gaussian_bump(x),
    "zero": lambda x, smoothing=None: np.zeros(np.asarray(x).shape[:-1]),
}


def make_phantom(kind: str, smoothing: float | None = None) -> Callable:
    if kind not in PHANTOMS:
        raise ValueError(f"unknown phantom {kind!r}; choose from {sorted(PHANTOMS)}")
    fn = PHANTOMS[kind]
    if smoothing is None:
        return fn
    return lambda x: fn(x, smoothing=smoothing)


# -- travel time ------------------------------------------------------------------


def estimate_T0(field: SpeedField, grid_spacing: float) -> float:
    """max over the disk of the travel time to the boundary in the metric c^-2 dx^2.

    Solves |grad u| = 1/c with u = 0 on the circle by second-order fast
    marching on a Cartesian grid.
    """
    import skfmm

    R = field.radius
    if not (0 < grid_spacing <= R / 20.0):
        raise ValueError(f"grid spacing must be in (0, R/20], got {grid_spacing}")
    n = int(np.ceil(R / grid_spacing))
    dx = R / n
    g = dx * np.arange(-n - 2, n + 3)
    X, Y = np.meshgrid(g, g, indexing="ij")
    pts = np.stack([X, Y], axis=-1)
    phi = np.hypot(X, Y) - R
    speed = field.value(pts)
    u = skfmm.travel_time(phi, speed, dx=float(dx), order=2)
    inside = phi < 0
    return float(np.max(np.asarray(u)[inside]))


# -- rasters ----------------------------------------------------------------------


def rasterize(fn: Callable, n: int = 256, radius: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Sample ``fn`` on an n x n grid over [-R, R]^2; row 0 is the top (y = R)."""
    g = np.linspace(-radius, radius, n)
    X, Y = np.meshgrid(g, g[::-1])
    return fn(np.stack([X, Y], axis=-1)), g


def export_raster(image: np.ndarray, path_stem, radius: float = 1.0, label: str = "") -> None:
    """Write ``<stem>.csv`` (x,y,value) and ``<stem>.pgm`` with its sidecar."""
    from .io import write_pgm16

    n = image.shape[0]
    g = np.linspace(-radius, radius, n)
    X, Y = np.meshgrid(g, g[::-1])
    with open(f"{path_stem}.csv", "w") as fh:
        fh.write("x,y,value\n")
        for x, y, v in zip(X.ravel(), Y.ravel(), image.ravel()):
            fh.write(f"{x:.17g},{y:.17g},{v:.17g}\n")
    write_pgm16(f"{path_stem}.pgm", image, label=label)
