import numpy as np
import pytest

from oracles import dijkstra_T0, ghost_integral_dblquad
from pat.phantoms import (
    GHOST_ARCS,
    GHOST_DISKS,
    SpeedField,
    estimate_T0,
    export_raster,
    ghost_phantom,
    ghost_phantom_integral,
    make_phantom,
    make_speed,
    rasterize,
    shepp_logan,
    shepp_logan_center_value,
)

# the modified Shepp-Logan ellipses, written out independently:
# intensity, semi-axes, centre, rotation (degrees)
TOFT = [
    (1.0, 0.69, 0.92, 0.0, 0.0, 0.0),
    (-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0),
    (-0.2, 0.11, 0.31, 0.22, 0.0, -18.0),
    (-0.2, 0.16, 0.41, -0.22, 0.0, 18.0),
    (0.1, 0.21, 0.25, 0.0, 0.35, 0.0),
    (0.1, 0.046, 0.046, 0.0, 0.1, 0.0),
    (0.1, 0.046, 0.046, 0.0, -0.1, 0.0),
    (0.1, 0.046, 0.023, -0.08, -0.605, 0.0),
    (0.1, 0.023, 0.023, 0.0, -0.606, 0.0),
    (0.1, 0.023, 0.046, 0.06, -0.605, 0.0),
]


def _disk_points(radius, n=4000, seed=0):
    rng = np.random.default_rng(seed)
    r = radius * np.sqrt(rng.uniform(0, 1, n))
    t = rng.uniform(0, 2 * np.pi, n)
    return np.column_stack([r * np.cos(t), r * np.sin(t)])


@pytest.mark.parametrize("kind", ["constant", "nontrapping", "trapping"])
def test_speed_bounds(kind):
    c = make_speed(kind, level=1.4)
    v = c(_disk_points(1.2))
    assert np.all(v > 0)
    assert v.min() >= c.c_min - 1e-12 and v.max() <= c.c_max + 1e-12


def test_speed_reference_values():
    origin = np.zeros(2)
    assert make_speed("nontrapping")(origin) == pytest.approx(1.1, abs=1e-15)
    assert make_speed("trapping")(origin) == pytest.approx(1.0, abs=1e-15)
    for kind in ("nontrapping", "trapping", "constant"):
        assert make_speed(kind, level=2.0)(np.array([2.0, 0.0])) == 1.0
        assert make_speed(kind, level=2.0)(np.array([0.0, -1.0])) == 1.0


@pytest.mark.parametrize("kind", ["nontrapping", "trapping"])
def test_speed_is_one_in_outer_annulus(kind):
    c = make_speed(kind)
    t = np.linspace(0, 2 * np.pi, 500)
    for r in (0.95, 0.97, 1.0, 1.5):
        pts = r * np.column_stack([np.cos(t), np.sin(t)])
        # rounding can put a point a few ulps inside the annulus edge
        pts = pts[np.hypot(pts[:, 0], pts[:, 1]) >= 0.95]
        assert len(pts) > 400
        assert np.all(c(pts) == 1.0)


@pytest.mark.parametrize("kind", ["nontrapping", "trapping"])
def test_speed_c1_across_seams(kind):
    c = make_speed(kind)
    eps = c.eps_smooth
    d = 1e-6
    for theta in np.linspace(0, 2 * np.pi, 13):
        e = np.array([np.cos(theta), np.sin(theta)])
        for r0 in (1 - eps, 1 - eps / 2):
            left = (c(e * (r0 - d)) - c(e * (r0 - 2 * d))) / d
            right = (c(e * (r0 + 2 * d)) - c(e * (r0 + d))) / d
            assert abs(left - right) <= 1e-3
            # no jump in value either
            assert abs(c(e * (r0 - d)) - c(e * (r0 + d))) <= 1e-4


def test_speed_validation():
    with pytest.raises(ValueError):
        SpeedField("wiggly")
    with pytest.raises(ValueError):
        SpeedField("custom")
    with pytest.raises(ValueError):
        make_speed("constant", level=0.0)


def test_custom_speed_range():
    c = SpeedField("custom", formula=lambda x: 1.0 + 0.3 * x[..., 0])
    assert c.c_max == pytest.approx(1.3 * 0.9 + 0.1, abs=0.05)
    assert c.c_min < 1.0


def _inside(x, y, A, a, b, x0, y0, phi):
    th = np.deg2rad(phi)
    u = np.cos(th) * (x - x0) + np.sin(th) * (y - y0)
    v = -np.sin(th) * (x - x0) + np.cos(th) * (y - y0)
    return (u / a) ** 2 + (v / b) ** 2 < 1


def test_shepp_logan_centre():
    expect = sum(e[0] for e in TOFT if _inside(0.0, 0.0, *e))
    assert expect == pytest.approx(0.2, abs=1e-14)
    assert shepp_logan_center_value() == pytest.approx(expect, abs=1e-14)
    assert shepp_logan(np.zeros(2), smoothing=0.02) == pytest.approx(expect, abs=1e-14)


def test_shepp_logan_zero_outside():
    pts = _disk_points(2.0, seed=1)
    scale = 0.9 / 0.92
    outside = (pts[:, 0] / (0.69 * scale)) ** 2 + (pts[:, 1] / (0.92 * scale)) ** 2 >= 1
    assert np.all(shepp_logan(pts[outside]) == 0.0)


def test_shepp_logan_gradient_bound():
    s = 0.03
    h = 1e-4
    g = np.linspace(-0.95, 0.95, 501)
    X, Y = np.meshgrid(g, g)
    P = np.stack([X, Y], axis=-1)
    gx = (shepp_logan(P + [h, 0], s) - shepp_logan(P - [h, 0], s)) / (2 * h)
    gy = (shepp_logan(P + [0, h], s) - shepp_logan(P - [0, h], s)) / (2 * h)
    assert np.hypot(gx, gy).max() <= 1.2 * 1.0 / s


def test_ghost_peaks_and_range():
    for cx, cy, _, peak in GHOST_DISKS:
        assert ghost_phantom(np.array([cx, cy]), 0.03) == pytest.approx(peak, abs=1e-14)
    for r_in, r_out, t0, t1, peak in GHOST_ARCS:
        r, t = 0.5 * (r_in + r_out), 0.5 * (t0 + t1)
        assert ghost_phantom(np.array([r * np.cos(t), r * np.sin(t)]), 0.03) == pytest.approx(peak, abs=1e-14)
    v = ghost_phantom(_disk_points(1.0, 20000), 0.03)
    assert v.min() >= 0.0 and v.max() <= 1.0


def test_ghost_pieces_disjoint():
    # a point in one piece never picks up another piece's value
    img, _ = rasterize(lambda x: ghost_phantom(x, 0.0), 400)
    levels = set(np.round(np.unique(img), 12))
    assert levels <= {0.0, 1.0, 0.7, 0.9, 0.6, 0.4}


@pytest.mark.parametrize("kind", ["shepp_logan", "ghosts"])
def test_phantom_support(kind):
    fn = make_phantom(kind, 0.05)
    t = np.linspace(0, 2 * np.pi, 720)
    for r in (0.95, 0.97, 1.0):
        assert np.all(fn(r * np.column_stack([np.cos(t), np.sin(t)])) == 0.0)


def test_ghost_integral_matches_quadrature():
    s = 0.03
    assert ghost_phantom_integral(s) == pytest.approx(ghost_integral_dblquad(GHOST_DISKS, GHOST_ARCS, s), abs=1e-6)


def test_phantom_registry():
    assert make_phantom("zero")(np.ones((3, 2))).tolist() == [0.0, 0.0, 0.0]
    assert make_phantom("gaussian")(np.zeros(2)) == 1.0
    with pytest.raises(ValueError):
        make_phantom("cat")


def test_T0_constant_speeds():
    assert estimate_T0(make_speed("constant"), 0.01) == pytest.approx(1.0, abs=0.02)
    assert estimate_T0(make_speed("constant", level=2.0), 0.01) == pytest.approx(0.5, abs=0.01)


@pytest.mark.parametrize("kind", ["nontrapping", "trapping"])
def test_T0_matches_graph_search(kind):
    c = make_speed(kind)
    fmm = estimate_T0(c, 0.005)
    graph = dijkstra_T0(c, 1.0, 0.005)
    assert abs(fmm - graph) <= 0.03 * graph


def test_T0_monotone_in_speed():
    values = [estimate_T0(make_speed("constant", level=lv), 0.02) for lv in (0.8, 1.0, 1.5, 3.0)]
    assert all(a > b for a, b in zip(values, values[1:]))


def test_T0_spacing_guard():
    with pytest.raises(ValueError):
        estimate_T0(make_speed("constant"), 0.2)


def test_raster_and_export(tmp_path):
    img, g = rasterize(lambda x: x[..., 0] + 2 * x[..., 1], 5)
    assert img[0, 0] == pytest.approx(-1 + 2) and img[-1, -1] == pytest.approx(1 - 2)
    export_raster(img, tmp_path / "r", label="test")
    assert (tmp_path / "r.pgm").exists()
    lines = (tmp_path / "r.csv").read_text().splitlines()
    assert lines[0] == "x,y,value" and len(lines) == 26
