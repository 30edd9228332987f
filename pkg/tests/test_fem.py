import numpy as np
import pytest
import scipy.sparse as sp
from scipy.integrate import dblquad

from pat.fem import (
    NodalField,
    P2BubbleSpace,
    assemble_boundary_mass,
    assemble_stiffness,
    assemble_weighted_mass,
    h10_inner,
    project_analytic,
)
from pat.geometry import generate_disk_mesh
from pat.phantoms import gaussian_bump, make_speed


def _sym_err(S):
    d = (S - S.T).tocoo()
    return np.abs(d.data).max(initial=0.0) / np.abs(S.data).max()


def _polygon_x2_integral(mesh):
    """Exact integral of x^2 over the mesh triangles (vertex formula for quadratics)."""
    p = mesh.vertices[mesh.triangles]
    area = mesh.signed_areas()
    x = p[..., 0]
    # int_T x^2 = |T|/6 (x1^2 + x2^2 + x3^2 + x1 x2 + x2 x3 + x3 x1)
    s = (x**2).sum(1) + x[:, 0] * x[:, 1] + x[:, 1] * x[:, 2] + x[:, 2] * x[:, 0]
    return float((area * s / 6.0).sum())


def test_consistent_mass_total_is_area(space_01):
    M = assemble_weighted_mass(space_01, 1.0, lumped=False)
    assert M.sum() == pytest.approx(np.pi, rel=1e-2)


def test_mass_scales_with_inverse_speed_squared(space_01):
    M = assemble_weighted_mass(space_01, 2.0, lumped=False)
    assert M.sum() == pytest.approx(np.pi / 4, rel=1e-2)


def test_variable_speed_mass_matches_quadrature():
    space = P2BubbleSpace(generate_disk_mesh(1.0, 0.05))
    c = make_speed("nontrapping")
    M = assemble_weighted_mass(space, c, lumped=False)

    def integrand(r, th):
        x = np.array([r * np.cos(th), r * np.sin(th)])
        return r / float(c.value(x)) ** 2

    ref, _ = dblquad(integrand, 0.0, 2 * np.pi, 0.0, 1.0, epsabs=1e-10, epsrel=1e-10)
    assert M.sum() == pytest.approx(ref, rel=1e-3)


@pytest.mark.parametrize("speed", [1.0, "nontrapping", "trapping"])
def test_lumped_total_equals_consistent_total(space_01, speed):
    c = speed if isinstance(speed, float) else make_speed(speed)
    Ml = assemble_weighted_mass(space_01, c, lumped=True)
    Mc = assemble_weighted_mass(space_01, c, lumped=False)
    assert Ml.sum() == pytest.approx(Mc.sum(), rel=1e-12)
    assert (Ml - sp.diags(Ml.diagonal())).nnz == 0
    assert np.all(Ml.diagonal() > 0)


def test_matrices_symmetric(space_01):
    Mc = assemble_weighted_mass(space_01, make_speed("trapping"), lumped=False)
    A = assemble_stiffness(space_01)
    assert _sym_err(Mc) <= 1e-12
    assert _sym_err(A) <= 1e-12


def test_consistent_mass_positive_definite(mesh_02):
    Mc = assemble_weighted_mass(P2BubbleSpace(mesh_02), 1.0, lumped=False).toarray()
    np.linalg.cholesky(Mc)


def test_stiffness_kills_constants(space_01):
    A = assemble_stiffness(space_01)
    assert np.abs(A @ np.ones(space_01.n_dofs)).max() <= 1e-12


def test_stiffness_linear_field(space_01):
    g = project_analytic(lambda x: x[:, 0], space_01)
    A = assemble_stiffness(space_01)
    area = space_01.areas.sum()
    assert g.coefficients @ A @ g.coefficients == pytest.approx(area, rel=1e-12)
    assert area == pytest.approx(np.pi, rel=1e-2)


def test_stiffness_exact_for_quadratics(space_01):
    g = project_analytic(lambda x: x[:, 0] ** 2, space_01)
    A = assemble_stiffness(space_01)
    val = g.coefficients @ A @ g.coefficients
    # exact value on the polygonal domain, then the disk value pi R^4 up to the polygon gap
    assert val == pytest.approx(4 * _polygon_x2_integral(space_01.mesh), rel=1e-10)
    assert val == pytest.approx(np.pi, rel=1e-2)


def test_boundary_mass_measures(space_01):
    B = assemble_boundary_mass(space_01)
    ones_b = np.ones(space_01.n_boundary)
    w1 = np.ones(space_01.n_dofs)
    assert w1 @ B @ ones_b == pytest.approx(2 * np.pi, rel=1e-6)
    x1 = project_analytic(lambda x: x[:, 0], space_01).coefficients
    assert abs(x1 @ B @ ones_b) <= 1e-10
    theta = np.arctan2(*space_01.boundary.node_positions[:, ::-1].T)
    assert x1 @ B @ np.cos(theta) == pytest.approx(np.pi, rel=1e-2)


def test_boundary_mass_nonzero_only_on_boundary_rows(space_01):
    B = assemble_boundary_mass(space_01).tocoo()
    assert set(np.unique(B.row)) <= set(space_01.boundary_dofs)


def test_boundary_mass_rejects_foreign_boundary(space_01, mesh_02):
    other = P2BubbleSpace(mesh_02).boundary
    with pytest.raises(ValueError):
        assemble_boundary_mass(space_01, other)


def test_projection_basics(space_01):
    assert not project_analytic(lambda x: 0 * x[:, 0], space_01).coefficients.any()
    f = project_analytic(lambda x: x[:, 0], space_01)
    nv = space_01.mesh.n_vertices
    n_p2 = nv + len(space_01.edges)
    np.testing.assert_array_equal(f.coefficients[:n_p2], space_01.dof_coords[:n_p2, 0])


def test_projection_rejects_nonfinite(space_01):
    with pytest.raises(ValueError):
        project_analytic(lambda x: np.full(len(x), np.nan), space_01)


def test_interpolation_order():
    fn = lambda x: gaussian_bump(x, (0.1, -0.2), 0.3)
    errs = []
    for h in (0.2, 0.1):
        space = P2BubbleSpace(generate_disk_mesh(1.0, h))
        f = project_analytic(fn, space)
        # barycentres of the triangles' sub-triangle (1/6, 1/6, 2/3): off every node
        p = space.mesh.vertices[space.mesh.triangles]
        pts = (p[:, 0] + p[:, 1] + 4 * p[:, 2]) / 6.0
        errs.append(np.abs(f.evaluate(pts) - fn(pts)).max())
    order = np.log2(errs[0] / errs[1])
    assert order >= 2.5


def test_h10_inner_products(space_01):
    x1 = project_analytic(lambda x: x[:, 0], space_01)
    x2 = project_analytic(lambda x: x[:, 1], space_01)
    zero = NodalField.zeros(space_01)
    assert h10_inner(zero, zero) == 0.0
    assert abs(h10_inner(x1, x2)) <= 1e-10
    assert h10_inner(x1, x1) == pytest.approx(np.pi, rel=1e-2)


def test_h10_inner_dimension_mismatch(space_01, mesh_02):
    a = NodalField.zeros(space_01)
    b = NodalField.zeros(P2BubbleSpace(mesh_02))
    with pytest.raises(ValueError):
        h10_inner(a, b)


def test_nonpositive_speed_rejected(space_01):
    with pytest.raises(ValueError):
        assemble_weighted_mass(space_01, lambda x: -np.ones(x.shape[:-1]))


def test_field_rejects_wrong_size(space_01):
    with pytest.raises(ValueError):
        NodalField(space_01, np.zeros(3))
