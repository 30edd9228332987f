import numpy as np
import pytest

from pat.fem import project_analytic
from pat.geometry import generate_disk_mesh
from pat.operators import OperatorSetup, add_noise, adjoint_L, forward_L, l2_sigma_norm, resample_trace
from pat.phantoms import estimate_T0, gaussian_bump, make_phantom, make_speed
from pat.recon import (
    LandweberConfig,
    estimate_omega,
    landweber,
    neumann_series,
    relative_error,
    time_reversal,
)
from pat.wavesolver import TimeGrid


def blob(x):
    return gaussian_bump(x, (0.15, -0.1), 0.18)


@pytest.fixture(scope="module")
def data(coarse_setup):
    f = coarse_setup.project(blob)
    return f, forward_L(f, coarse_setup)


@pytest.fixture(scope="module")
def omega_runs(coarse_setup):
    return [estimate_omega(coarse_setup, power_iters=10, seed=s) for s in (0, 1, 2)]


def test_config_validation():
    with pytest.raises(ValueError):
        LandweberConfig(omega=0.0)
    with pytest.raises(ValueError):
        LandweberConfig(omega=1.0, tau=1.0)
    with pytest.raises(ValueError):
        LandweberConfig(omega=1.0, delta=-0.1)
    with pytest.raises(ValueError):
        LandweberConfig(omega=1.0, k_max=-1)


def test_omega_by_construction(omega_runs):
    for est in omega_runs:
        assert est.omega * est.lam_max == pytest.approx(0.95, rel=1e-14)
        assert est.converged


def test_omega_stable_across_seeds(omega_runs):
    lams = np.array([e.lam_max for e in omega_runs])
    assert lams.max() <= 1.05 * lams.min()


def test_rayleigh_quotients_non_decreasing(omega_runs):
    for est in omega_runs:
        r = np.array(est.rayleigh)
        assert np.all(np.diff(r) >= -1e-3 * r[-1])


def test_power_iteration_count(coarse_setup):
    with pytest.raises(ValueError):
        estimate_omega(coarse_setup, power_iters=2)


def test_landweber_zero_data(coarse_setup):
    rep = landweber(coarse_setup.zero_trace(), coarse_setup, LandweberConfig(omega=1.0, delta=0.1))
    assert rep.stop_index == 0 and rep.returned_index == 0 and rep.stop_reason == "discrepancy"
    assert not rep.final.coefficients.any()


def test_landweber_first_step(coarse_setup, data, omega_runs):
    omega = omega_runs[0].omega
    rep = landweber(data[1], coarse_setup, LandweberConfig(omega=omega, k_max=1))
    expect = omega * adjoint_L(data[1], coarse_setup).coefficients
    assert np.abs(rep.final.coefficients - expect).max() <= 1e-12 * np.abs(expect).max()
    assert rep.stop_reason == "cap" and rep.returned_index == 1


def test_landweber_residual_decreasing(coarse_setup, data, omega_runs):
    rep = landweber(data[1], coarse_setup, LandweberConfig(omega=omega_runs[0].omega, k_max=15), f_true=data[0])
    r = np.array(rep.residuals)
    assert np.all(np.diff(r) < 0)
    assert rep.errors[-1] < rep.errors[0] == 1.0


def test_landweber_report_csv(coarse_setup, data, omega_runs, tmp_path):
    rep = landweber(data[1], coarse_setup, LandweberConfig(omega=omega_runs[0].omega, k_max=4, snapshot_every=2), f_true=data[0])
    assert sorted(rep.snapshots) == [0, 2, 4]
    rep.write_csv(tmp_path / "r.csv")
    lines = (tmp_path / "r.csv").read_text().splitlines()
    assert lines[0] == "iter,residual,phantom_error" and len(lines) == 6


def test_time_reversal_zero(coarse_setup):
    for mode in ("plain", "harmonic"):
        assert not time_reversal(coarse_setup.zero_trace(), coarse_setup, mode).coefficients.any()


def test_harmonic_mode_equals_plain_when_final_slice_vanishes(coarse_setup, data):
    vals = data[1].values.copy()
    vals[-1] = 0.0
    m = coarse_setup.trace(vals)
    a = time_reversal(m, coarse_setup, "plain").coefficients
    b = time_reversal(m, coarse_setup, "harmonic").coefficients
    assert np.abs(a - b).max() <= 1e-12 * np.abs(a).max()


def test_time_reversal_checks(coarse_setup, data):
    with pytest.raises(ValueError):
        time_reversal(data[1], coarse_setup, "sideways")
    with pytest.raises(ValueError):
        time_reversal(np.zeros((2, 2)), coarse_setup)


@pytest.mark.slow
def test_time_reversal_long_window():
    # c = 1, T = 4: the wave has left the disk, so plain time reversal is accurate
    phantom = make_phantom("ghosts", 0.12)
    sim = OperatorSetup(generate_disk_mesh(1.0, 0.06), 1.0, TimeGrid.from_step(4.0, 0.06 / 15))
    m = forward_L(sim.project(phantom), sim)
    rec = OperatorSetup(generate_disk_mesh(1.0, 0.1), 1.0, TimeGrid.from_step(4.0, 0.1 / 14))
    f = time_reversal(resample_trace(m, rec.boundary.n, rec.grid), rec, "plain")
    assert relative_error(f, rec.project(phantom)) <= 0.10


def test_neumann_zero_data(coarse_setup):
    assert not neumann_series(coarse_setup.zero_trace(), coarse_setup, 3).coefficients.any()


def test_neumann_base_case(coarse_setup, data):
    a = neumann_series(data[1], coarse_setup, 0).coefficients
    b = time_reversal(data[1], coarse_setup, "harmonic").coefficients
    np.testing.assert_array_equal(a, b)


def test_neumann_history_and_validation(coarse_setup, data):
    hist = []
    neumann_series(data[1], coarse_setup, 2, history=hist)
    assert len(hist) == 3
    with pytest.raises(ValueError):
        neumann_series(data[1], coarse_setup, -1)


def test_neumann_reduces_residual(coarse_setup, data):
    hist = []
    neumann_series(data[1], coarse_setup, 3, history=hist)
    res = []
    for f in hist:
        c = f.coefficients.copy()
        c[coarse_setup.space.boundary_dofs] = 0.0
        res.append(l2_sigma_norm(forward_L(coarse_setup.field(c), coarse_setup) - data[1]))
    assert res[-1] < res[0]


def test_relative_error_identities(space_01):
    f = project_analytic(blob, space_01)
    z = project_analytic(lambda x: 0 * x[..., 0], space_01)
    two = project_analytic(lambda x: 2 * blob(x), space_01)
    for norm in ("L2", "H01"):
        assert relative_error(f, f, norm) == 0.0
        assert relative_error(z, f, norm) == pytest.approx(1.0, rel=1e-14)
        assert relative_error(two, f, norm) == pytest.approx(1.0, rel=1e-12)


def test_relative_error_checks(space_01, coarse_setup):
    f = project_analytic(blob, space_01)
    z = project_analytic(lambda x: 0 * x[..., 0], space_01)
    with pytest.raises(ValueError):
        relative_error(f, z)
    with pytest.raises(ValueError):
        relative_error(f, f, "Linf")
    with pytest.raises(ValueError):
        relative_error(f, coarse_setup.project(blob))


@pytest.mark.xfail(strict=True, reason="white noise barely enters the range of L*: the error keeps falling long after the discrepancy stop")
def test_discrepancy_stop_near_error_minimum():
    c = make_speed("nontrapping")
    T = 1.2 * estimate_T0(c, 0.01)
    phantom = make_phantom("ghosts", 0.24)
    sim = OperatorSetup(generate_disk_mesh(1.0, 0.12), c, TimeGrid.from_step(T, 0.12 / (15 * c.c_max)))
    S = OperatorSetup(generate_disk_mesh(1.0, 0.2), c, TimeGrid.from_step(T, 0.2 / (14 * c.c_max)))
    m = resample_trace(forward_L(sim.project(phantom), sim), S.boundary.n, S.grid)
    delta = 0.5 * l2_sigma_norm(m)
    md = add_noise(m, delta, 7)
    omega = estimate_omega(S, 10).omega
    full = landweber(md, S, LandweberConfig(omega, k_max=60), f_true=S.project(phantom))
    stop = landweber(md, S, LandweberConfig(omega, delta=delta, k_max=60)).stop_index
    best = int(np.argmin(full.errors))
    assert stop is not None and abs(stop - best) <= 0.3 * best
