import numpy as np
import pytest

from oracles import bdf2_integrator_response, bdf2_integrator_weights
from pat.cq import (
    CQConfig,
    compute_cq_weights,
    cq_scalar_weights,
    galerkin_rows,
    gamma_bdf2,
    lubich_inverse,
    retarded_convolve,
)
from pat.geometry import extract_boundary, generate_disk_mesh


@pytest.fixture(scope="module")
def bnd():
    return extract_boundary(generate_disk_mesh(1.0, 0.3))


@pytest.fixture(scope="module")
def w64(bnd):
    return compute_cq_weights(bnd, 64, 0.02, use_symmetry=False)


def test_gamma_values():
    assert gamma_bdf2(1.0) == 0.0
    assert gamma_bdf2(0.0) == 1.5
    assert gamma_bdf2(-1.0) == 4.0


def test_config_contour():
    cfg = CQConfig(50)
    assert cfg.L == 100
    assert cfg.beta == pytest.approx((2.0**-52) ** (1 / 100), rel=1e-15)


@pytest.mark.parametrize("N", [16, 64, 256, 900])
def test_integrator_weights_match_bdf2(N):
    dt = 0.01
    w = cq_scalar_weights(lambda s: 1.0 / s, N, dt)
    closed = bdf2_integrator_weights(N, dt)
    impulse = np.zeros(N + 1)
    impulse[0] = 1.0
    recursion = bdf2_integrator_response(impulse, dt)
    assert np.max(np.abs(w - closed)) <= 1e-8 * np.max(np.abs(closed))
    assert np.max(np.abs(w - recursion)) <= 1e-8 * np.max(np.abs(recursion))


def test_integrator_step_response():
    N, dt = 200, 0.005
    w = cq_scalar_weights(lambda s: 1.0 / s, N, dt)
    u = np.sin(np.linspace(0, 3, N + 1))
    conv = np.array([w[: n + 1][::-1] @ u[: n + 1] for n in range(N + 1)])
    ref = bdf2_integrator_response(u, dt)
    assert np.max(np.abs(conv - ref)) <= 1e-8 * np.max(np.abs(ref))


def test_weights_real(w64):
    assert w64.imag_residue <= 1e-6


def test_symmetry_shortcut_matches_full_transform(bnd, w64):
    half = compute_cq_weights(bnd, 64, 0.02, use_symmetry=True)
    # the full transform carries roundoff times beta^-N = eps^-1/2, about 1.5e-8 relative
    tol = 10 * np.sqrt(np.finfo(float).eps)
    assert np.abs(half.rows_v - w64.rows_v).max() <= tol * np.abs(w64.rows_v).max()
    assert np.abs(half.rows_k - w64.rows_k).max() <= tol * np.abs(w64.rows_k).max()


def test_single_layer_symmetric(w64):
    Wv = w64.Wv
    assert np.abs(Wv - Wv.transpose(0, 2, 1)).max() <= 1e-10 * np.abs(Wv).max()


def test_causality(w64):
    n0 = 20
    hist = np.zeros((w64.N + 1, w64.n_b))
    hist[n0] = np.random.default_rng(0).standard_normal(w64.n_b)
    out = np.array([retarded_convolve(w64, "V", hist[: n + 1], n) for n in range(w64.N + 1)])
    assert np.abs(out[:n0]).max() <= 1e-8 * np.abs(out).max()
    assert np.abs(out[n0:]).max() > 0


def test_dft_round_trip(bnd):
    N, dt = 32, 0.03
    cfg = CQConfig(N)
    s = gamma_bdf2(cfg.contour()) / dt
    rows = np.array([galerkin_rows(bnd, sl)[0] for sl in s])
    w, _ = lubich_inverse(rows, cfg, half=False)
    # the full L-point inverse is needed to recover the samples: extend to L steps
    full = np.fft.fft(rows, axis=0) / cfg.L * cfg.beta ** (-np.arange(cfg.L))[:, None]
    np.testing.assert_allclose(full[: N + 1].real, w, atol=1e-12 * np.abs(w).max())
    zeta = np.exp(2j * np.pi * np.arange(cfg.L) / cfg.L)
    back = np.array([(full * (cfg.beta * zeta[l]) ** np.arange(cfg.L)[:, None]).sum(0) for l in range(cfg.L)])
    assert np.abs(back - rows).max() <= 1e-8 * np.abs(rows).max()


def test_weights_bounded_for_long_runs(bnd):
    ws = compute_cq_weights(bnd, 512, 0.01)
    norms = np.abs(ws.Wv).sum(axis=2).max(axis=1)
    assert np.all(np.isfinite(norms))
    assert norms.max() <= 10 * norms[:10].max()


def test_convolve_properties(w64, rng):
    hist = rng.standard_normal((11, w64.n_b))
    assert not retarded_convolve(w64, "K", np.zeros_like(hist), 10).any()
    a = retarded_convolve(w64, "V", hist, 10)
    b = retarded_convolve(w64, "V", 2.5 * hist, 10)
    np.testing.assert_allclose(b, 2.5 * a, rtol=1e-12)
    shifted = np.vstack([np.zeros((1, w64.n_b)), hist])
    np.testing.assert_allclose(retarded_convolve(w64, "V", shifted, 11), a, atol=1e-13 * np.abs(a).max())
    dense = sum(w64.matrix("V", 10 - j) @ hist[j] for j in range(11))
    np.testing.assert_allclose(a, dense, atol=1e-12 * np.abs(dense).max())


def test_convolve_size_checks(w64):
    with pytest.raises(ValueError):
        retarded_convolve(w64, "V", np.zeros((3, w64.n_b + 1)), 2)
    with pytest.raises(ValueError):
        retarded_convolve(w64, "V", np.zeros((3, w64.n_b)), 5)


def test_galerkin_rows_match_fourier_closed_forms(bnd):
    # constant and first-harmonic densities on the circle: V e_k = R I_k K_k e_k in the continuum
    from scipy.special import iv, kv

    s = 3.0
    rv, rk = galerkin_rows(bnd, s)
    R = bnd.radius
    n = bnd.n
    lam_v = np.fft.fft(rv).real
    # Galerkin eigenvalue = (P1 mass eigenvalue) x (continuum symbol) up to O(h^2)
    ds = 2 * np.pi * R / n
    for k in (0, 1):
        mass_k = ds * (2 / 3 + np.cos(2 * np.pi * k / n) / 3)
        symbol = R * iv(k, s * R) * kv(k, s * R)
        assert lam_v[k] / mass_k == pytest.approx(symbol, rel=2e-2)


def test_bad_arguments(bnd):
    with pytest.raises(ValueError):
        compute_cq_weights(bnd, 0, 0.1)
    with pytest.raises(ValueError):
        compute_cq_weights(bnd, 10, -0.1)


def test_disk_cache_round_trip(bnd, tmp_path):
    a = compute_cq_weights(bnd, 12, 0.05, cache_dir=tmp_path)
    files = list(tmp_path.glob("cq_*.pacq"))
    assert len(files) == 1
    b = compute_cq_weights(bnd, 12, 0.05, cache_dir=tmp_path)
    np.testing.assert_array_equal(a.rows_v, b.rows_v)
    np.testing.assert_array_equal(a.rows_k, b.rows_k)


def test_cache_dir_from_environment(bnd, tmp_path, monkeypatch):
    monkeypatch.setenv("PAT_CACHE_DIR", str(tmp_path))
    compute_cq_weights(bnd, 8, 0.05)
    assert len(list(tmp_path.glob("cq_*.pacq"))) == 1
