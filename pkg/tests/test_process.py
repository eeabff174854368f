import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import ortho_group

from mdplab import process as P
from mdplab.errors import (DegenerateModelError, ResolutionError, SubsamplingExhausted,
                           ValidationError)

sim_mod = sys.modules["mdplab.process.simulate"]


def psd_transfer_fixtures(J=64):
    """Models whose transfer function is Hermitian PSD, so sqrt(2 pi f) recovers it."""
    j = np.arange(-J, J + 1)
    fejer = np.maximum(0.0, 11.0 - np.abs(j))
    poisson = 0.5 ** np.abs(j)
    q = ortho_group.rvs(2, random_state=3)
    mixed = np.einsum("ab,jbc,dc->jad", q, np.stack([np.diag([0.3 ** abs(k), max(0.0, 11.0 - abs(k))]) for k in j]), q)
    return [P.normalize_model(fejer, 0.5), P.normalize_model(poisson, 0.5), P.normalize_model(mixed, 0.5)]


# -- models --------------------------------------------------------------------------


def test_normalize_examples():
    np.testing.assert_allclose(P.normalize_model([0.0, 1.0, 1.0], 0.5).coeffs[:, 0, 0], [0, 2**-0.5, 2**-0.5])
    np.testing.assert_allclose(P.normalize_model([1.0, 0.0, 1.0], 0.5).coeffs[:, 0, 0], [2**-0.5, 0, 2**-0.5])
    with pytest.raises(DegenerateModelError):
        P.normalize_model([0.0, 0.0, 0.0], 0.5)
    with pytest.raises(ValidationError):
        P.normalize_model(np.ones((2, 1, 1)), 0.5)


@pytest.mark.parametrize("d,J", [(1, 0), (1, 16), (2, 32), (3, 8)])
def test_power_law_invariants(d, J):
    m = P.power_law_model(d, 0.5, J, seed=4)
    assert m.normalization_error() <= 1e-12
    assert m.coeffs.shape == (2 * J + 1, d, d)
    np.testing.assert_array_equal(m.coeffs, P.power_law_model(d, 0.5, J, seed=4).coeffs)
    assert np.isfinite(m.tail_bound) and m.truncation_tail() >= 0


def test_power_law_zero_halfwidth_is_white_noise():
    np.testing.assert_allclose(P.power_law_model(2, 0.5, 0, 9).coeffs, P.white_noise(2).coeffs)


def test_model_json_roundtrip(tmp_path):
    m = P.power_law_model(2, 0.5, 5, 1)
    m.to_json(tmp_path / "m.json")
    back = P.load_model(tmp_path / "m.json")
    np.testing.assert_allclose(back.coeffs, m.coeffs, atol=1e-15)


def test_covariance_matches_spectral_integral():
    m = P.power_law_model(2, 0.5, 8, 2)
    f = P.spectral_from_coeffs(m, 256)
    for lag in (0, 1, 5, -3, 16):
        # E[X_lag X_0^T] = int e^{i lag theta} f(theta) d theta with g = sum a_n e^{i n theta}
        direct = (np.exp(1j * lag * f.thetas)[:, None, None] * f.values).sum(axis=0) * 2 * np.pi / f.K
        np.testing.assert_allclose(P.covariance(m, lag), direct.real, atol=1e-12)
    np.testing.assert_array_equal(P.covariance(m, 17), 0.0)
    np.testing.assert_allclose(P.covariance(m, 0), np.eye(2), atol=1e-12)


# -- spectral ------------------------------------------------------------------------


def test_white_noise_density():
    f = P.spectral_from_coeffs(P.white_noise(2), 64)
    np.testing.assert_allclose(f.values, np.broadcast_to(np.eye(2) / (2 * np.pi), (64, 2, 2)), atol=1e-15)


def test_ma1_density_closed_form():
    m = P.normalize_model([0.0, 1.0, 1.0], 0.5)
    f = P.spectral_from_coeffs(m, 512)
    np.testing.assert_allclose(f.values[:, 0, 0].real, (1 + np.cos(f.thetas)) / (2 * np.pi), atol=1e-15)


@pytest.mark.parametrize("model", [P.power_law_model(2, 0.5, 20, 5), P.white_noise(3)])
def test_density_integrates_to_identity(model):
    f = P.spectral_from_coeffs(model, 1024)
    np.testing.assert_allclose(f.integral(), np.eye(model.dim), atol=1e-12)
    assert np.all(f.min_eigenvalues() >= -1e-14)


def test_resolution_error():
    with pytest.raises(ResolutionError):
        P.spectral_from_coeffs(P.power_law_model(1, 0.5, 16, 1), 32)


@pytest.mark.parametrize("idx", range(3))
def test_spectral_roundtrip(idx):
    m = psd_transfer_fixtures()[idx]
    f = P.spectral_from_coeffs(m, 4096)
    back = P.coeffs_from_spectral(f, 64, 0.5)
    assert np.max(np.abs(back.coeffs - m.coeffs)) <= 1e-8


def test_spectral_csv_roundtrip(tmp_path):
    f = P.spectral_from_coeffs(P.power_law_model(2, 0.5, 3, 1), 32)
    f.to_csv(tmp_path / "f.csv")
    g = P.read_spectral_csv(tmp_path / "f.csv")
    np.testing.assert_array_equal(g.values, f.values)


def test_subsampling_ma1():
    m = P.normalize_model([0.0, 1.0, 1.0], 0.5)
    f = P.spectral_from_coeffs(m, 4096)
    f2 = P.subsampled_spectral(f, 2)
    assert f2.K == 2048
    np.testing.assert_allclose(f2.values[:, 0, 0].real, 1 / (2 * np.pi), atol=1e-14)
    assert P.min_subsampling(f, 0.5) == 2
    # m = 1 fails at theta = pi (grid point theta = -pi)
    assert f.values[0, 0, 0].real < 0.25 / (2 * np.pi)


def test_subsampling_matches_subsampled_model():
    # the subsampled process of an MA has covariances C(m k); compare to f_m
    mod = P.power_law_model(1, 0.5, 6, 3)
    m = 3
    fm = P.subsampled_spectral(P.spectral_from_coeffs(mod, 3 * 512), m)
    for k in range(4):
        direct = ((np.exp(1j * k * fm.thetas) * fm.values[:, 0, 0]).sum() * 2 * np.pi / fm.K).real
        assert direct == pytest.approx(P.covariance(mod, m * k)[0, 0], abs=1e-12)


def test_subsampling_non_divisible_grid_resamples():
    f = P.spectral_from_coeffs(P.power_law_model(1, 0.5, 4, 3), 100)
    f3 = P.subsampled_spectral(f, 3)
    assert f3.metadata["resampled"]
    exact = P.subsampled_spectral(P.spectral_from_coeffs(P.power_law_model(1, 0.5, 4, 3), f3.K * 3), 3)
    np.testing.assert_allclose(f3.values, exact.values, atol=1e-13)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 1000))
def test_min_subsampling_is_minimal(seed):
    f = P.spectral_from_coeffs(P.power_law_model(1, 0.5, 8, seed), 720)
    sigma = 0.5
    target = sigma**2 / (2 * np.pi)
    try:
        m = P.min_subsampling(f, sigma, m_max=40)
    except SubsamplingExhausted:
        return
    assert np.min(P.subsampled_spectral(f, m).min_eigenvalues()) >= target - 1e-12
    for k in range(1, m):
        assert np.min(P.subsampled_spectral(f, k).min_eigenvalues()) < target - 1e-12


def test_subsampling_exhausted():
    # (1 + cos 2 theta)/(2 pi): f_2 still vanishes at pi, f_3 is flat
    m = P.normalize_model([1.0, 0.0, 1.0], 0.5)
    f = P.spectral_from_coeffs(m, 64)
    with pytest.raises(SubsamplingExhausted) as err:
        P.min_subsampling(f, 0.5, m_max=1)
    assert err.value.best_m == 1
    assert err.value.worst_eigenvalue == pytest.approx(0.0, abs=1e-15)
    assert P.min_subsampling(f, 0.5) == 3


# -- simulation ----------------------------------------------------------------------


def test_white_noise_path_is_noise():
    from mdplab import rng
    x = P.simulate(P.white_noise(2), 50, seed=3).values
    np.testing.assert_array_equal(x, rng.gaussian_block(3, sim_mod.NOISE_STREAM, 0, 1, 51, 2))


@pytest.mark.parametrize("J", [2, 40])
def test_split_is_exact_decomposition(J):
    m = P.power_law_model(2, 0.5, J, 1)
    s = P.split(m, 120, seed=5, start=-60)
    np.testing.assert_array_equal(s.values, s.past + s.future)
    np.testing.assert_array_equal(s.values, P.simulate(m, 120, seed=5, start=-60).values)
    # past part vanishes once k > J, future part vanishes for k <= -J
    k = s.times
    assert np.all(s.past[k > J] == 0)
    assert np.all(s.future[k <= -J] == 0)


def test_fft_and_direct_filters_agree(gen):
    coeffs = P.power_law_model(2, 0.5, 40, 1).coeffs
    noise = gen.standard_normal((3, 300, 2))
    fft_out = sim_mod._filter(coeffs, noise)
    direct = np.zeros_like(fft_out)
    for i in range(coeffs.shape[0]):
        direct += noise[:, i : i + fft_out.shape[1]] @ coeffs[i].T
    np.testing.assert_allclose(fft_out, direct, atol=1e-12)


def test_overlapping_windows_agree():
    m = P.power_law_model(1, 0.5, 64, 2)
    a = P.simulate(m, 200, seed=1, start=1).values
    b = P.simulate(m, 100, seed=1, start=51).values
    np.testing.assert_allclose(a[50:150], b, atol=1e-13)


def test_monte_carlo_covariance():
    m = P.normalize_model([0.0, 1.0, 1.0], 0.5)
    x = P.simulate_batch(m, 2, seed=8, replicates=range(20000))[:, :, 0]
    prod = x[:, 0] * x[:, 1]
    se = prod.std(ddof=1) / np.sqrt(len(prod))
    assert abs(prod.mean() - 0.5) <= 4 * se
    var = x[:, 0] ** 2
    assert abs(var.mean() - 1.0) <= 4 * var.std(ddof=1) / np.sqrt(len(var))


def test_past_future_uncorrelated():
    m = P.power_law_model(1, 0.5, 8, 2)
    _, past, fut = P.simulate_batch(m, 4, seed=2, replicates=range(20000), parts=True)
    prod = past[:, 0, 0] * fut[:, 0, 0]
    assert abs(prod.mean()) <= 4 * prod.std(ddof=1) / np.sqrt(len(prod))


def test_simulation_deterministic_across_batches():
    m = P.power_law_model(2, 0.5, 10, 1)
    a = P.simulate_batch(m, 30, seed=4, replicates=[0, 1, 2, 3])
    b = P.simulate_batch(m, 30, seed=4, replicates=[2])
    np.testing.assert_array_equal(a[2], b[0])


# -- continuous time -----------------------------------------------------------------


def ct_fixture(h=0.05):
    return P.ct_model_from_kernel(lambda s: np.exp(-abs(s)), 1, h, int(round(3 / h)), 0.5)


def test_ct_normalized_and_holder():
    m = ct_fixture()
    assert m.normalization_error() <= 1e-12
    assert np.isfinite(m.holder_quotient())
    assert m.as_discrete().normalization_error() <= 1e-12


def test_ct_split_and_variance():
    m = ct_fixture()
    s = P.ct_split(m, 4.0, 0.1, seed=3, start=-2.0)
    np.testing.assert_array_equal(s.values, s.past + s.future)
    x = sim_mod.ct_simulate_batch(m, 0.1, 0.1, 1, range(20000))[:, 0, 0]
    assert abs(np.mean(x**2) - 1) <= 4 * np.std(x**2) / np.sqrt(len(x))


def test_ct_spectral_mass_and_subsampling():
    m = ct_fixture()
    f = P.ct_spectral(m, 60.0, 4001)
    assert f.metadata["tail_mass"] < 0.02
    ft = P.ct_subsampled_spectral(f, 1.0, K_out=256)
    assert np.trace(ft.integral()).real == pytest.approx(1.0, abs=0.03)


def test_ct_gaussian_bump_folds_to_flat():
    # a wide bump folded at a coarse t is nearly flat at 1/(2 pi)
    f = P.gaussian_bump(1, 5.0, 60.0, 8001)
    ft = P.ct_subsampled_spectral(f, 2.0, K_out=128)
    np.testing.assert_allclose(ft.values[:, 0, 0].real, 1 / (2 * np.pi), atol=1e-6)
    assert not ft.metadata["tail_warning"]


def test_bad_ct_stride():
    with pytest.raises(ValidationError):
        P.ct_simulate(ct_fixture(), 1.0, 0.07, 1)
