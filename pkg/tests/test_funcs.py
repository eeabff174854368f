import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import erfc

from mdplab import funcs
from mdplab.errors import ValidationError

EULER_GAMMA = 0.5772156649015329


def test_log_norm_center_oracle():
    F = funcs.make_function("log-norm", 2)
    assert F.center_const == pytest.approx((math.log(2) - EULER_GAMMA) / 2, abs=1e-10)


def test_smooth_abs_center_oracle():
    # E sqrt(1 + |Y|^2) in d = 2 with |Y|^2 ~ 2 Exp(1)
    F = funcs.make_function("lipschitz-smooth-abs", 2)
    oracle = 1 + math.exp(0.5) * math.sqrt(math.pi / 2) * erfc(math.sqrt(0.5))
    assert F.center_const == pytest.approx(oracle, abs=1e-10)


def test_linear_is_centered():
    F = funcs.make_function("linear-coordinate", 3)
    assert F.center_const == 0.0
    np.testing.assert_array_equal(F(np.array([[1.0, 2.0, 3.0]])), [1.0])


def test_high_dimension_center_by_monte_carlo():
    F = funcs.make_function("log-norm", 6, budget=200_000, seed=1)
    # E ln|Y| = (ln 2 + digamma(d/2))/2
    from scipy.special import digamma
    assert abs(F.center_const - (math.log(2) + digamma(3)) / 2) <= 4 * F.center_stderr


def test_log_norm_d1_rejected():
    with pytest.raises(ValidationError, match="d >= 2"):
        funcs.make_function("log-norm", 1)
    with pytest.raises(ValidationError):
        funcs.make_function("cubic", 2)


def test_log_norm_at_origin_is_finite():
    F = funcs.make_function("log-norm", 2)
    v = F(np.zeros((1, 2)))
    assert np.isfinite(v).all()
    assert v[0] == pytest.approx(math.log(funcs.NORM_FLOOR) - F.center_const)


def test_custom_function_centered():
    F = funcs.custom_function(lambda x: x[..., 0] ** 2, 1, budget=100_000, seed=2)
    assert abs(F.center_const - 1.0) <= 4 * F.center_stderr
    assert funcs.zero_function(2)(np.ones((3, 2))).tolist() == [0.0, 0.0, 0.0]


# -- envelope ---------------------------------------------------------------------


@pytest.mark.parametrize("kind,d", [("linear-coordinate", 2), ("lipschitz-smooth-abs", 3), ("log-norm", 2)])
def test_ball_search_below_closed_form(kind, d):
    F = funcs.make_function(kind, d)
    x = np.linspace(0.3, 1.1, d)
    exact = funcs.envelope(F, x, funcs.EnvelopeQuery(0.4))
    search = funcs.envelope(F, x, funcs.EnvelopeQuery(0.4, "ball-search", 20_000, 3))
    assert search <= exact + 1e-12
    assert search >= exact - 1e-3


@settings(max_examples=40, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(0.01, 2), st.floats(0.01, 2))
def test_envelope_monotone_in_radius(x0, x1, r1, r2):
    F = funcs.make_function("log-norm", 2)
    x = np.array([x0, x1])
    lo, hi = sorted((r1, r2))
    assert funcs.envelope(F, x, lo) <= funcs.envelope(F, x, hi) + 1e-12
    assert funcs.envelope(F, x, lo) >= F(x) - 1e-12


def test_envelope_lipschitz_gap_bounded():
    F = funcs.make_function("lipschitz-smooth-abs", 2)
    z = np.random.default_rng(0).standard_normal((1000, 2)) * 3
    gap = F.gap(z, 0.7)
    assert np.all(gap >= 0) and np.all(gap <= 0.7 + 1e-12)


def test_envelope_query_validation():
    with pytest.raises(ValidationError):
        funcs.EnvelopeQuery(0.0)
    with pytest.raises(ValidationError):
        funcs.EnvelopeQuery(1.0, "grid")


# -- exponential integrability ------------------------------------------------------


def test_exp_integrability_log_norm():
    F = funcs.make_function("log-norm", 2)
    res = funcs.check_exp_integrability(F, budget=400_000, seed=3)
    c = F.center_const
    # E|Y| = E 1/|Y| = sqrt(pi/2) for Y ~ N(0, I_2)
    plus, minus = math.sqrt(math.pi / 2) * math.exp(-c), math.sqrt(math.pi / 2) * math.exp(c)
    assert res.quadrature_plus == pytest.approx(plus, rel=1e-8)
    assert res.quadrature_minus == pytest.approx(minus, rel=1e-8)
    assert abs(res.mean_exp_plus - plus) <= 4 * res.stderr_plus
    assert not res.diverging


def test_exp_integrability_linear():
    res = funcs.check_exp_integrability(funcs.make_function("linear-coordinate", 1), budget=200_000, seed=4)
    assert res.quadrature_plus == pytest.approx(math.exp(0.5), rel=1e-10)
    assert abs(res.mean_exp_minus - math.exp(0.5)) <= 4 * res.stderr_minus


def test_gaussian_expectation_of_f_is_zero():
    for kind, d in [("lipschitz-smooth-abs", 1), ("log-norm", 3), ("linear-coordinate", 2)]:
        assert funcs.gaussian_expectation(funcs.make_function(kind, d), lambda t: t) == pytest.approx(0, abs=1e-9)


# -- smoothness constant --------------------------------------------------------------


def test_smoothness_linear_is_exactly_one():
    F = funcs.make_function("linear-coordinate", 2)
    rep = funcs.estimate_smoothness_constant(F, [[0.0, 0.0], [1.0, -1.0]], [0.1, 1.0], budget=1000)
    assert rep.C_hat == pytest.approx(1.0, rel=1e-12)


def test_smoothness_log_norm_against_rice_oracle():
    # for small r, I(x, r) ~ 1 + r E 1/|x + Y/2|
    F = funcs.make_function("log-norm", 2)
    r = 1e-3
    x = np.array([[0.0, 0.0], [1.0, 0.5]])
    rep = funcs.estimate_smoothness_constant(F, x, [r], budget=400_000, seed=5)
    for row in rep.rows:
        slope = (row["I_hat"] - 1) / r
        oracle = funcs.inverse_norm_moment_2d(x[row["x_index"]])
        assert slope == pytest.approx(oracle, rel=0.02)
    assert all(row["I_hat"] >= 1 for row in rep.rows)


def test_smoothness_report_csv(tmp_path):
    F = funcs.make_function("lipschitz-smooth-abs", 2)
    rep = funcs.estimate_smoothness_constant(F, [[0.0, 0.0]], [0.5], budget=2000)
    rep.to_csv(tmp_path / "s.csv")
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "x_index,r,I_hat,stderr,ln_I_over_r" and len(lines) == 2
    assert rep.C_hat <= 1.0 + 1e-12


def test_smoothness_custom_uses_ball_search():
    F = funcs.custom_function(lambda x: x[..., 0], 1, budget=1000, lipschitz_const=1.0)
    rep = funcs.estimate_smoothness_constant(F, [[0.0]], [0.5], budget=200, search_samples=64)
    assert 0.9 <= rep.C_hat <= 1.0 + 1e-12


def test_violation_probe_diverges():
    probe = funcs.violation_probe_1d_log([0.01, 0.1], budget=50_000, seed=1)
    assert probe.diverging
    vals = [t["ln_I_over_r"] for t in probe.truncation if t["r"] == 0.01]
    assert all(b > a for a, b in zip(vals, vals[1:]))
    assert probe.rows[0]["ln_I_over_r"] > 10 * 2.6


def test_inverse_norm_moment_2d_far_field():
    assert funcs.inverse_norm_moment_2d(np.zeros(2)) == pytest.approx(2 * math.sqrt(math.pi / 2))
    assert funcs.inverse_norm_moment_2d(np.array([30.0, 40.0])) == pytest.approx(1 / 50, rel=1e-3)
