import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from stablecocycle import stable_core as sc

alphas = st.sampled_from([0.5, 0.7, 1.0, 1.3, 1.4, 1.9])
betas = st.floats(-1, 1)


def test_params_validation():
    with pytest.raises(sc.StableParamError):
        sc.StableParams(0.0)
    with pytest.raises(sc.StableParamError):
        sc.StableParams(2.1)
    with pytest.raises(sc.StableParamError):
        sc.StableParams(1.5, sigma=0.0)
    with pytest.raises(sc.StableParamError):
        sc.StableParams(1.5, beta=1.5)
    assert sc.StableParams(2.0, 1.0, 0.7).beta == 0.0


def test_cf_at_zero_and_bounded():
    p = sc.StableParams(1.3, 2.0, 0.4, 1.0)
    th = np.linspace(-5, 5, 101)
    assert sc.cf(p, 0.0) == pytest.approx(1.0)
    assert np.all(np.abs(sc.cf(p, th)) <= 1 + 1e-15)


@given(alphas, betas, st.floats(0.1, 3), st.floats(-3, 3), st.floats(0.01, 4))
def test_cf_hermitian(a, b, s, m, t):
    p = sc.StableParams(a, s, b, m)
    assert sc.cf(p, -t) == pytest.approx(np.conj(sc.cf(p, t)), abs=1e-14)


def test_cauchy_and_gaussian_cdf_closed_forms():
    x = np.array([-50.0, -3.0, -0.4, 0.0, 0.9, 7.0, 200.0])
    c = sc.StableParams(1.0, 1.0, 0.0, 0.0)
    assert np.allclose(sc.cdf(c, x), 0.5 + np.arctan(x) / np.pi, atol=1e-10)
    g = sc.StableParams(2.0, 1.0, 0.0, 0.0)
    assert np.allclose(sc.cdf(g, x), stats.norm.cdf(x / math.sqrt(2)), atol=1e-12)


@pytest.mark.parametrize("a,b", [(0.7, 1.0), (0.7, -0.5), (1.0, 0.5), (1.4, 1.0), (1.4, -1.0), (1.9, 0.3)])
def test_cdf_matches_scipy_at_moderate_arguments(a, b):
    x = np.array([-4.0, -1.0, 0.3, 2.0, 9.0])
    ref = stats.levy_stable.cdf(x, a, b)
    assert np.allclose(sc.cdf(sc.StableParams(a, 1.0, b, 0.0), x), ref, atol=2e-6)


@pytest.mark.parametrize("a,b", [(0.5, 1.0), (0.7, 0.2), (1.0, 1.0), (1.4, 1.0), (1.9, 0.5)])
def test_upper_tail_matches_power_law(a, b):
    p = sc.StableParams(a, 1.3, b, 0.0)
    x = 1e7
    ref = sc.tail_constant(a) * (1 + b) / 2 * p.sigma**a * x**-a
    assert float(sc.sf(p, x)) == pytest.approx(ref, rel=2e-3)


def test_cdf_sf_complement():
    p = sc.StableParams(1.4, 1.0, 0.6, 0.2)
    x = np.array([-20.0, -1.0, 0.0, 1.0, 30.0])
    assert np.allclose(sc.cdf(p, x) + sc.sf(p, x), 1.0, atol=1e-12)


def test_one_sided_support():
    p = sc.StableParams(0.6, 1.0, 1.0, 0.5)
    assert float(sc.cdf(p, 0.49)) == 0.0
    q = sc.StableParams(0.6, 1.0, -1.0, 0.0)
    assert float(sc.sf(q, 0.01)) == 0.0


@settings(max_examples=25, deadline=None)
@given(alphas, st.sampled_from([-1.0, 0.0, 0.5, 1.0]), st.floats(0.02, 0.98))
def test_quantile_roundtrip(a, b, q):
    p = sc.StableParams(a, 1.0, b, 0.0)
    assert float(sc.cdf(p, sc.quantile(p, q))) == pytest.approx(q, abs=1e-9)


def test_quantile_rejects_bad_probability():
    with pytest.raises(ValueError):
        sc.quantile(sc.StableParams(1.5), 1.0)


@settings(max_examples=40, deadline=None)
@given(alphas, betas, st.floats(0.2, 3), st.floats(-2, 2),
       st.floats(0.2, 4) | st.floats(-4, -0.2), st.floats(-3, 3))
def test_scale_shift_cf_identity(a, b, s, m, c, d):
    p = sc.StableParams(a, s, b, m)
    if a == 1.0 and c < 0 and m != 0:
        with pytest.raises(sc.StableParamError):
            sc.scale_shift(p, c, d)
        return
    q = sc.scale_shift(p, c, d)
    th = np.array([-1.7, -0.3, 0.5, 1.1, 2.0])
    assert np.allclose(sc.cf(q, th), sc.cf(p, c * th) * np.exp(1j * th * d), atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(alphas, betas, betas, st.floats(0.2, 3), st.floats(0.2, 3))
def test_sum_independent_cf_identity(a, b1, b2, s1, s2):
    p1, p2 = sc.StableParams(a, s1, b1, 0.3), sc.StableParams(a, s2, b2, -1.0)
    q = sc.sum_independent(p1, p2)
    th = np.array([-2.0, -0.6, 0.4, 1.5])
    assert np.allclose(sc.cf(q, th), sc.cf(p1, th) * sc.cf(p2, th), atol=1e-12)


def test_sum_independent_rejects_mixed_index():
    with pytest.raises(sc.StableParamError):
        sc.sum_independent(sc.StableParams(1.2), sc.StableParams(1.3))


@pytest.mark.parametrize("a,b,mu", [(0.7, 1.0, 0.0), (1.0, 0.8, 0.5), (1.4, -0.6, 1.0)])
def test_sampler_ks_against_numerical_cdf(a, b, mu):
    p = sc.StableParams(a, 1.5, b, mu)
    x = sc.sample(p, np.random.default_rng(7), 20_000)
    res = stats.kstest(x, lambda v: sc.cdf(p, v))
    assert res.pvalue > 1e-3


def test_sampler_alpha_one_shift_matches_scale():
    # at alpha = 1 a scaled sample is shifted by (2/pi) beta sigma ln sigma
    p = sc.StableParams(1.0, 3.0, 1.0, 0.0)
    x = sc.sample(p, np.random.default_rng(3), 50_000)
    assert np.median(x) == pytest.approx(float(sc.quantile(p, 0.5)), abs=0.06)


def test_moments_quadrature_vs_monte_carlo():
    p = sc.StableParams(1.4, 1.0, 1.0, 0.0)
    for r, w in [(1, sc.TruncationWindow(-math.inf, 8.0)), (2, sc.TruncationWindow(0.0, 50.0)),
                 (0.5, sc.TruncationWindow(20.0, math.inf))]:
        q = sc.truncated_moment(p, r, w)
        m = sc.truncated_moment(p, r, w, "mc", np.random.default_rng(11), 400_000)
        assert abs(q.value - m.value) < 4 * m.stderr


def test_gaussian_second_moment():
    p = sc.StableParams(2.0, 1.0)
    v = sc.truncated_moment(p, 2, sc.TruncationWindow(-math.inf, math.inf)).value
    assert v == pytest.approx(2.0, rel=1e-7)


def test_divergent_moment_rejected():
    with pytest.raises(sc.DivergentMomentError):
        sc.truncated_moment(sc.StableParams(1.4, 1.0, 1.0), 1.5, sc.TruncationWindow(3.0, math.inf))
    with pytest.raises(ValueError):
        sc.TruncationWindow(2.0, 1.0)


def test_tail_constant_values():
    assert sc.tail_constant(1.0) == pytest.approx(2 / math.pi)
    assert sc.tail_constant(0.5) == pytest.approx(2 * math.gamma(0.5) * math.sin(math.pi / 4) / math.pi)
