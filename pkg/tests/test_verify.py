import math

import numpy as np
import pytest

from stablecocycle import cocycle as cc
from stablecocycle import process as pr
from stablecocycle import stable_core as sc
from stablecocycle import verify as vf


def test_result_pass_rule():
    assert vf.TestResult("a", 1.0, 1.0).passed
    assert not vf.TestResult("a", 1.1, 1.0).passed
    assert vf.TestResult("a", math.nan, 1.0, applicable=False).passed
    d = vf.TestResult("a", 0.5, 1.0, {"x": np.float64(2.0)}).as_dict()
    assert d["pass"] is True and d["metadata"]["x"] == 2.0


def test_ecf_distance_null_and_degenerate():
    p = sc.StableParams(1.4, 0.8, 1.0, 0.0)
    x = sc.sample(p, np.random.default_rng(0), 10_000)
    assert vf.ecf_distance(x, p) < 4 / math.sqrt(10_000)
    zero = np.zeros(500)
    q = sc.StableParams(1.4, 1.0, 0.0, 0.0)
    assert vf.ecf_distance(zero, q) >= 1 - math.exp(-(2.0**1.4)) - 1e-12
    with pytest.raises(ValueError):
        vf.ecf_distance(x, p, theta_grid=[])
    with pytest.raises(ValueError):
        vf.ecf_distance(x[:50], p)


def test_ecf_distance_callable_target():
    p = sc.StableParams(0.7, 1.0, 1.0, 0.0)
    x = sc.sample(p, np.random.default_rng(1), 2000)
    assert vf.ecf_distance(x, lambda t: sc.cf(p, t)) == vf.ecf_distance(x, p)


def test_scaling_homogeneity_of_decisions():
    p = sc.StableParams(1.4, 0.9, 0.5, 0.0)
    x = sc.sample(p, np.random.default_rng(2), 10_000)
    thr = 4 / math.sqrt(10_000)
    base = vf.ecf_distance(x, p) <= thr
    for c in (0.5, 2.0):
        assert (vf.ecf_distance(c * x, sc.scale_shift(p, c, 0.0)) <= thr) == base


def test_exact_identity_small_n():
    r = vf.exact_stability_check(2**10, 0.5, 4000, 3)
    assert r.passed, r.as_dict()
    with pytest.raises(ValueError):
        vf.x_level_aggregate(2, 1.4, 100, 1)


def test_harmonic_sum_bracket():
    # sum over the middle band of 1/k approaches ln 2 between integral bounds
    for e in (10, 14, 20):
        rows = list(cc.band_ranges(2**e, 0.5).M)
        h = sum(1 / k for k in rows)
        lo = math.log((rows[-1] + 1) / rows[0])
        hi = math.log(rows[-1] / (rows[0] - 1))
        assert lo <= h <= hi


def test_x_level_increments_pass():
    w, wh, sig, _ = vf.x_level_aggregate(2**12, 1.4, 4000, 5, split=True)
    res = vf.increment_tests((wh, w), sc.StableParams(1.4, sig, 1.0, 0.0), 2**12, 4000, "x", self_similarity_gates=True)
    assert all(r.passed for r in res), [r.as_dict() for r in res]


def test_increment_breakpoint_handling():
    w = np.random.default_rng(0).standard_normal(200)
    res = vf.increment_tests((w / 2, w), None, 64, 200, "t", breakpoints=(0.0, 1.0))
    assert not res[0].applicable
    with pytest.raises(ValueError):
        vf.increment_tests((w, w), None, 64, 200, "t", breakpoints=(0.5, 0.0, 1.0))
    with pytest.raises(ValueError):
        vf.increment_tests((w, w), None, 1, 200, "t", breakpoints=(0.0, 0.5))


def test_grid_and_closed_form_checks():
    assert vf.grid_floor_check(1.4, 1, kmax=6, size=100_000).statistic == 0
    assert vf.closed_form_check(2, instances=200).passed


def test_ladder_length_errors():
    e = pr.ensemble_run(pr.EnsembleConfig(cc.Regime("sym", 1.4), 64), 120, 1)
    with pytest.raises(ValueError):
        vf.fclt_marginal_test([e], cc.Regime("sym", 1.4).target())
    with pytest.raises(ValueError):
        vf.band_vanishing_test([e, e])


def test_beta_mirror():
    n, M = 2**8, 2000
    up = pr.ensemble_run(pr.EnsembleConfig(cc.Regime("sub1", 0.7, 1.0), n), M, 1)["W1"]
    down = pr.ensemble_run(pr.EnsembleConfig(cc.Regime("sub1", 0.7, -1.0), n), M, 2)["W1"]
    assert vf.ecf_two_sample(up, -down) < 2 * 4 / math.sqrt(M)


def test_band_vanishing_union_bound():
    e = pr.ensemble_run(pr.EnsembleConfig(cc.Regime("sub1", 0.7, 1.0), 2**8), 1000, 3)
    res = vf.band_vanishing_test([e, e, e])
    rung = res[1].metadata["rungs"][0]
    # the bound holds for the probability; allow binomial noise on the frequency
    b = rung["union_bound_L"]
    assert 0 < rung["freq_L_nonzero"] < b + 3 * np.sqrt(b * (1 - b) / 1000)


def test_empty_middle_band_routes():
    r = vf.equal_distribution_test("super1", 2, 1.4, 200, 1)
    assert r.statistic == 0.0 and r.passed


def test_equal_distribution_sym_small():
    r = vf.equal_distribution_test("sym", 2**8, 1.4, 2000, 4)
    assert r.passed, r.as_dict()


def test_appendix_rejects_short_grid():
    with pytest.raises(ValueError):
        vf.appendix_moment_suite(1.4, 1, K_grid=(10.0, 20.0, 40.0))


def test_appendix_skips_divergent_case():
    res, skipped = vf.appendix_moment_suite(0.7, 1, r_grid=(2.0,), size=50_000)
    assert any(s["r"] == 2.0 for s in skipped)
    assert {r.metadata.get("window") for r in res if "slope" in r.name} == {"upper", "lower"}


def test_report_is_stable_json():
    results = [vf.TestResult("x", 0.1, 0.2, {"v": np.array([1.0, np.inf])})]
    rep = vf.build_report({"seed": 1}, results, "all")
    text = vf.report_json(rep)
    assert '"schema_version": "1.0"' in text
    assert vf.report_json(rep) == text
    assert rep["summary"]["all_pass"]
