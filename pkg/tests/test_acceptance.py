"""Acceptance criteria 1-12 on the full default suite.

The suite runs twice (1 thread and 4 threads); criteria 1-11 read the first
report, criterion 12 compares the two byte for byte.
"""
import time

import pytest

from conftest import ACCEPTANCE_LINES
from stablecocycle import verify as vf


@pytest.fixture(scope="module")
def runs():
    out = []
    for threads in (1, 4):
        cfg = vf.SuiteConfig(threads=threads)
        timings = {}
        t = time.perf_counter()
        rep = vf.run_suite(cfg, "all", timings=timings)
        out.append({"report": rep, "json": vf.report_json(rep), "timings": timings,
                    "wall": time.perf_counter() - t})
    return out


def _pick(report, prefix):
    hits = [r for r in report["results"] if r["name"].startswith(prefix)]
    assert hits, f"no results named {prefix}*"
    return hits


def _record(num, ok, detail):
    line = f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[num] = line
    print(line)
    return ok


def _fmt(results):
    return "; ".join(f"{r['name']}={r['statistic']:.4g}<= {r['threshold']:.4g}" for r in results)


def test_criterion_01_sampler_ks(runs):
    r = runs[0]
    res = _pick(r["report"], "ks_")
    t = r["timings"]["ks"]
    ok = all(x["pass"] for x in res) and t < 10
    assert _record(1, ok, _fmt(res) + f"; {t:.2f}s"), res


def test_criterion_02_roundtrip(runs):
    res = _pick(runs[0]["report"], "cdf_quantile_roundtrip")
    assert _record(2, res[0]["pass"], _fmt(res)), res


def test_criterion_03_exact_stability(runs):
    r = runs[0]
    res = _pick(r["report"], "exact_stability")
    ns = {x["metadata"]["n"] for x in res}
    alphas = {x["metadata"]["alpha"] for x in res}
    t = r["timings"]["exact"]
    ok = all(x["pass"] for x in res) and ns == {2**12, 2**20} and alphas == {0.5, 1.4} and t < 120
    assert _record(3, ok, _fmt(res) + f"; {t:.1f}s"), res


def test_criterion_04_grid_floor(runs):
    res = _pick(runs[0]["report"], "grid_floor")
    ok = res[0]["statistic"] == 0 and res[0]["metadata"]["kmax"] == 12 and res[0]["metadata"]["draws_per_row"] >= 10**6
    assert _record(4, ok, f"violations={res[0]['statistic']}"), res


def test_criterion_05_closed_form(runs):
    res = _pick(runs[0]["report"], "closed_form_block_sum")
    ok = res[0]["pass"] and res[0]["metadata"]["boundary_cases"] > 0 and res[0]["metadata"]["instances"] == 1000
    assert _record(5, ok, _fmt(res)), res


def test_criterion_06_equal_distribution(runs):
    res = _pick(runs[0]["report"], "equal_distribution")
    ok = all(x["pass"] for x in res) and {x["metadata"]["alpha"] for x in res} == {0.7, 1.4}
    assert _record(6, ok, _fmt(res)), res


def test_criterion_07_band_vanishing(runs):
    res = _pick(runs[0]["report"], "band_vanishing")
    rungs = res[0]["metadata"]["rungs"]
    detail = _fmt(res) + " | " + ", ".join(
        f"n={x['n']}: med|W^S|={x['median_sup_S']:.3f} P(W^L!=0)={x['freq_L_nonzero']:.4f}" for x in rungs)
    assert _record(7, all(x["pass"] for x in res), detail), res


def test_criterion_08_fclt_trend_and_cap(runs):
    res = _pick(runs[0]["report"], "fclt_trend") + _pick(runs[0]["report"], "fclt_cap")
    per = []
    for x in _pick(runs[0]["report"], "fclt_cap"):
        per.append(f"{x['name']}: d={['%.3f' % v for v in x['metadata']['distances']]}")
    ok = all(x["pass"] for x in res) and len(res) == 6
    assert _record(8, ok, _fmt([x for x in res if not x["pass"]]) or "all regimes" + " | " + " ; ".join(per)), \
        [x["name"] for x in res if not x["pass"]]


def test_criterion_09_increment_independence(runs):
    res = [x for x in _pick(runs[0]["report"], "increment_spearman") if x["name"] != "increment_spearman[x_level]"]
    ok = all(x["pass"] for x in res) and len(res) == 3 and all(x["metadata"]["n"] == 2**16 for x in res)
    assert _record(9, ok, _fmt(res)), res


def test_criterion_10_appendix(runs):
    res = _pick(runs[0]["report"], "appendix_")
    ok = all(x["pass"] for x in res)
    slopes = [x for x in res if "slope" in x["name"]]
    expected = {round(x["metadata"]["expected_slope"], 6) for x in slopes}
    assert _record(10, ok, f"{sum(x['pass'] for x in res)}/{len(res)} pass; exponents {sorted(expected)}"), \
        [x for x in res if not x["pass"]]


def test_criterion_11_bn_terms(runs):
    res = _pick(runs[0]["report"], "Bn_term")
    diag = _pick(runs[0]["report"], "Bn_asymptotic")
    ok = all(x["pass"] for x in res) and all(d["diagnostic"] for d in diag)
    assert _record(11, ok, _fmt(res)), res


def test_criterion_12_determinism_and_budget(runs):
    same = runs[0]["json"] == runs[1]["json"]
    wall = runs[0]["wall"]
    ok = same and wall < 900
    assert _record(12, ok, f"byte-identical={same} (threads 1 vs 4); wall {wall:.0f}s / {runs[1]['wall']:.0f}s"), \
        (same, wall)
