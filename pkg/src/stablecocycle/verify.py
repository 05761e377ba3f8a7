"""Statistical checks of simulated ensembles against stable limit laws.

Every check returns TestResult objects with pass = (statistic <= threshold).
Empirical characteristic function (ECF) distances are the main statistic;
the null constant ECF_NULL_CONST was calibrated with
``scripts/calibrate_thresholds.py`` (99% quantile of sqrt(M) * distance is
about 2.6 across the target laws, so 4 leaves room).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import __version__
from . import cocycle as cc
from . import process as pr
from . import stable_core as sc
from . import triangular_array as ta

__all__ = [
    "SCHEMA_VERSION",
    "ECF_NULL_CONST",
    "THETA_GRID",
    "TestResult",
    "limit_target",
    "ecf",
    "ecf_distance",
    "ecf_two_sample",
    "ks_check",
    "roundtrip_check",
    "exact_stability_check",
    "x_level_aggregate",
    "grid_floor_check",
    "closed_form_check",
    "fclt_marginal_test",
    "increment_tests",
    "band_vanishing_test",
    "appendix_moment_suite",
    "equal_distribution_test",
    "bn_oracle_test",
    "bn_asymptotic_diagnostic",
    "SuiteConfig",
    "run_suite",
    "report_json",
]

SCHEMA_VERSION = "1.0"
ECF_NULL_CONST = 4.0
THETA_GRID = np.linspace(-2.0, 2.0, 41)


def _clean(x):
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_clean(v) for v in x.tolist()]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    return x


@dataclass
class TestResult:
    __test__ = False  # keep pytest from collecting this class

    name: str
    statistic: float
    threshold: float
    metadata: dict = field(default_factory=dict)
    diagnostic: bool = False
    applicable: bool = True

    @property
    def passed(self) -> bool:
        if not self.applicable:
            return True
        return bool(self.statistic <= self.threshold)

    def as_dict(self):
        return _clean({
            "name": self.name,
            "statistic": self.statistic,
            "threshold": self.threshold,
            "pass": self.passed,
            "diagnostic": self.diagnostic,
            "applicable": self.applicable,
            "metadata": self.metadata,
        })


def limit_target(regime: cc.Regime) -> sc.StableParams:
    return regime.target()


# ---------------------------------------------------------------- ECF


def ecf(samples, theta=THETA_GRID):
    x = np.asarray(samples, dtype=float)
    theta = np.asarray(theta, dtype=float)
    out = np.empty(theta.size, dtype=complex)
    # chunk over theta to bound memory for large sample sets
    for i in range(0, theta.size, 8):
        out[i : i + 8] = np.exp(1j * np.outer(theta[i : i + 8], x)).mean(axis=1)
    return out


def ecf_distance(samples, target, theta_grid=THETA_GRID) -> float:
    """max_theta |ECF(theta) - CF(theta)|; `target` is StableParams or a
    callable returning CF values."""
    theta = np.asarray(theta_grid, dtype=float)
    if theta.size == 0:
        raise ValueError("empty theta grid")
    if len(samples) < 100:
        raise ValueError("need at least 100 samples")
    ref = target(theta) if callable(target) else sc.cf(target, theta)
    return float(np.max(np.abs(ecf(samples, theta) - ref)))


def ecf_two_sample(a, b, theta_grid=THETA_GRID) -> float:
    theta = np.asarray(theta_grid, dtype=float)
    if theta.size == 0:
        raise ValueError("empty theta grid")
    return float(np.max(np.abs(ecf(a, theta) - ecf(b, theta))))


def null_threshold(M: int, const: float = ECF_NULL_CONST) -> float:
    return const / math.sqrt(M)


# ---------------------------------------------------------------- stable core


def ks_check(seed: int, size: int = 100_000, level: float = 0.99) -> list[TestResult]:
    """Sampler vs closed-form CDFs: Cauchy (a=1) and N(0, 2) (a=2)."""
    out = []
    crit = float(stats.kstwo.ppf(level, size))
    cases = [
        ("ks_cauchy", sc.StableParams(1.0, 1.0, 0.0, 0.0), stats.cauchy.cdf),
        ("ks_gaussian", sc.StableParams(2.0, 1.0, 0.0, 0.0), stats.norm(scale=math.sqrt(2)).cdf),
    ]
    for i, (name, p, ref) in enumerate(cases):
        x = sc.sample(p, cc.substream(seed, 1, 900, i), size)
        d = stats.kstest(x, ref).statistic
        out.append(TestResult(name, d, crit, {"size": size, "level": level, "params": p.as_dict(), "seed": seed}))
    return out


def roundtrip_check(alphas=(0.5, 0.7, 1.0, 1.4, 1.9), betas=(-1.0, 0.0, 1.0), tol=1e-6) -> TestResult:
    qs = np.round(np.arange(1, 100) / 100, 2)
    worst, where = 0.0, None
    for a in alphas:
        for b in betas:
            p = sc.StableParams(a, 1.0, b, 0.0)
            x = sc.quantile(p, qs)
            err = np.abs(sc.cdf(p, x) - qs)
            i = int(np.argmax(err))
            if err[i] > worst:
                worst, where = float(err[i]), {"alpha": a, "beta": b, "q": float(qs[i])}
    return TestResult("cdf_quantile_roundtrip", worst, tol, {"worst_case": where, "q_grid": "0.01..0.99",
                                                             "alphas": list(alphas), "betas": list(betas)})


# ---------------------------------------------------------------- exact identities


def x_level_aggregate(n: int, alpha: float, M_r: int, seed: int, blocks: int = 64, split: bool = False):
    """n^(-1/a) sum_{k in M} sum_{j<n} X_k(j), replicated M_r times.

    Each row's n-term sum is drawn as `blocks` explicit block sums of n/blocks
    terms (a block sum of i.i.d. S_a(s,1,0) terms is S_a(s (n/blocks)^(1/a),1,0)).
    With split=True also returns the first-half value (breakpoint 1/2).
    """
    if alpha == 1.0:
        raise ValueError("the skewed exact identity needs alpha != 1")
    bands = cc.band_ranges(n, alpha)
    rows = list(bands.M)
    if not rows:
        raise ValueError(f"empty middle band at n={n}, alpha={alpha}")
    blocks = max(2, min(blocks, n))
    if blocks % 2:
        blocks += 1
    size = n / blocks
    total = np.zeros(M_r)
    half = np.zeros(M_r)
    for k in rows:
        p = sc.StableParams(alpha, (size / k) ** (1 / alpha), 1.0, 0.0)
        x = sc.sample(p, cc.substream(seed, 1, 901, n, k), (M_r, blocks))
        total += x.sum(axis=1)
        half += x[:, : blocks // 2].sum(axis=1)
    scale = n ** (-1 / alpha)
    sig = sum(1 / k for k in rows) ** (1 / alpha)
    if split:
        return total * scale, half * scale, sig, rows
    return total * scale, sig, rows


def exact_stability_check(n: int, alpha: float, M_r: int, seed: int, const: float = ECF_NULL_CONST) -> TestResult:
    w, sig, rows = x_level_aggregate(n, alpha, M_r, seed)
    target = sc.StableParams(alpha, sig, 1.0, 0.0)
    d = ecf_distance(w, target)
    return TestResult(f"exact_stability[n={n},alpha={alpha}]", d, null_threshold(M_r, const),
                      {"n": n, "alpha": alpha, "M": M_r, "seed": seed, "rows": [rows[0], rows[-1]],
                       "sigma_alpha": sig**alpha, "ln2": math.log(2)})


def grid_floor_check(alpha: float, seed: int, kmax: int = 12, size: int = 1_000_000) -> TestResult:
    """0 <= Y - Z < 4^-k pathwise, on draws of Y given Y != 0."""
    bad = 0
    for k in range(1, kmax + 1):
        y = ta.conditional_law(k, alpha).quantile(cc.substream(seed, 1, 902, k).uniform(size=size))
        z = ta.grid_value(ta.discretize(y, k), k)
        diff = y - z
        bad += int(np.sum((diff < 0) | (diff >= 4.0**-k)))
    return TestResult(f"grid_floor[alpha={alpha}]", bad, 0, {"kmax": kmax, "draws_per_row": size, "seed": seed})


def _brute_phi_sum(f, n, D):
    c = np.concatenate([[0.0], np.cumsum(f)])
    phi = (c[D : D + n] - c[:n]) / D
    return float(np.sum(phi))


def closed_form_check(seed: int, instances: int = 1000, tol: float = 1e-12) -> TestResult:
    rng = cc.substream(seed, 1, 903)
    worst = 0.0
    boundary = 0
    for i in range(instances):
        n = int(rng.integers(1, 65))
        D = n if i % 10 == 0 else int(rng.integers(1, 257))
        boundary += n == D
        f = rng.standard_exponential(n + D - 1) * (rng.uniform(size=n + D - 1) < 0.3)
        ref = _brute_phi_sum(f, n, D)
        got = cc.birkhoff_block_sum(f, n, D)
        err = abs(got - ref) / max(abs(ref), 1e-300) if ref != 0 else abs(got)
        worst = max(worst, err)
    return TestResult("closed_form_block_sum", worst, tol, {"instances": instances, "boundary_cases": boundary,
                                                            "seed": seed})


# ---------------------------------------------------------------- limit tests


def fclt_marginal_test(ensembles, target: sc.StableParams, cap: float = 0.05,
                       slack_const: float = 2.0, field_name: str = "W1", label: str = "") -> list[TestResult]:
    """Trend (distance non-increasing along the ladder, +slack_const/sqrt(M)
    per step) and absolute cap at the largest n."""
    if len(ensembles) < 2:
        raise ValueError("need a ladder of at least two n values")
    ns = [e.config.n for e in ensembles]
    ds = [ecf_distance(e[field_name], target) for e in ensembles]
    M = min(e.replicas for e in ensembles)
    slack = slack_const / math.sqrt(M)
    steps = [b - a for a, b in zip(ds[:-1], ds[1:])]
    meta = {"ladder": ns, "distances": ds, "M": M, "target": target.as_dict(), "slack_per_step": slack,
            "seed": ensembles[0].seed, "regime": ensembles[0].config.regime.as_dict(),
            "epsilon": ensembles[0].config.epsilon}
    # the scale that best fits the top rung shows how far the finite-n law sits from the target
    top = ensembles[-1][field_name]
    ratios = np.linspace(0.5, 1.5, 101)
    fits = [ecf_distance(top, sc.StableParams(target.alpha, target.sigma * r, target.beta, 0.0)) for r in ratios]
    meta["best_fit_sigma_ratio_top"] = float(ratios[int(np.argmin(fits))])
    meta["best_fit_distance_top"] = float(min(fits))
    tag = label or ensembles[0].config.regime.kind
    return [
        TestResult(f"fclt_trend[{tag}]", max(steps), slack, meta),
        TestResult(f"fclt_cap[{tag}]", ds[-1], cap, meta),
    ]


def increment_tests(ensemble_or_pair, target: sc.StableParams | None, n: int, M: int, label: str,
                    breakpoints=(0.0, 0.5, 1.0), self_similarity_gates: bool = False,
                    const: float = ECF_NULL_CONST) -> list[TestResult]:
    """Spearman correlation of consecutive increments and self-similarity of
    each increment. Input: an Ensemble (uses W_half, W1) or a pair of arrays
    (W(1/2), W(1))."""
    bp = list(breakpoints)
    if any(b > a for a, b in zip(bp[1:], bp[:-1])):
        raise ValueError("breakpoints must be sorted")
    idx = [int(math.floor(n * t + 1e-12 * n)) for t in bp]
    if len(set(idx)) < 2:
        raise ValueError("breakpoints collapse to one grid cell")
    if bp not in ([0.0, 1.0], [0.0, 0.5, 1.0]):
        raise ValueError("ensembles carry W at 0, 1/2 and 1 only")
    if isinstance(ensemble_or_pair, pr.Ensemble):
        w_half, w1 = ensemble_or_pair["W_half"], ensemble_or_pair["W1"]
    else:
        w_half, w1 = ensemble_or_pair
    incs = [w1] if len(bp) == 2 else [w_half, w1 - w_half]
    meta = {"n": n, "M": M, "breakpoints": bp}
    out = []
    if len(incs) < 2:
        out.append(TestResult(f"increment_spearman[{label}]", math.nan, 3 / math.sqrt(M), meta, applicable=False))
    else:
        rho = stats.spearmanr(incs[0], incs[1]).statistic
        out.append(TestResult(f"increment_spearman[{label}]", abs(float(rho)), 3 / math.sqrt(M), {**meta, "rho": rho}))
    if target is not None:
        worst = 0.0
        for i, inc in enumerate(incs):
            dt = (idx[i + 1] - idx[i]) / n
            law = sc.StableParams(target.alpha, target.sigma * dt ** (1 / target.alpha), target.beta, 0.0)
            worst = max(worst, ecf_distance(inc, law))
        out.append(TestResult(f"increment_self_similarity[{label}]", worst, null_threshold(M, const),
                              {**meta, "target": target.as_dict()}, diagnostic=not self_similarity_gates))
    return out


def _median_se(x):
    x = np.sort(np.asarray(x))
    m = x.size
    h = 0.5 * math.sqrt(m)
    lo = x[max(0, int(math.floor(m / 2 - h)))]
    hi = x[min(m - 1, int(math.ceil(m / 2 + h)))]
    return float(np.median(x)), float((hi - lo) / 2)


def band_vanishing_test(ensembles, z: float = 2.0) -> list[TestResult]:
    """Median sup-norm of the small band and frequency of a nonzero large
    band, each non-increasing along the ladder within z standard errors."""
    if len(ensembles) < 3:
        raise ValueError("need a ladder of at least three n values")
    rungs = []
    for e in ensembles:
        med, med_se = _median_se(e["sup_S"])
        p = float(np.mean(e["L_nonzero"]))
        rungs.append({
            "n": e.config.n, "M": e.replicas,
            "median_sup_S": med, "median_sup_S_se": med_se,
            "median_sup_VS": float(np.median(e["sup_VS"])), "median_sup_LS": float(np.median(e["sup_LS"])),
            "freq_L_nonzero": p, "freq_L_nonzero_se": math.sqrt(max(p * (1 - p), 1e-300) / e.replicas),
            "bands": cc.band_ranges(e.config.n, e.config.regime.alpha, e.config.epsilon).as_dict(),
            "union_bound_L": e.config.n * sum(ta.nonzero_prob(k, e.config.regime.alpha)
                                              for k in cc.band_ranges(e.config.n, e.config.regime.alpha,
                                                                      e.config.epsilon).L),
        })

    def worst(key):
        zs = []
        for a, b in zip(rungs[:-1], rungs[1:]):
            se = math.hypot(a[key + "_se"], b[key + "_se"])
            zs.append((b[key] - a[key]) / se if se > 0 else (math.inf if b[key] > a[key] else 0.0))
        return max(zs)

    meta = {"rungs": rungs, "regime": ensembles[0].config.regime.as_dict(), "seed": ensembles[0].seed}
    return [
        TestResult("band_vanishing_S_median", worst("median_sup_S"), z, meta),
        TestResult("band_vanishing_L_frequency", worst("freq_L_nonzero"), z, meta),
    ]


# ---------------------------------------------------------------- appendix


def _families(alpha, r_grid):
    fams = [("tail", 0.0, "upper", -alpha)]
    skipped = []
    for r in r_grid:
        if r == 2.0:
            fams.append(("second_moment", 2.0, "lower", 2.0 - alpha))
            skipped.append({"family": "upper_window", "r": r, "reason": "E[Y^r; Y >= K] diverges for r >= alpha"})
        elif r > alpha:
            fams.append(("moment_above", r, "lower", r - alpha))
        elif r < alpha:
            fams.append(("moment_below", r, "upper", r - alpha))
        else:
            skipped.append({"family": "any", "r": r, "reason": "r == alpha is a boundary case"})
    return fams, skipped


def appendix_moment_suite(alpha: float, seed: int, r_grid=None, K_grid=None, size: int = 400_000,
                          slope_tol: float = 0.15, se_mult: float = 3.0) -> tuple[list[TestResult], list]:
    """Power-law scaling of truncated moments of Y ~ S_a(1, 1, 0) in the
    truncation level K, estimated by importance-weighted Monte Carlo.

    Families (window, exponent): P(Y > K) ~ K^-a; E[Y^r; 0 <= Y <= K] ~
    K^(r-a) for r > a and for r = 2; E[Y^r; Y >= K] ~ K^(r-a) for r < a.
    """
    if r_grid is None:
        r_grid = (round(alpha / 2, 3), round(alpha + 0.4, 3), 2.0)
    if K_grid is None:
        K_grid = tuple(2.0 ** np.arange(8, 17, 2))
    K = np.asarray(K_grid, dtype=float)
    if K.size < 5 or np.any(np.diff(np.log(K)) <= 0):
        raise ValueError("K grid must be increasing with at least 5 points")
    fams, skipped = _families(alpha, r_grid)
    results = []
    for fi, (name, r, side, slope_th) in enumerate(fams):
        est, se = [], []
        for i, k in enumerate(K):
            win = sc.TruncationWindow(0.0, k) if side == "lower" else sc.TruncationWindow(k, math.inf)
            m = sc.truncated_moment(sc.StableParams(alpha, 1.0, 1.0, 0.0), r, win, "mc",
                                    cc.substream(seed, 1, 904, int(alpha * 1000), fi, i), size)
            est.append(m.value)
            se.append(m.stderr)
        est, se = np.array(est), np.array(se)
        x, y = np.log(K), np.log(est)
        wts = (est / se) ** 2
        slope = float(np.polyfit(x, y, 1, w=np.sqrt(wts))[0])
        const = float(np.exp(np.mean(y - slope_th * x)))
        tag = f"{name}[alpha={alpha},r={r}]"
        meta = {"alpha": alpha, "r": r, "window": side, "K_grid": K, "estimates": est, "stderr": se,
                "expected_slope": slope_th, "fitted_constant": const, "samples": size, "seed": seed}
        results.append(TestResult(f"appendix_slope_{tag}", abs(slope - slope_th), slope_tol, {**meta, "slope": slope}))
        # sigma doubling at the largest K
        k = float(K[-1])
        win = sc.TruncationWindow(0.0, k) if side == "lower" else sc.TruncationWindow(k, math.inf)
        m2 = sc.truncated_moment(sc.StableParams(alpha, 2.0, 1.0, 0.0), r, win, "mc",
                                 cc.substream(seed, 1, 905, int(alpha * 1000), fi), size)
        ratio_target = 2.0**alpha
        zstat = abs(m2.value - ratio_target * est[-1]) / math.hypot(m2.stderr, ratio_target * se[-1])
        results.append(TestResult(f"appendix_sigma_doubling_{tag}", zstat, se_mult,
                                  {"alpha": alpha, "r": r, "K": k, "sigma1": est[-1], "sigma2": m2.value,
                                   "ratio": m2.value / est[-1], "expected_ratio": ratio_target, "seed": seed}))
    return results, skipped


# ---------------------------------------------------------------- two routes


def _dense_row_sum(k, alpha, n, M_r, rng, chunk=2_000_000):
    """sum_{j<n} Z_k(j) from raw X_k draws, truncated and floored."""
    out = np.zeros(M_r)
    p = ta.row_params(k, alpha)
    per = max(1, chunk // n)
    for lo in range(0, M_r, per):
        hi = min(M_r, lo + per)
        x = sc.sample(p, rng, (hi - lo, n))
        y = ta.truncate(x, k)
        out[lo:hi] = ta.grid_value(ta.discretize(y, k), k).sum(axis=1)
    return out


def equal_distribution_test(kind: str, n: int, alpha: float, M_r: int, seed: int,
                            const: float = ECF_NULL_CONST) -> TestResult:
    """Middle-band window sum via the cocycle realization vs via direct
    triangular-array sampling; two-sample ECF distance."""
    regime = cc.Regime(kind, alpha, 1.0)
    bands = cc.band_ranges(n, alpha)
    rows = list(bands.M)
    scale = n ** (-1 / alpha)
    meta = {"kind": kind, "n": n, "alpha": alpha, "M": M_r, "seed": seed, "rows": rows}
    thr = 2 * null_threshold(M_r, const)
    if not rows:
        return TestResult(f"equal_distribution[{kind},alpha={alpha}]", 0.0, thr, meta)
    route1 = np.empty(M_r)
    for r in range(M_r):
        s = cc.realize(regime, n, seed, r, rows=rows)
        if kind == "super1":
            route1[r] = sum(rc.f_total for rc in s.rows.values())
        else:
            route1[r] = sum(rc.total(n) for rc in s.rows.values())
    route2 = np.zeros(M_r)
    for k in rows:
        route2 += _dense_row_sum(k, alpha, n, M_r, cc.substream(seed, 1, 906, int(alpha * 1000), n, k, 0))
        if kind == "sym":
            route2 -= _dense_row_sum(k, alpha, n, M_r, cc.substream(seed, 1, 906, int(alpha * 1000), n, k, 1))
    shift = 0.0
    if kind == "super1":
        shift = cc.centering_Bn(n, alpha).value
        meta["B_n"] = shift
    d = ecf_two_sample((route1 + shift) * scale, (route2 + shift) * scale)
    return TestResult(f"equal_distribution[{kind},alpha={alpha}]", d, thr, meta)


# ---------------------------------------------------------------- centering


def bn_oracle_test(n: int, alpha: float, seed: int, size: int = 1_000_000, se_mult: float = 3.0) -> list[TestResult]:
    bn = cc.centering_Bn(n, alpha)
    out = []
    for k, q in zip(bn.rows, bn.terms):
        m = sc.truncated_moment(ta.row_params(k, alpha), 1, sc.TruncationWindow(-math.inf, 2.0**k), "mc",
                                cc.substream(seed, 1, 907, k), size)
        out.append(TestResult(f"Bn_term[n={n},alpha={alpha},k={k}]", abs(q - m.value) / m.stderr, se_mult,
                              {"quadrature": q, "monte_carlo": m.value, "stderr": m.stderr, "samples": size}))
    return out


def bn_asymptotic_diagnostic(alpha: float, exponents=range(8, 21, 2)) -> TestResult:
    ratios = []
    for e in exponents:
        n = 2**e
        b = cc.centering_Bn(n, alpha).value
        ratios.append({"n": n, "B_n": b, "B_n_over_n_log_power": b / (n * math.log2(n) ** (1 - 1 / alpha)),
                       "B_n_over_n_pow_inv_alpha": b / n ** (1 / alpha)})
    r = [x["B_n_over_n_log_power"] for x in ratios]
    spread = (max(r) - min(r)) / max(abs(np.mean(r)), 1e-300)
    return TestResult(f"Bn_asymptotic[alpha={alpha}]", spread, math.inf, {"ratios": ratios}, diagnostic=True)


# ---------------------------------------------------------------- suite


@dataclass
class SuiteConfig:
    seed: int = 20240601
    epsilon: float = 1e-3
    threads: int = 1
    ladder: tuple = (2**8, 2**12, 2**16)
    ensemble_M: int = 4000
    exact_M: int = 10_000
    exact_ns: tuple = (2**12, 2**20)
    exact_alphas: tuple = (0.5, 1.4)
    equal_M: int = 10_000
    equal_n: int = 2**10
    sub1_alpha: float = 0.7
    super_alpha: float = 1.4
    beta: float = 1.0
    fclt_cap: float = 0.05
    appendix_alphas: tuple = (0.7, 1.4)
    appendix_size: int = 400_000
    bn_n: int = 2**12
    bn_size: int = 1_000_000
    ecf_const: float = ECF_NULL_CONST
    sym_alpha: float = 1.4
    regimes: tuple = ("sub1", "sym", "super1")
    equal_cases: tuple = (("sub1", 0.7), ("super1", 1.4))
    centering: bool = True

    def as_dict(self):
        # thread count is left out: results must not depend on it
        return _clean({k: v for k, v in self.__dict__.items() if k != "threads"})


SUITES = ("all", "stable", "exact", "cocycle", "fclt", "appendix", "centering")


def _section(suite, name):
    return suite == "all" or suite == name


def regime_for(kind: str, cfg: SuiteConfig) -> cc.Regime:
    if kind == "sub1":
        return cc.Regime("sub1", cfg.sub1_alpha, cfg.beta)
    if kind == "sym":
        return cc.Regime("sym", cfg.sym_alpha)
    return cc.Regime("super1", cfg.super_alpha, cfg.beta)


def run_suite(cfg: SuiteConfig, suite: str = "all", timings: dict | None = None,
              ensembles: dict | None = None) -> dict:
    """Run checks and return the report dict. Wall-clock timings go into the
    optional `timings` dict (never into the report, which must be byte-stable).
    Built ensembles are stored in the optional `ensembles` dict."""
    import time

    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}; choose from {SUITES}")
    timings = {} if timings is None else timings
    ensembles = {} if ensembles is None else ensembles
    results: list[TestResult] = []
    extra = {}

    def timed(key, fn):
        t = time.perf_counter()
        out = fn()
        timings[key] = time.perf_counter() - t
        return out

    if _section(suite, "stable"):
        results += timed("ks", lambda: ks_check(cfg.seed))
        results.append(timed("roundtrip", roundtrip_check))
    if _section(suite, "exact"):
        def exact():
            out = []
            for a in cfg.exact_alphas:
                for n in cfg.exact_ns:
                    out.append(exact_stability_check(n, a, cfg.exact_M, cfg.seed, cfg.ecf_const))
            if cfg.exact_alphas:
                a = cfg.exact_alphas[-1]
                w, wh, sig, _ = x_level_aggregate(cfg.exact_ns[0], a, cfg.exact_M, cfg.seed, split=True)
                tgt = sc.StableParams(a, sig, 1.0, 0.0)
                out += increment_tests((wh, w), tgt, cfg.exact_ns[0], cfg.exact_M, "x_level",
                                       self_similarity_gates=True, const=cfg.ecf_const)
            return out
        results += timed("exact", exact)
        results.append(timed("grid_floor", lambda: grid_floor_check(cfg.sub1_alpha, cfg.seed)))
        results.append(timed("closed_form", lambda: closed_form_check(cfg.seed)))
    if _section(suite, "cocycle"):
        for kind, a in cfg.equal_cases:
            results.append(timed(f"equal_{kind}", lambda kind=kind, a=a: equal_distribution_test(
                kind, cfg.equal_n, a, cfg.equal_M, cfg.seed, cfg.ecf_const)))
    if _section(suite, "fclt"):
        for kind in cfg.regimes:
            regime = regime_for(kind, cfg)

            def build(regime=regime):
                return [pr.ensemble_run(pr.EnsembleConfig(regime, n, cfg.epsilon), cfg.ensemble_M, cfg.seed,
                                        cfg.threads) for n in cfg.ladder]
            ens = timed(f"ensembles_{kind}", build)
            ensembles[kind] = ens
            tgt = limit_target(regime)
            results += fclt_marginal_test(ens, tgt, cfg.fclt_cap, label=kind)
            if kind == "sub1":
                results += band_vanishing_test(ens)
            top = ens[-1]
            results += increment_tests(top, tgt, top.config.n, top.replicas, kind, const=cfg.ecf_const)
            if kind == "super1":
                d = [ecf_distance(e["W1_centered"], tgt) for e in ens]
                results.append(TestResult("fclt_Bn_centered[super1]", d[-1], cfg.fclt_cap,
                                          {"ladder": list(cfg.ladder), "distances": d,
                                           "B_n": [e.meta["B_n"] for e in ens]}, diagnostic=True))
            extra[f"ensemble_{kind}"] = [{"n": e.config.n, "bands": e.meta["bands"]} for e in ens]
    if _section(suite, "appendix"):
        def app():
            out, skipped = [], []
            for a in cfg.appendix_alphas:
                r, s = appendix_moment_suite(a, cfg.seed, size=cfg.appendix_size)
                out += r
                skipped += [{"alpha": a, **x} for x in s]
            return out, skipped
        r, skipped = timed("appendix", app)
        results += r
        extra["appendix_skipped"] = skipped
    if _section(suite, "centering") and cfg.centering:
        results += timed("bn_oracle", lambda: bn_oracle_test(cfg.bn_n, cfg.super_alpha, cfg.seed, cfg.bn_size))
        results.append(timed("bn_diag", lambda: bn_asymptotic_diagnostic(cfg.super_alpha)))
    return build_report(cfg.as_dict(), results, suite, extra)


def build_report(config: dict, results: list[TestResult], suite: str, extra: dict | None = None) -> dict:
    gating = [r for r in results if not r.diagnostic and r.applicable]
    return _clean({
        "schema_version": SCHEMA_VERSION,
        "artifact_version": __version__,
        "suite": suite,
        "config": config,
        "seed": config.get("seed"),
        "results": [r.as_dict() for r in results],
        "extra": extra or {},
        "summary": {
            "total": len(results),
            "gating": len(gating),
            "passed": sum(r.passed for r in gating),
            "failed": [r.name for r in gating if not r.passed],
            "diagnostics": [r.name for r in results if r.diagnostic],
            "all_pass": all(r.passed for r in gating),
        },
    })


def report_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"
