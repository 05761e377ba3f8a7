"""Observables over the shift realization of the row streams.

Three regimes:

* ``sub1``  (0 < a < 1):  h = w+ f - w- g,
* ``sym``   (1 <= a < 2): h = f - g,
* ``super1`` (1 < a < 2): H = w+ h - w- h_hat with h = sum_k (f_k - phi_k) and
  phi_k the average of f_k over a window of D_k = round(4^(a k)) steps.

Here f = sum_k f_k with f_k an i.i.d. Z_k stream, g_k = f_k shifted by
d_k = 4^(k^2) and (w+, w-) = (((1+b)/2)^(1/a), ((1-b)/2)^(1/a)).

The probability space is the product of independent row streams, and row k
only ever needs a finite window. When d_k > n the shifted window
[d_k, d_k + n) is disjoint from [0, n), so g_k is drawn as an independent
fresh stream. When D_k > n the block [n, D_k) of the averaging window enters
only through its total, which is drawn in aggregate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import stable_core as sc
from . import triangular_array as ta

__all__ = [
    "Regime",
    "RegimeError",
    "phi_weights",
    "BandRange",
    "band_ranges",
    "shift_distance",
    "window_length",
    "RowContribution",
    "CocycleSample",
    "StreamBundle",
    "substream",
    "realize",
    "shift_apply",
    "birkhoff_block_sum",
    "birkhoff_sum_aggregated",
    "BnResult",
    "centering_Bn",
    "band_increments",
    "band_sums",
    "LN2",
]

LN2 = math.log(2.0)

# stream tags inside a (seed, replica, k) key
TAG_F, TAG_G, TAG_H, TAG_HHAT = 0, 1, 2, 3


class RegimeError(ValueError):
    """Regime and index are incompatible."""


def phi_weights(beta: float, alpha: float) -> tuple[float, float]:
    """(((1+b)/2)^(1/a), ((1-b)/2)^(1/a))."""
    if not -1.0 <= beta <= 1.0:
        raise ValueError(f"beta must lie in [-1, 1], got {beta}")
    return ((1 + beta) / 2) ** (1 / alpha), ((1 - beta) / 2) ** (1 / alpha)


@dataclass(frozen=True)
class Regime:
    kind: str
    alpha: float
    beta: float = 1.0

    def __post_init__(self):
        a = float(self.alpha)
        if self.kind == "sub1":
            ok = 0.0 < a < 1.0
            need = "alpha in (0, 1)"
        elif self.kind == "sym":
            ok = 1.0 <= a < 2.0
            need = "alpha in [1, 2)"
            object.__setattr__(self, "beta", 0.0)
        elif self.kind == "super1":
            ok = 1.0 < a < 2.0
            need = "alpha in (1, 2); the averaging coboundary is not defined at alpha = 1"
        else:
            raise RegimeError(f"unknown regime {self.kind!r}; choose sub1, sym or super1")
        if not ok:
            raise RegimeError(f"regime {self.kind} needs {need}, got alpha={a}")
        if not -1.0 <= self.beta <= 1.0:
            raise RegimeError(f"beta must lie in [-1, 1], got {self.beta}")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", float(self.beta))

    @property
    def weights(self) -> tuple[float, float]:
        if self.kind == "sym":
            return 1.0, 1.0
        return phi_weights(self.beta, self.alpha)

    def target(self) -> sc.StableParams:
        """Predicted law of W(1) as n grows."""
        if self.kind == "sym":
            return sc.StableParams(self.alpha, (2 * LN2) ** (1 / self.alpha), 0.0, 0.0)
        return sc.StableParams(self.alpha, LN2 ** (1 / self.alpha), self.beta, 0.0)

    def as_dict(self):
        return {"kind": self.kind, "alpha": self.alpha, "beta": self.beta}


# ---------------------------------------------------------------- bands


def shift_distance(k: int) -> int:
    """d_k = 4^(k^2), as an exact integer."""
    return 4 ** (k * k)


def window_length(k: int, alpha: float) -> int:
    """D_k = 4^(a k) rounded to the nearest integer (at least 1)."""
    return max(1, int(round(4.0 ** (alpha * k))))


def _floor(x):
    # cutoffs like 12 / (2 * 0.6) land a rounding error below an integer
    return int(math.floor(x + 1e-9))


@dataclass(frozen=True)
class BandRange:
    n: int
    alpha: float
    epsilon: float
    s_hi: int
    m_hi: int
    k_max: int
    vs_hi: int
    tail_mass: float

    @property
    def S(self):
        return range(1, self.s_hi + 1)

    @property
    def M(self):
        return range(self.s_hi + 1, self.m_hi + 1)

    @property
    def L(self):
        return range(self.m_hi + 1, self.k_max + 1)

    @property
    def VS(self):
        return range(1, min(self.vs_hi, self.s_hi) + 1)

    @property
    def LS(self):
        return range(min(self.vs_hi, self.s_hi) + 1, self.s_hi + 1)

    def band(self, k: int) -> str:
        if 1 <= k <= self.s_hi:
            return "S"
        if k <= self.m_hi:
            return "M"
        if k <= self.k_max:
            return "L"
        raise ValueError(f"row {k} is beyond the truncation row {self.k_max}")

    def as_dict(self):
        return {
            "n": self.n,
            "S": [1, self.s_hi],
            "M": [self.s_hi + 1, self.m_hi],
            "L": [self.m_hi + 1, self.k_max],
            "VS": [1, min(self.vs_hi, self.s_hi)],
            "k_max": self.k_max,
            "epsilon": self.epsilon,
            "omitted_row_mass": self.tail_mass,
        }


@lru_cache(maxsize=256)
def band_ranges(n: int, alpha: float, epsilon: float = 1e-3) -> BandRange:
    """Band edges for window length n; K_max is the least row with
    n * sum_{k > K_max} p_k < epsilon (and at least the top of M)."""
    if n < 2:
        raise ValueError("band ranges need n >= 2")
    lg = math.log2(n)
    s_hi = _floor(lg / (2 * alpha))
    m_hi = _floor(lg / alpha)
    vs_hi = 0
    while shift_distance(vs_hi + 1) <= n:
        vs_hi += 1
    # p_k decays like 2^(-a k)/k; sum far enough that the remainder is negligible
    probs = {}
    k = 1
    while True:
        probs[k] = ta.nonzero_prob(k, alpha)
        if k > m_hi + 5 and n * probs[k] / (1 - 2.0**-alpha) < epsilon * 1e-6:
            break
        if k >= 400:
            break
        k += 1
    last = k
    remainder = n * probs[last] * 2.0**-alpha / (1 - 2.0**-alpha)
    tail = remainder
    k_max = last
    for kk in range(last, 0, -1):
        if tail + n * probs[kk] >= epsilon or kk <= m_hi:
            k_max = kk
            break
        tail += n * probs[kk]
    return BandRange(n, alpha, epsilon, s_hi, m_hi, max(k_max, m_hi), vs_hi, tail)


# ---------------------------------------------------------------- samples


def substream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for a (seed, replica, row, tag) key."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=tuple(int(x) for x in key))))


@dataclass
class RowContribution:
    """Row k's share of the observable on [0, n).

    value(i) = sum of point entries at i + sum of step deltas at indices <= i.
    ``f_total`` is S_n(f_k) of the primary copy.
    """

    k: int
    point_pos: np.ndarray
    point_val: np.ndarray
    step_pos: np.ndarray
    step_val: np.ndarray
    f_total: float = 0.0

    def dense(self, n: int) -> np.ndarray:
        h = np.zeros(n)
        np.add.at(h, self.point_pos, self.point_val)
        if self.step_pos.size:
            d = np.zeros(n + 1)
            np.add.at(d, self.step_pos, self.step_val)
            h += np.cumsum(d)[:n]
        return h

    def total(self, n: int) -> float:
        """S_n of the row without densifying."""
        return float(np.sum(self.point_val) + np.sum(self.step_val * (n - self.step_pos)))


@dataclass
class CocycleSample:
    regime: Regime
    n: int
    bands: BandRange
    rows: dict
    streams: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def dump_rows(self):
        """(row, position, value) triples of the observable's point entries."""
        out = []
        for k in sorted(self.rows):
            rc = self.rows[k]
            for p, v in zip(rc.point_pos.tolist(), rc.point_val.tolist()):
                out.append((k, int(p), float(v)))
        return out


def _empty():
    return np.zeros(0, dtype=np.int64), np.zeros(0)


def _row_sub_sym(regime, k, n, seed, replica, keep):
    a = regime.alpha
    wp, wm = regime.weights
    d = shift_distance(k)
    pos, val = [], []
    streams = {}
    f_total = 0.0
    if d <= n:
        full = ta.sample_stream(k, a, n + d, substream(seed, 0, replica, k, TAG_F, n))
        f = full.window(0, n)
        g = full.window(d, n + d)
        if keep:
            streams[("f", k)] = full
    else:
        f = ta.sample_stream(k, a, n, substream(seed, 0, replica, k, TAG_F, n))
        g = ta.sample_stream(k, a, n, substream(seed, 0, replica, k, TAG_G, n)) if wm > 0 else None
        if keep:
            streams[("f", k)] = f
            if g is not None:
                streams[("g", k)] = g
    f_total = float(np.sum(f.values))
    if wp > 0:
        pos.append(f.positions)
        val.append(wp * f.values)
    if wm > 0:
        pos.append(g.positions)
        val.append(-wm * g.values)
    pp = np.concatenate(pos) if pos else _empty()[0]
    pv = np.concatenate(val) if val else _empty()[1]
    sp, sv = _empty()
    return RowContribution(k, pp, pv, sp, sv, f_total), streams


def _coboundary_copy(k, a, n, rng, keep, tag):
    """Points and steps of f_k - phi_k on [0, n) for one copy."""
    D = window_length(k, a)
    streams = {}
    if D <= n:
        f = ta.sample_stream(k, a, n + D - 1, rng)
        if keep:
            streams[(tag, k)] = f
        m, v = f.positions, f.values
        inside = m < n
        start = np.maximum(0, m - D + 1)
        stop = m + 1
        sp = np.concatenate([start, stop[stop < n]])
        sv = np.concatenate([-v / D, (v / D)[stop < n]])
        return m[inside], v[inside], sp, sv, float(np.sum(v[inside])), streams
    head = ta.sample_stream(k, a, n, rng)
    mid_count = int(rng.binomial(D - n, ta.nonzero_prob(k, a)))
    mid = ta.aggregate_sum(k, a, mid_count, rng)
    tail = ta.sample_stream(k, a, n - 1, rng)
    if keep:
        streams[(tag, k)] = head
        streams[(tag + "_tail", k)] = tail
        streams[(tag + "_mid", k)] = (mid_count, mid)
    hv, tv = head.values, tail.values
    head_sum = float(np.sum(hv))
    keep_h = head.positions + 1 < n
    keep_t = tail.positions + 1 < n
    sp = np.concatenate([[0], head.positions[keep_h] + 1, tail.positions[keep_t] + 1])
    sv = np.concatenate([[-(head_sum + mid) / D], hv[keep_h] / D, -tv[keep_t] / D])
    return head.positions, hv, sp.astype(np.int64), sv, head_sum, streams


def _row_super(regime, k, n, seed, replica, keep):
    a = regime.alpha
    wp, wm = regime.weights
    parts = []
    streams = {}
    f_total = 0.0
    for w, tag, name in ((wp, TAG_H, "f"), (-wm, TAG_HHAT, "fhat")):
        if w == 0:
            continue
        pp, pv, sp, sv, tot, st = _coboundary_copy(k, a, n, substream(seed, 0, replica, k, tag, n), keep, name)
        streams.update(st)
        if tag == TAG_H:
            f_total = tot
        parts.append((pp, w * pv, sp, w * sv))
    if not parts:
        e = _empty()
        return RowContribution(k, e[0], e[1], e[0], e[1], 0.0), streams
    return RowContribution(
        k,
        np.concatenate([p[0] for p in parts]).astype(np.int64),
        np.concatenate([p[1] for p in parts]),
        np.concatenate([p[2] for p in parts]).astype(np.int64),
        np.concatenate([p[3] for p in parts]),
        f_total,
    ), streams


def realize(regime: Regime, n: int, seed: int, replica: int = 0, epsilon: float = 1e-3,
            keep_streams: bool = False, rows=None) -> CocycleSample:
    """One replica of the observable on [0, n), rows 1..K_max.

    Row k of replica r draws from generators keyed (seed, r, k, tag, n), so the
    sample does not depend on which other replicas or rows are realized.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    bands = band_ranges(max(n, 2), regime.alpha, epsilon)
    ks = range(1, bands.k_max + 1) if rows is None else rows
    out, streams = {}, {}
    build = _row_super if regime.kind == "super1" else _row_sub_sym
    for k in ks:
        rc, st = build(regime, k, n, seed, replica, keep_streams)
        out[k] = rc
        streams.update(st)
    return CocycleSample(regime, n, bands, out, streams, {"seed": seed, "replica": replica})


# ---------------------------------------------------------------- shifting


@dataclass(frozen=True)
class StreamBundle:
    """Named sparse streams sharing a common index origin."""

    streams: dict

    def sums(self, start: int, stop: int) -> dict:
        return {name: float(np.sum(s.window(start, stop).values)) for name, s in self.streams.items()}


def shift_apply(bundle: StreamBundle, n: int) -> StreamBundle:
    """Koopman shift by n: every stream is re-indexed so position n becomes 0."""
    if n < 0:
        raise ValueError("shift must be nonnegative")
    out = {}
    for name, s in bundle.streams.items():
        if n > s.window_length:
            raise IndexError(f"shift {n} exceeds the realized window {s.window_length} of {name}")
        out[name] = s.window(n, s.window_length)
    return StreamBundle(out)


# ---------------------------------------------------------------- closed forms


def birkhoff_block_sum(f, n: int, D: int) -> float:
    """S_n(phi) for phi = (1/D) sum_{j<D} f o T^j, from f on [0, n + D - 1).

    Accepts a dense array or a SparseStream.
    """
    if n < 1 or D < 1:
        raise ValueError("n and D must be >= 1")
    need = n + D - 1
    if isinstance(f, ta.SparseStream):
        if f.window_length < need:
            raise IndexError(f"stream covers {f.window_length} < {need} positions")
        dense = np.zeros(need)
        sel = f.positions < need
        dense[f.positions[sel]] = f.values[sel]
        f = dense
    f = np.asarray(f, dtype=float)
    if f.size < need:
        raise IndexError(f"stream covers {f.size} < {need} positions")
    if n <= D:
        j = np.arange(n - 1)
        a = np.sum((j + 1) / D * f[: n - 1])
        b = n / D * np.sum(f[n - 1 : D])
        jj = np.arange(1, n)
        c = np.sum((n - jj) / D * f[D + jj - 1])
        return float(a + b + c)
    j = np.arange(D - 1)
    a = np.sum((j + 1) / D * f[: D - 1])
    b = np.sum(f[D - 1 : n])
    jj = np.arange(1, D)
    c = np.sum((D - jj) / D * f[n + jj - 1])
    return float(a + b + c)


def birkhoff_sum_aggregated(head: ta.SparseStream, mid_sum: float, tail: ta.SparseStream,
                            n: int, D: int) -> float:
    """S_n(phi) for D >= n from f on [0, n), the total of f over [n, D) and
    f on [D, D + n - 1)."""
    if D < n:
        raise ValueError("aggregated form needs D >= n")
    if head.window_length < n or tail.window_length < n - 1:
        raise IndexError("window underrun")
    hp, hv = head.positions, head.values
    a = np.sum(np.where(hp < n - 1, (hp + 1) / D * hv, 0.0))
    last = np.sum(hv[hp == n - 1])
    b = n / D * (last + mid_sum)
    tp, tv = tail.positions, tail.values
    c = np.sum(np.where(tp < n - 1, (n - 1 - tp) / D * tv, 0.0))
    return float(a + b + c)


# ---------------------------------------------------------------- centering


@dataclass(frozen=True)
class BnResult:
    n: int
    alpha: float
    rows: tuple
    terms: tuple
    value: float

    def as_dict(self):
        return {"n": self.n, "alpha": self.alpha, "rows": list(self.rows),
                "terms": list(self.terms), "B_n": self.value}


@lru_cache(maxsize=128)
def centering_Bn(n: int, alpha: float) -> BnResult:
    """B_n = n sum_{k in M} E[X_k 1{X_k <= 2^k}], terms by quadrature."""
    if not 1.0 < alpha < 2.0:
        raise RegimeError("B_n is defined for alpha in (1, 2)")
    if n < 2:
        raise ValueError("n must be >= 2")
    bands = band_ranges(n, alpha)
    ks = tuple(bands.M)
    terms = tuple(
        sc.truncated_moment(ta.row_params(k, alpha), 1, sc.TruncationWindow(-math.inf, 2.0**k)).value
        for k in ks
    )
    return BnResult(n, alpha, ks, terms, n * float(sum(terms)))


# ---------------------------------------------------------------- band sums


def band_increments(sample: CocycleSample, bands: BandRange | None = None) -> dict:
    """Per-index observable values h(0..n-1) restricted to each band
    (keys S, M, L, VS, LS)."""
    bands = bands or sample.bands
    n = sample.n
    vs = set(bands.VS)
    groups = {"VS": [], "LS": [], "M": [], "L": []}
    for k, rc in sample.rows.items():
        b = bands.band(k)
        groups[("VS" if k in vs else "LS") if b == "S" else b].append(rc)
    out = {}
    for name, rcs in groups.items():
        h = np.zeros(n)
        if rcs:
            pp = np.concatenate([rc.point_pos for rc in rcs])
            if pp.size:
                h += np.bincount(pp, np.concatenate([rc.point_val for rc in rcs]), minlength=n)[:n]
            sp = np.concatenate([rc.step_pos for rc in rcs])
            if sp.size:
                d = np.bincount(sp, np.concatenate([rc.step_val for rc in rcs]), minlength=n + 1)
                h += np.cumsum(d)[:n]
        out[name] = h
    out["S"] = out["VS"] + out["LS"]
    return out


def band_sums(sample: CocycleSample, bands: BandRange | None = None) -> dict:
    """Cumulative sums S_0..S_n restricted to each band.

    Keys: total, S, M, L, VS, LS. ``total`` is defined as S + M + L index
    by index, so the additivity holds bit for bit.
    """
    inc = band_increments(sample, bands)
    out = {name: np.concatenate([[0.0], np.cumsum(h)]) for name, h in inc.items()}
    out["total"] = out["S"] + out["M"] + out["L"]
    return out
