"""Row k of the target array: X_k ~ S_a(k^(-1/a), 1, 0) truncated to
[2^k, 4^k] (Y_k) and floored onto the 4^-k grid (Z_k).

Grid coordinates j (value j * 4^-k) are held as integral float64. Scaling by
4^k is a power of two, so floor(y * 4^k) and j * 4^-k are exact in binary
floating point, while int64 would overflow once 4^(2k) > 2^63 (k > 15).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.interpolate import PchipInterpolator

from . import stable_core as sc

__all__ = [
    "K_EXACT",
    "row_params",
    "truncate",
    "discretize",
    "grid_value",
    "nonzero_prob",
    "ConditionalLaw",
    "conditional_law",
    "conditional_sample",
    "SparseStream",
    "sample_stream",
    "aggregate_sum",
    "stream_rows",
]

K_EXACT = 20


def row_params(k: int, alpha: float) -> sc.StableParams:
    return sc.StableParams(alpha, k ** (-1.0 / alpha), 1.0, 0.0)


def _check_k(k):
    if int(k) != k or k < 1:
        raise ValueError(f"row index must be a positive integer, got {k}")
    return int(k)


def truncate(x, k: int):
    """x if 2^k <= x <= 4^k else 0 (closed window)."""
    k = _check_k(k)
    x = np.asarray(x, dtype=float)
    out = np.where((x >= 2.0**k) & (x <= 4.0**k), x, 0.0)
    return out[()] if out.ndim == 0 else out


def discretize(y, k: int):
    """Grid coordinate j = floor(y 4^k) of a truncated value (0 stays 0)."""
    k = _check_k(k)
    y = np.asarray(y, dtype=float)
    lo, hi = 2.0**k, 4.0**k
    bad = (y != 0) & ((y < lo) | (y > hi))
    if np.any(bad):
        raise ValueError(f"values outside {{0}} U [2^{k}, 4^{k}]: {y[bad][:3]}")
    j = np.floor(np.ldexp(y, 2 * k))
    return j[()] if j.ndim == 0 else j


def grid_value(j, k: int):
    """j * 4^-k, exact."""
    out = np.ldexp(np.asarray(j, dtype=float), -2 * k)
    return out[()] if out.ndim == 0 else out


@lru_cache(maxsize=4096)
def nonzero_prob(k: int, alpha: float, config: sc.NumericConfig = sc.DEFAULT_NUMERICS) -> float:
    """p_k = P(2^k <= X_k <= 4^k)."""
    k = _check_k(k)
    return sc._prob_between(row_params(k, alpha), 2.0**k, 4.0**k, config)


# ------------------------------------------------------------ conditional law


@dataclass(frozen=True)
class ConditionalLaw:
    """Law of Y_k given Y_k != 0, via its quantile function on [2^k, 4^k].

    method is "exact" (tabulated CF inversion, monotone cubic interpolation
    of x^-a against the conditional CDF) or "pareto" (Pareto(a) restricted to
    the window, used above K_EXACT).
    """

    k: int
    alpha: float
    method: str
    _u: np.ndarray = field(repr=False, default=None)
    _w: np.ndarray = field(repr=False, default=None)
    _interp: object = field(repr=False, init=False, compare=False, default=None)

    def __post_init__(self):
        if self.method == "exact":
            object.__setattr__(self, "_interp", PchipInterpolator(self._u, self._w))

    def quantile(self, u):
        a, lo, hi = self.alpha, 2.0**self.k, 4.0**self.k
        u = np.asarray(u, dtype=float)
        if self.method == "pareto":
            w = lo**-a - u * (lo**-a - hi**-a)
        else:
            w = self._interp(u)
        return np.clip(w ** (-1.0 / a), lo, hi)

    def cdf(self, x):
        """Conditional CDF; exact method uses the stable tail directly."""
        a, lo, hi = self.alpha, 2.0**self.k, 4.0**self.k
        x = np.clip(np.asarray(x, dtype=float), lo, hi)
        if self.method == "pareto":
            return (lo**-a - x**-a) / (lo**-a - hi**-a)
        p = row_params(self.k, a)
        s_lo, s_hi = float(sc.sf(p, lo)), float(sc.sf(p, hi))
        return (s_lo - sc.sf(p, x)) / (s_lo - s_hi)

    def bin_moments(self, u_lo, u_hi, order=24):
        """Mean and variance of Y given its conditional CDF value lies in
        [u_lo, u_hi] (Gauss-Legendre on the quantile function)."""
        t, wts = np.polynomial.legendre.leggauss(order)
        u = 0.5 * (u_hi - u_lo) * t + 0.5 * (u_hi + u_lo)
        x = self.quantile(u)
        m1 = 0.5 * np.sum(wts * x)
        m2 = 0.5 * np.sum(wts * x * x)
        return m1, max(m2 - m1 * m1, 0.0)


@lru_cache(maxsize=512)
def conditional_law(k: int, alpha: float, k_exact: int = K_EXACT, nodes: int = 129) -> ConditionalLaw:
    k = _check_k(k)
    if k > k_exact:
        return ConditionalLaw(k, alpha, "pareto")
    p = row_params(k, alpha)
    lo, hi = 2.0**k, 4.0**k
    # nodes uniform in w = x^-a, where the law is close to uniform
    w = np.linspace(lo**-alpha, hi**-alpha, nodes)
    x = w ** (-1.0 / alpha)
    x[0], x[-1] = lo, hi
    tail = np.asarray(sc.sf(p, x), dtype=float)
    u = (tail[0] - tail) / (tail[0] - tail[-1])
    u[0], u[-1] = 0.0, 1.0
    if np.any(np.diff(u) <= 0):
        raise sc.QuadratureError(f"conditional CDF table for k={k} is not strictly increasing")
    return ConditionalLaw(k, alpha, "exact", u, w)


def conditional_sample(k: int, alpha: float, rng: np.random.Generator, size=None, k_exact: int = K_EXACT):
    """Grid coordinates j of Z_k drawn given Z_k != 0."""
    law = conditional_law(_check_k(k), alpha, k_exact)
    y = law.quantile(rng.uniform(size=size))
    return discretize(y, k)


# ------------------------------------------------------------ sparse streams


@dataclass(frozen=True)
class SparseStream:
    """Nonzero entries of an i.i.d. Z_k stream on positions [0, window_length)."""

    k: int
    window_length: int
    positions: np.ndarray
    j: np.ndarray

    @property
    def values(self):
        return grid_value(self.j, self.k)

    def dense(self):
        out = np.zeros(self.window_length)
        out[self.positions] = self.values
        return out

    def window(self, start: int, stop: int) -> "SparseStream":
        """Entries in [start, stop), re-indexed to start at 0."""
        if start < 0 or stop > self.window_length or start > stop:
            raise IndexError(f"window [{start}, {stop}) outside [0, {self.window_length})")
        lo, hi = np.searchsorted(self.positions, [start, stop])
        return SparseStream(self.k, stop - start, self.positions[lo:hi] - start, self.j[lo:hi])


def sample_stream(k: int, alpha: float, window_length: int, rng: np.random.Generator,
                  k_exact: int = K_EXACT) -> SparseStream:
    """Binomial(window_length, p_k) entries at uniform distinct positions."""
    k = _check_k(k)
    window_length = int(window_length)
    if window_length < 0:
        raise ValueError("window_length must be nonnegative")
    count = int(rng.binomial(window_length, nonzero_prob(k, alpha))) if window_length else 0
    if count == 0:
        return SparseStream(k, window_length, np.zeros(0, dtype=np.int64), np.zeros(0))
    pos = np.sort(rng.choice(window_length, size=count, replace=False)).astype(np.int64)
    return SparseStream(k, window_length, pos, conditional_sample(k, alpha, rng, count, k_exact))


@lru_cache(maxsize=512)
def _bin_table(k, alpha, k_exact):
    law = conditional_law(k, alpha, k_exact)
    edges = law.cdf(2.0 ** (k + np.arange(k + 1)))
    edges[0], edges[-1] = 0.0, 1.0
    probs = np.diff(edges)
    mv = [law.bin_moments(edges[i], edges[i + 1]) for i in range(k)]
    means = np.array([m for m, _ in mv]) - 0.5 * 4.0**-k
    return edges, probs / probs.sum(), means, np.array([v for _, v in mv])


def aggregate_sum(k: int, alpha: float, count: int, rng: np.random.Generator,
                  exact_limit: int = 4096, k_exact: int = K_EXACT) -> float:
    """Sum of `count` i.i.d. nonzero Z_k values without materializing them.

    Small counts are drawn exactly. Larger counts are split over the
    geometric bins [2^(k+i), 2^(k+i+1)) by a multinomial draw; bins holding
    more than `exact_limit` values are replaced by a normal with the exact
    bin mean and variance (minus the mean flooring loss of half a grid step).
    """
    if count <= exact_limit:
        if count == 0:
            return 0.0
        return float(np.sum(grid_value(conditional_sample(k, alpha, rng, count, k_exact), k)))
    law = conditional_law(k, alpha, k_exact)
    edges, probs, means, variances = _bin_table(k, alpha, k_exact)
    counts = rng.multinomial(count, probs)
    total = 0.0
    for i, c in enumerate(counts):
        if c == 0:
            continue
        if c <= exact_limit:
            u = rng.uniform(edges[i], edges[i + 1], size=c)
            total += float(np.sum(grid_value(discretize(law.quantile(u), k), k)))
        else:
            total += c * means[i] + math.sqrt(c * variances[i]) * rng.standard_normal()
    return total


def stream_rows(streams) -> list[tuple[int, int, float]]:
    """(k, position, j) triples for CSV dumps; j printed as an exact integer."""
    rows = []
    for s in streams:
        for p, j in zip(s.positions.tolist(), s.j.tolist()):
            rows.append((s.k, int(p), int(j)))
    return rows
