"""Partial-sum paths W(t) = n^(-1/a) S_[nt] and replica ensembles."""
from __future__ import annotations

import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import cocycle as cc

__all__ = [
    "PathGrid",
    "partial_sum_path",
    "sup_norm",
    "increments",
    "EnsembleConfig",
    "Ensemble",
    "ResourceLimitError",
    "FIELDS",
    "replica_functionals",
    "ensemble_run",
]

CENTERING_MODES = ("none", "path", "scalar")


class ResourceLimitError(RuntimeError):
    """A requested run would exceed a configured memory cap."""


@dataclass(frozen=True)
class PathGrid:
    n: int
    alpha: float
    values: np.ndarray
    offset: np.ndarray | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.n + 1,):
            raise ValueError(f"values must have length n+1 = {self.n + 1}, got {v.shape}")
        if v[0] != 0:
            raise ValueError("values[0] must be 0")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        if self.offset is not None:
            o = np.asarray(self.offset, dtype=float)
            o.setflags(write=False)
            object.__setattr__(self, "offset", o)

    @property
    def scale(self) -> float:
        return self.n ** (-1.0 / self.alpha)

    def centered(self) -> np.ndarray:
        return self.values if self.offset is None else self.values + self.offset

    def index(self, t):
        t = np.asarray(t, dtype=float)
        if np.any((t < 0) | (t > 1)):
            raise ValueError("t must lie in [0, 1]")
        return np.floor(self.n * t + 1e-12 * self.n).astype(np.int64).clip(0, self.n)

    def __call__(self, t):
        out = self.scale * self.centered()[self.index(t)]
        return out[()] if np.ndim(out) == 0 else out


def partial_sum_path(sample, n: int | None = None, alpha: float | None = None,
                     centering: float = 0.0, mode: str = "none") -> PathGrid:
    """Path of a CocycleSample (or of a plain array of observable values).

    mode "path" adds (j/n) * centering at index j, "scalar" adds it at j = n
    only, "none" ignores it.
    """
    if mode not in CENTERING_MODES:
        raise ValueError(f"mode must be one of {CENTERING_MODES}")
    if isinstance(sample, cc.CocycleSample):
        n = sample.n if n is None else n
        if n > sample.n:
            raise IndexError(f"sample covers {sample.n} < {n} indices")
        alpha = sample.regime.alpha if alpha is None else alpha
        values = cc.band_sums(sample)["total"][: n + 1]
    else:
        h = np.asarray(sample, dtype=float)
        n = h.size if n is None else n
        if h.size < n:
            raise IndexError(f"observable covers {h.size} < {n} indices")
        values = np.concatenate([[0.0], np.cumsum(h[:n])])
    if alpha is None:
        raise ValueError("alpha is required")
    offset = None
    if mode == "path":
        offset = np.arange(n + 1) / n * centering
    elif mode == "scalar":
        offset = np.zeros(n + 1)
        offset[n] = centering
    return PathGrid(n, alpha, values, offset)


def sup_norm(path: PathGrid) -> float:
    return float(path.scale * np.max(np.abs(path.centered())))


def increments(path: PathGrid, breakpoints) -> list[float]:
    t = np.asarray(breakpoints, dtype=float)
    if t.size < 2:
        raise ValueError("need at least two breakpoints")
    if np.any(np.diff(t) < 0):
        raise ValueError("breakpoints must be sorted")
    w = path(t)
    return [float(x) for x in np.diff(w)]


# ---------------------------------------------------------------- ensembles

FIELDS = (
    "W1",
    "W_half",
    "W1_centered",
    "sup_total",
    "sup_S",
    "sup_M",
    "sup_L",
    "sup_VS",
    "sup_LS",
    "L_nonzero",
    "M_sum",
    "fM_sum",
)

# ten million doubles
PATH_MEMORY_CAP = 10_000_000


@dataclass(frozen=True)
class EnsembleConfig:
    regime: cc.Regime
    n: int
    epsilon: float = 1e-3

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be >= 2")
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")

    def as_dict(self):
        return {"regime": self.regime.as_dict(), "n": self.n, "epsilon": self.epsilon}


def _centering(cfg: EnsembleConfig) -> float:
    r = cfg.regime
    if r.kind != "super1" or cfg.n < 2:
        return 0.0
    wp, wm = r.weights
    return (wp - wm) * cc.centering_Bn(cfg.n, r.alpha).value


def replica_functionals(cfg: EnsembleConfig, seed: int, replica: int, keep_path: bool = False):
    n = cfg.n
    s = cc.realize(cfg.regime, n, seed, replica, cfg.epsilon)
    sums = cc.band_sums(s)
    scale = n ** (-1.0 / cfg.regime.alpha)
    tot = sums["total"]
    m_rows = set(s.bands.M)
    row = {
        "W1": tot[n] * scale,
        "W_half": tot[n // 2] * scale,
        "W1_centered": (tot[n] + _centering(cfg)) * scale,
        "sup_total": np.max(np.abs(tot)) * scale,
        "L_nonzero": float(np.any(sums["L"] != 0)),
        "M_sum": sums["M"][n],
        "fM_sum": sum(rc.f_total for k, rc in s.rows.items() if k in m_rows),
    }
    for b in ("S", "M", "L", "VS", "LS"):
        row["sup_" + b] = np.max(np.abs(sums[b])) * scale
    out = np.array([float(row[f]) for f in FIELDS])
    return out, (tot.copy() if keep_path else None)


@dataclass
class Ensemble:
    config: EnsembleConfig
    replicas: int
    seed: int
    data: np.ndarray
    paths: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __getitem__(self, name) -> np.ndarray:
        return self.data[:, FIELDS.index(name)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("replica," + ",".join(FIELDS) + "\n")
        for i, row in enumerate(self.data):
            buf.write(str(i) + "," + ",".join(repr(float(x)) for x in row) + "\n")
        return buf.getvalue()

    def paths_csv(self) -> str:
        if self.paths is None:
            raise ValueError("ensemble was run without keep_paths")
        buf = io.StringIO()
        buf.write("replica,j,S_j\n")
        for i, p in enumerate(self.paths):
            for j, v in enumerate(p):
                buf.write(f"{i},{j},{float(v)!r}\n")
        return buf.getvalue()


def ensemble_run(config: EnsembleConfig, M: int, seed: int, threads: int = 1,
                 keep_paths: bool = False, chunk: int = 64) -> Ensemble:
    """M independent replicas. Replica r uses substreams keyed on (seed, r, k,
    tag, n), and results are placed by replica index, so output does not depend
    on `threads` or on scheduling."""
    if M < 1:
        raise ValueError("M must be >= 1")
    if threads < 1:
        raise ValueError("threads must be >= 1")
    if keep_paths and M * (config.n + 1) > PATH_MEMORY_CAP:
        raise ResourceLimitError(
            f"storing {M} paths of length {config.n + 1} exceeds the cap of {PATH_MEMORY_CAP} values; "
            "drop --paths-out or lower --replicas"
        )
    if config.regime.kind == "super1":
        cc.centering_Bn(config.n, config.regime.alpha)
    cc.band_ranges(config.n, config.regime.alpha, config.epsilon)

    def work(lo):
        hi = min(M, lo + chunk)
        return [replica_functionals(config, seed, r, keep_paths) for r in range(lo, hi)]

    starts = range(0, M, chunk)
    if threads == 1:
        parts = [work(lo) for lo in starts]
    else:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(work, starts))
    rows = [r for part in parts for r in part]
    data = np.vstack([r[0] for r in rows])
    paths = np.vstack([r[1] for r in rows]) if keep_paths else None
    bands = cc.band_ranges(config.n, config.regime.alpha, config.epsilon)
    meta = {"bands": bands.as_dict()}
    if config.regime.kind == "super1":
        meta["B_n"] = cc.centering_Bn(config.n, config.regime.alpha).value
    return Ensemble(config, M, seed, data, paths, meta)

