"""Command-line entry point.

Exit codes: 0 all gating checks pass, 1 a gating check failed, 2 invalid
configuration, 3 runtime or numerical error.
"""
from __future__ import annotations

import argparse
import json
import sys

from . import __version__
from . import cocycle as cc
from . import process as pr
from . import stable_core as sc
from . import triangular_array as ta
from . import verify as vf

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3

CSV_HELP = """\
output files:
  Every CSV starts with one '# ' comment line holding a JSON object with the
  run config, seed and artifact version, followed by a header row.

  ensemble CSV (--out, simulate)
    replica       replica index
    W1            n^(-1/alpha) S_n, uncentered
    W_half        n^(-1/alpha) S_[n/2]
    W1_centered   n^(-1/alpha) (S_n + c B_n) for super1 (c = w+ - w-), else W1
    sup_total     sup norm of the whole path
    sup_S, sup_M, sup_L, sup_VS, sup_LS   sup norms of the band paths
    L_nonzero     1 if the large band path is not identically zero
    M_sum         S_n restricted to the middle band (unscaled)
    fM_sum        middle-band S_n of the primary f streams (unscaled)
  path CSV (--paths-out, simulate): replica, j, S_j  (j = 0..n, unscaled)
  stream CSV (--dump-streams): k, position, j  (value = j * 4^-k), replica 0
  sample CSV (--dump-samples): row, position, value  (point entries), replica 0

  JSON reports (verify, moments) carry schema_version, config, seed,
  artifact_version, a results array and a summary block.

config file:
  key = value lines ('#' starts a comment). Keys match the long flags with
  dashes or underscores (regime, alpha, beta, n, n_ladder, replicas, seed,
  epsilon, threads, out, paths_out, suite). Command-line flags win.
"""

KEYS = {
    "regime": str, "alpha": float, "beta": float, "n": int, "n_ladder": str, "replicas": int,
    "seed": int, "epsilon": float, "threads": int, "out": str, "paths_out": str, "suite": str,
    "r_grid": str, "k_grid": str,
}


class ConfigError(ValueError):
    pass


def read_config_file(path: str) -> dict:
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, val = (s.strip() for s in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in KEYS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            try:
                out[key] = KEYS[key](val)
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: bad value for {key}: {val!r}") from exc
    return out


def _parse_ints(text, name):
    try:
        vals = [int(float(x)) for x in str(text).replace(";", ",").split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"--{name} must be a comma separated list of integers") from exc
    return vals


def _parse_floats(text, name):
    try:
        return [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"--{name} must be a comma separated list of numbers") from exc


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="stablecocycle",
        description="Simulate stationary cocycles with stable limits and verify their limit laws.",
        epilog=CSV_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="key = value config file (flags override it)")
        sp.add_argument("--regime", choices=("sub1", "sym", "super1"))
        sp.add_argument("--alpha", type=float)
        sp.add_argument("--beta", type=float)
        sp.add_argument("--n", type=int)
        sp.add_argument("--n-ladder", dest="n_ladder", help="comma separated window lengths")
        sp.add_argument("--replicas", type=int)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--epsilon", type=float, help="truncation probability for the large rows")
        sp.add_argument("--threads", type=int)
        sp.add_argument("--out")

    for name, hlp in (("simulate", "run an ensemble and write functionals"),
                      ("verify", "run the verification suite"),
                      ("moments", "truncated-moment scaling suite")):
        sp = sub.add_parser(name, help=hlp, description=hlp, epilog=CSV_HELP,
                            formatter_class=argparse.RawDescriptionHelpFormatter)
        common(sp)
        if name == "simulate":
            sp.add_argument("--paths-out", dest="paths_out")
            sp.add_argument("--dump-streams", help="debug: CSV of (k, position, j) for replica 0")
            sp.add_argument("--dump-samples", help="debug: CSV of (row, position, value) for replica 0")
        if name == "verify":
            sp.add_argument("--suite", choices=vf.SUITES)
        if name == "moments":
            sp.add_argument("--r-grid", dest="r_grid")
            sp.add_argument("--k-grid", dest="k_grid")
    return p


def merge(args) -> dict:
    cfg = read_config_file(args.config) if getattr(args, "config", None) else {}
    for key in KEYS:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    return cfg


def _header(cfg: dict) -> str:
    return "# " + json.dumps({"config": cfg, "seed": cfg.get("seed"), "artifact_version": __version__},
                             sort_keys=True) + "\n"


def _write(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    with open(path, "w") as fh:
        fh.write(text)


def _regime(cfg, default_regime=None) -> cc.Regime:
    kind = cfg.get("regime", default_regime)
    if kind is None:
        raise ConfigError("--regime is required")
    if "alpha" not in cfg:
        raise ConfigError("--alpha is required")
    beta = cfg.get("beta", 1.0)
    if kind == "sym" and "beta" in cfg and cfg["beta"] != 0:
        raise ConfigError("the sym regime is symmetric; drop --beta or set it to 0")
    return cc.Regime(kind, cfg["alpha"], beta)


def cmd_simulate(cfg: dict, args) -> int:
    regime = _regime(cfg)
    n = cfg.get("n")
    if n is None:
        raise ConfigError("--n is required")
    M = cfg.get("replicas", 1000)
    seed = cfg.get("seed", 0)
    eps = cfg.get("epsilon", 1e-3)
    threads = cfg.get("threads", 1)
    if M < 1 or threads < 1:
        raise ConfigError("--replicas and --threads must be positive")
    econf = pr.EnsembleConfig(regime, n, eps)
    full = {**cfg, "regime": regime.kind, "alpha": regime.alpha, "beta": regime.beta, "replicas": M,
            "seed": seed, "epsilon": eps}
    full.pop("threads", None)
    ens = pr.ensemble_run(econf, M, seed, threads, keep_paths=bool(cfg.get("paths_out")))
    head = _header(full)
    _write(cfg.get("out") or "-", head + ens.to_csv())
    if cfg.get("paths_out"):
        _write(cfg["paths_out"], head + ens.paths_csv())
    dump_s = getattr(args, "dump_streams", None)
    dump_v = getattr(args, "dump_samples", None)
    if dump_s or dump_v:
        s = cc.realize(regime, n, seed, 0, eps, keep_streams=True)
        if dump_s:
            streams = [v for v in s.streams.values() if isinstance(v, ta.SparseStream)]
            rows = ta.stream_rows(streams)
            _write(dump_s, head + "k,position,j\n" + "".join(f"{k},{p},{j}\n" for k, p, j in rows))
        if dump_v:
            rows = s.dump_rows()
            _write(dump_v, head + "row,position,value\n" + "".join(f"{k},{p},{v!r}\n" for k, p, v in rows))
    summary = {"config": full, "bands": ens.meta["bands"], "artifact_version": __version__}
    if "B_n" in ens.meta:
        summary["B_n"] = ens.meta["B_n"]
    out = sys.stderr if not cfg.get("out") or cfg.get("out") == "-" else sys.stdout
    out.write(json.dumps(vf._clean(summary), indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def suite_config(cfg: dict) -> vf.SuiteConfig:
    sc_ = vf.SuiteConfig()
    if "seed" in cfg:
        sc_.seed = cfg["seed"]
    if "epsilon" in cfg:
        sc_.epsilon = cfg["epsilon"]
    if "threads" in cfg:
        if cfg["threads"] < 1:
            raise ConfigError("--threads must be positive")
        sc_.threads = cfg["threads"]
    if "n_ladder" in cfg:
        ladder = tuple(_parse_ints(cfg["n_ladder"], "n-ladder"))
    elif "n" in cfg:
        n = cfg["n"]
        ladder = (max(2, n >> 4), max(2, n >> 2), n)
    else:
        ladder = None
    if ladder is not None:
        if len(ladder) < 3 or any(b <= a for a, b in zip(ladder, ladder[1:])) or ladder[0] < 2:
            raise ConfigError("the n ladder needs at least three increasing values >= 2")
        sc_.ladder = ladder
        sc_.equal_n = ladder[-1] if "n" in cfg else sc_.equal_n
        sc_.exact_ns = (ladder[-1],) if "n" in cfg else sc_.exact_ns
    if "replicas" in cfg:
        M = cfg["replicas"]
        if M < 100:
            raise ConfigError("--replicas must be at least 100 for the ECF statistics")
        sc_.ensemble_M = sc_.exact_M = sc_.equal_M = M
    if "regime" in cfg:
        regime = _regime(cfg)
        a = regime.alpha
        sc_.regimes = (regime.kind,)
        sc_.beta = regime.beta if regime.kind != "sym" else sc_.beta
        if regime.kind == "sub1":
            sc_.sub1_alpha = a
        elif regime.kind == "sym":
            sc_.sym_alpha = a
        else:
            sc_.super_alpha = a
        sc_.exact_alphas = (a,) if a != 1.0 else ()
        sc_.equal_cases = ((regime.kind, a),)
        sc_.appendix_alphas = (a,)
        sc_.centering = regime.kind == "super1"
    elif "alpha" in cfg:
        raise ConfigError("--alpha needs --regime for verify")
    return sc_


def _finish(report: dict, cfg: dict) -> int:
    _write(cfg.get("out") or "-", vf.report_json(report))
    s = report["summary"]
    msg = f"{s['passed']}/{s['gating']} gating checks passed"
    if s["failed"]:
        msg += "; failed: " + ", ".join(s["failed"])
    print(msg, file=sys.stderr)
    return EXIT_OK if s["all_pass"] else EXIT_FAIL


def cmd_verify(cfg: dict, args) -> int:
    scfg = suite_config(cfg)
    report = vf.run_suite(scfg, cfg.get("suite", "all"))
    report["config"]["cli"] = vf._clean({k: v for k, v in cfg.items() if k != "threads"})
    return _finish(report, cfg)


def cmd_moments(cfg: dict, args) -> int:
    if "alpha" not in cfg:
        raise ConfigError("--alpha is required")
    a = cfg["alpha"]
    sc.StableParams(a, 1.0, 1.0, 0.0)
    if a == 2.0:
        raise ConfigError("alpha = 2 has no power-law tail to fit")
    seed = cfg.get("seed", 0)
    r_grid = _parse_floats(cfg["r_grid"], "r-grid") if "r_grid" in cfg else None
    k_grid = _parse_floats(cfg["k_grid"], "k-grid") if "k_grid" in cfg else None
    results, skipped = vf.appendix_moment_suite(a, seed, r_grid, k_grid)
    cli = {k: v for k, v in cfg.items() if k != "threads"}
    report = vf.build_report({"alpha": a, "seed": seed, "r_grid": r_grid, "k_grid": k_grid, "cli": cli},
                             results, "appendix", {"skipped": skipped})
    return _finish(report, cfg)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = merge(args)
        handler = {"simulate": cmd_simulate, "verify": cmd_verify, "moments": cmd_moments}[args.command]
        return handler(cfg, args)
    except (ConfigError, cc.RegimeError, sc.StableParamError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (sc.QuadratureError, pr.ResourceLimitError, OSError, ArithmeticError, RuntimeError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:  # anything else is a bug or an environment fault
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
