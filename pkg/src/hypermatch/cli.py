"""Command-line front end: experiment orchestration with reproducible output.

Conventions:

* CSV for tables, JSON for reports; floats printed with 12 significant
  digits; exact rationals as "num/den" strings; JSON keys sorted.
* Every run with ``--out`` also writes ``<out>.manifest.json`` echoing the
  merged configuration plus the code version.  A manifest is itself a valid
  ``--config`` file, so any run can be replayed byte-identically with
  ``hypermatch <command> --config <manifest> --out <path>``.
* ``--workers N`` distributes trials over a process pool with per-trial
  derived seeds; results are merged in trial order, so ``--workers 1``
  reproduces parallel output exactly.
* Exit codes: 0 success, 2 configuration error, 3 resource guard,
  4 invariant violation detected by a verify suite.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path

from . import __version__
from .hypergraph import (Hypergraph, HypergraphError, complete, mask_of,
                         parse_hypergraph, random_hypergraph, vertices_of)
from .pm import (NoPerfectMatchingError, ResourceGuardError, count_pm,
                 enumerate_pms, log_big, maxr, weight_table)
from .properties import MissingAuxError, ToleranceParams, alpha, rdefb_replay
from .processes import (child_rng, hitting_benchmark, run_deletion_trace,
                        run_hitting_experiment, run_reduction_sim,
                        trace_to_csv, wilson_interval)
from .entropy import (closed_form_q, closed_form_s, qk_sk_exhaustive,
                      rk_mixture_check, shearer_gap, tcuckler_report,
                      vertex_entropy)
from .concentration import (azuma_bound, chernoff_bounds, cher_prime,
                            eez_grid_scan, eez_scan_csv, mc_tail_check,
                            phi_cramer)

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_GUARD = 3
EXIT_VIOLATION = 4


class ConfigError(ValueError):
    pass


def _fmt(x) -> str:
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def _jsonable(obj):
    """Normalize a report structure for deterministic JSON emission."""
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}"
    if isinstance(obj, float):
        return float(f"{obj:.12g}")
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (str, int, bool)) or obj is None:
        return obj
    return str(obj)


def _dump_json(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, indent=1) + "\n"


def _load_hypergraph(args) -> Hypergraph:
    if args.get("file"):
        return parse_hypergraph(Path(args["file"]).read_text())
    if args.get("n") is None or args.get("r") is None:
        raise ConfigError("need either --file or both --n and --r")
    return complete(int(args["n"]), int(args["r"]))


# ---------------------------------------------------------------------------
# subcommand implementations; each returns (output_text, exit_code)


def _cmd_count(args) -> tuple[str, int]:
    H = _load_hypergraph(args)
    phi = count_pm(H)
    return _dump_json({
        "n": H.n, "r": H.r, "m": H.m, "n_active": H.n_active,
        "phi": str(phi),
        "log_phi": log_big(phi) if phi > 0 else None,
    }), EXIT_OK


def _cmd_weights(args) -> tuple[str, int]:
    H = _load_hypergraph(args)
    spec = weight_table(H, scope=args["scope"])
    lines = ["rset,weight"]
    for z, w in spec.entries:
        lines.append(f"{'+'.join(str(v + 1) for v in vertices_of(z))},{w}")
    return "\n".join(lines) + "\n", EXIT_OK


def _cmd_trace(args) -> tuple[str, int]:
    n, r = int(args["n"]), int(args["r"])
    m_final = int(args["M"]) if args.get("M") is not None else n // r
    trace = run_deletion_trace(n, r, m_final, int(args["seed"]),
                               evaluate_flags=bool(args["flags"]))
    return trace_to_csv(trace), EXIT_OK


def _cmd_hitting(args) -> tuple[str, int]:
    n, r = int(args["n"]), int(args["r"])
    results, summary = run_hitting_experiment(
        n, r, int(args["trials"]), int(args["seed"]), workers=int(args["workers"]))
    return _dump_json({
        "summary": summary,
        "trials": [{"T_hit": t.T_hit, "has_pm": t.has_pm,
                    "phi": str(t.phi_at_T),
                    "log_phi": None if not t.has_pm else t.log_phi}
                   for t in results],
    }), EXIT_OK


def _reduce_trial(a):
    n, r, eps, g, seed, i = a
    rep = run_reduction_sim(n, r, eps, g, (seed, i))
    return {"check_a": rep.check_a, "check_b": rep.check_b,
            "check_c": rep.check_c, "check_whp2": rep.check_whp2,
            "delta_x_in_range": rep.delta_x_in_range}


def _cmd_reduce(args) -> tuple[str, int]:
    n, r = int(args["n"]), int(args["r"])
    eps = float(args["eps"])
    g = float(args["g"]) if args.get("g") is not None else math.log(math.log(n))
    trials = int(args["trials"])
    seed = int(args["seed"])
    if trials == 1:
        rep = run_reduction_sim(n, r, eps, g, (seed, 0))
        return _dump_json(rep.to_dict()), EXIT_OK
    arglist = [(n, r, eps, g, seed, i) for i in range(trials)]
    workers = int(args["workers"])
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_reduce_trial, arglist, chunksize=8))
    else:
        rows = [_reduce_trial(a) for a in arglist]
    freq = {key: sum(1 for row in rows if row[key]) / trials
            for key in rows[0]}
    return _dump_json({"n": n, "r": r, "eps": eps, "g": g, "trials": trials,
                       "seed": seed, "frequencies": freq}), EXIT_OK


def _scan_trial(a):
    n, r, M, seed, i = a
    rng = child_rng(seed, 4, n, M, i)
    H = random_hypergraph(n, r, M, rng)
    phi = count_pm(H)
    return phi


def scan_threshold(n_list, r: int, m_grid, trials: int, seed: int,
                   workers: int = 1) -> str:
    """CSV sweep of PM probability in the uniform M-edge model."""
    lines = ["n,M,trials,successes,p_hat,wilson_lo,wilson_hi,mean_log_phi,benchmark"]
    for n in n_list:
        K_m = complete(n, r).m
        for M in m_grid:
            if M > K_m:
                raise ConfigError(f"M={M} exceeds C({n},{r})={K_m}")
            arglist = [(n, r, M, seed, i) for i in range(trials)]
            if workers > 1:
                with ProcessPoolExecutor(max_workers=workers) as pool:
                    phis = list(pool.map(_scan_trial, arglist, chunksize=16))
            else:
                phis = [_scan_trial(a) for a in arglist]
            succ = sum(1 for p in phis if p > 0)
            lo, hi = wilson_interval(succ, trials)
            logs = [log_big(p) for p in phis if p > 0]
            mean_log = (sum(logs) / len(logs)) if logs else float("nan")
            bench = (n / r) * math.log(math.exp(-(r - 1)) * r * M / n)
            lines.append(",".join([
                str(n), str(M), str(trials), str(succ),
                _fmt(succ / trials), _fmt(lo), _fmt(hi),
                _fmt(mean_log), _fmt(bench)]))
    return "\n".join(lines) + "\n"


def _cmd_scan(args) -> tuple[str, int]:
    n_list = [int(x) for x in str(args["n_list"]).split(",")]
    m_grid = [int(x) for x in str(args["m_grid"]).split(",")]
    return scan_threshold(n_list, int(args["r"]), m_grid,
                          int(args["trials"]), int(args["seed"]),
                          int(args["workers"])), EXIT_OK


def _cmd_entropy(args) -> tuple[str, int]:
    H = _load_hypergraph(args)
    lhs, rhs = shearer_gap(H)
    return _dump_json({
        "log_phi": lhs,
        "entropy_bound": rhs,
        "gap": rhs - lhs,
        "per_vertex": {str(v + 1): vertex_entropy(H, v) for v in H.active_list()},
    }), EXIT_OK


def _cmd_tcuckler(args) -> tuple[str, int]:
    H = _load_hypergraph(args)
    rep = tcuckler_report(H, sampling=args["sampling"],
                          trials=int(args["trials"]), seed=int(args["seed"]))
    return _dump_json(rep.to_dict()), EXIT_OK


def _cmd_qs_verify(args) -> tuple[str, int]:
    n, r = int(args["n"]), int(args["r"])
    K = complete(n, r)
    pms = enumerate_pms(K)
    rng = child_rng(int(args["seed"]), 5)
    n_pms = min(int(args["pms"]), len(pms))
    n_pairs = int(args["pairs"])
    f_idx = sorted(rng.choice(len(pms), size=n_pms, replace=False).tolist())
    lines = ["f_index,v,Y,tau,in_gamma,q_match,s_match_generic,s_match_tau"]
    violations = 0
    for fi in f_idx:
        f = pms[fi]
        for _ in range(n_pairs):
            v = int(rng.integers(0, n))
            rest = [u for u in range(n) if u != v]
            Y = mask_of(rng.choice(rest, size=r - 1, replace=False).tolist())
            chk = qk_sk_exhaustive(n, r, f, v, Y)
            if not chk.q_match or not chk.s_match_tau or \
                    (not chk.in_gamma and not chk.s_match):
                violations += 1
            lines.append(",".join([
                str(fi), str(v + 1),
                "+".join(str(u + 1) for u in vertices_of(Y)),
                str(chk.tau), str(int(chk.in_gamma)), str(int(chk.q_match)),
                str(int(chk.s_match)), str(int(chk.s_match_tau))]))
    return "\n".join(lines) + "\n", EXIT_VIOLATION if violations else EXIT_OK


DEFAULT_TAIL_CASES = [
    ("binomial", {"N": 100, "p": 0.1}, "upper", 20.0, "chernoff"),
    ("binomial", {"N": 100, "p": 0.1}, "upper", 25.0, "chernoff"),
    ("binomial", {"N": 100, "p": 0.1}, "lower", 4.0, "chernoff"),
    ("binomial", {"N": 400, "p": 0.05}, "upper", 32.0, "chernoff"),
    ("binomial", {"N": 400, "p": 0.05}, "lower", 10.0, "chernoff"),
    ("binomial", {"N": 50, "p": 0.5}, "upper", 35.0, "chernoff"),
    ("hypergeometric", {"s": 84, "a": 28, "k": 30}, "upper", 16.0, "chernoff"),
    ("hypergeometric", {"s": 84, "a": 28, "k": 30}, "lower", 5.0, "chernoff"),
    ("hypergeometric", {"s": 220, "a": 55, "k": 60}, "lower", 8.0, "chernoff"),
    ("binomial", {"N": 100, "p": 0.02}, "upper", 2 * math.e ** 2, "cher-prime"),
]


def _cmd_tails(args) -> tuple[str, int]:
    if args.get("eez"):
        violations, rows = eez_grid_scan()
        return eez_scan_csv(rows), EXIT_VIOLATION if violations else EXIT_OK
    trials = int(args["trials"])
    seed = int(args["seed"])
    lines = ["dist,params,tail,threshold,trials,empirical,bound,ok"]
    bad = 0
    for dist, params, tail, thr, kind in DEFAULT_TAIL_CASES:
        res = mc_tail_check(dist, params, thr, trials, seed, tail=tail,
                            bound_kind=kind)
        if not res.ok:
            bad += 1
        pstr = ";".join(f"{k}={v}" for k, v in sorted(params.items()))
        lines.append(",".join([dist, pstr, tail, _fmt(thr), str(trials),
                               _fmt(res.empirical), _fmt(res.bound),
                               str(int(res.ok))]))
    return "\n".join(lines) + "\n", EXIT_VIOLATION if bad else EXIT_OK


def _cmd_verify_lemmas(args) -> tuple[str, int]:
    """Small deterministic battery of the identities the library relies on."""
    seed = int(args["seed"])
    checks: dict[str, bool] = {}

    from .pm import complete_pm_count
    checks["closed_form_counts"] = all(
        count_pm(complete(n, 3)) == complete_pm_count(n, 3)
        for n in (3, 6, 9, 12))
    rng = child_rng(seed, 6)
    ok_oracle = ok_identity = ok_shearer = True
    for _ in range(10):
        n = int(rng.integers(6, 10))
        H = random_hypergraph(n, 3, int(rng.integers(5, 20)), rng)
        phi = count_pm(H)
        ok_oracle &= phi == len(enumerate_pms(H))
        spec = weight_table(H, scope="edges")
        ok_identity &= sum(spec.weights()) * H.r == phi * H.n_active
        if phi > 0 and n % 3 == 0:
            lhs, rhs = shearer_gap(H)
            ok_shearer &= lhs <= rhs + 1e-9
    checks["oracle_equivalence"] = ok_oracle
    checks["edge_weight_identity"] = ok_identity
    checks["shearer"] = ok_shearer
    checks["rdefb_replay"] = rdefb_replay(complete(9, 3),
                                          ToleranceParams())["conclusion_holds"]
    chk = qk_sk_exhaustive(9, 3, enumerate_pms(complete(9, 3))[0],
                           0, mask_of([4, 7]))
    checks["ordering_distributions"] = chk.q_match and chk.s_match_tau
    checks["mixture_bound"] = rk_mixture_check(9, 3, 0, mask_of([4, 7]))["bound_holds"]
    checks["eez_grid"] = eez_grid_scan()[0] == 0
    checks["azuma_small_lambda"] = abs(azuma_bound([(1, 1)] * 25, 10)
                                       - math.exp(-1)) < 1e-12
    checks["cramer_endpoint"] = phi_cramer(-1) == 1.0
    checks["alpha_complete"] = alpha(complete(6, 3)) == 0

    ok = all(checks.values())
    return _dump_json({"checks": checks, "all_pass": ok}), \
        EXIT_OK if ok else EXIT_VIOLATION


# ---------------------------------------------------------------------------
# argument plumbing

# name -> (runner, {arg: (type, default, help)})
SUBCOMMANDS = {
    "count": (_cmd_count, {
        "n": (int, None, "vertices of the complete r-graph"),
        "r": (int, None, "uniformity"),
        "file": (str, None, "hypergraph fixture file"),
    }),
    "weights": (_cmd_weights, {
        "n": (int, None, "vertices"), "r": (int, None, "uniformity"),
        "file": (str, None, "hypergraph fixture file"),
        "scope": (str, "edges", "edges | all-rsets"),
    }),
    "trace": (_cmd_trace, {
        "n": (int, None, "vertices"), "r": (int, None, "uniformity"),
        "M": (int, None, "edges remaining at the end (default n/r)"),
        "flags": (int, 1, "evaluate per-step property flags (0/1)"),
    }),
    "hitting": (_cmd_hitting, {
        "n": (int, None, "vertices"), "r": (int, None, "uniformity"),
        "trials": (int, 100, "number of trials"),
    }),
    "reduce": (_cmd_reduce, {
        "n": (int, None, "vertices"), "r": (int, None, "uniformity"),
        "eps": (float, 0.2, "low-degree threshold fraction"),
        "g": (float, None, "threshold spread (default log log n)"),
        "trials": (int, 1, "seeds to aggregate"),
    }),
    "scan": (_cmd_scan, {
        "n_list": (str, None, "comma-separated n values"),
        "r": (int, 3, "uniformity"),
        "m_grid": (str, None, "comma-separated M values"),
        "trials": (int, 100, "trials per grid point"),
    }),
    "entropy": (_cmd_entropy, {
        "n": (int, None, "vertices"), "r": (int, None, "uniformity"),
        "file": (str, None, "hypergraph fixture file"),
    }),
    "tcuckler": (_cmd_tcuckler, {
        "n": (int, None, "vertices"), "r": (int, None, "uniformity"),
        "file": (str, None, "hypergraph fixture file"),
        "sampling": (str, "exhaustive", "exhaustive | monte-carlo"),
        "trials": (int, 2000, "monte-carlo sample size"),
    }),
    "qs-verify": (_cmd_qs_verify, {
        "n": (int, 9, "vertices"), "r": (int, 3, "uniformity"),
        "pairs": (int, 5, "sampled (v,Y) pairs per matching"),
        "pms": (int, 10, "sampled perfect matchings"),
    }),
    "tails": (_cmd_tails, {
        "trials": (int, 100_000, "MC trials per case"),
        "eez": (int, 0, "emit the moment-inequality grid scan instead (0/1)"),
    }),
    "verify-lemmas": (_cmd_verify_lemmas, {}),
}

GLOBAL_ARGS = {"seed": (int, 0), "workers": (int, 1)}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hypermatch",
        description="exact PM counting and random-process experiments on r-graphs")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, spec) in SUBCOMMANDS.items():
        p = sub.add_parser(name)
        for arg, (typ, _default, help_) in spec.items():
            p.add_argument(f"--{arg.replace('_', '-')}", type=typ,
                           default=None, help=help_)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--workers", type=int, default=None)
        p.add_argument("--out", type=str, default=None)
        p.add_argument("--config", type=str, default=None)
    return parser


def _merge_config(command: str, cli_args: dict) -> dict:
    """defaults < config file < explicit CLI flags."""
    _, spec = SUBCOMMANDS[command]
    merged = {arg: default for arg, (_, default, _) in spec.items()}
    merged.update({k: d for k, (_, d) in GLOBAL_ARGS.items()})
    cfg_path = cli_args.get("config")
    if cfg_path:
        try:
            cfg = json.loads(Path(cfg_path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {cfg_path}: {exc}") from exc
        if cfg.get("schema_version") != SCHEMA_VERSION:
            raise ConfigError(
                f"config schema_version must be {SCHEMA_VERSION}")
        if "command" in cfg and cfg["command"] != command:
            raise ConfigError(
                f"config is for command {cfg['command']!r}, not {command!r}")
        for k, v in cfg.get("args", {}).items():
            if k not in merged:
                raise ConfigError(f"unknown config key {k!r} for {command}")
            merged[k] = v
    for k, v in cli_args.items():
        if k in merged and v is not None:
            merged[k] = v
    return merged


def _manifest(command: str, merged: dict) -> str:
    return _dump_json({
        "schema_version": SCHEMA_VERSION,
        "code_version": __version__,
        "command": command,
        "args": {k: v for k, v in merged.items()},
    })


def main(argv=None) -> int:
    parser = _build_parser()
    ns = parser.parse_args(argv)
    command = ns.command
    cli_args = vars(ns)
    runner, _ = SUBCOMMANDS[command]
    try:
        merged = _merge_config(command, cli_args)
        output, code = runner(merged)
    except (ConfigError, HypergraphError, MissingAuxError,
            NoPerfectMatchingError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ResourceGuardError as exc:
        print(f"resource guard: {exc}", file=sys.stderr)
        return EXIT_GUARD
    out_path = cli_args.get("out")
    if out_path:
        Path(out_path).write_text(output)
        Path(out_path + ".manifest.json").write_text(_manifest(command, merged))
    else:
        sys.stdout.write(output)
    return code


if __name__ == "__main__":
    sys.exit(main())
