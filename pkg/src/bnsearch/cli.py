"""Command-line front end.

Exit codes: 0 on success, 1 on an internal error, 2 when inputs fail
validation. Every command that writes files also writes an adjacent
``.manifest.txt`` recording flags, seed, input digests and the tool version.
"""

from __future__ import annotations

import argparse
import hashlib
import math
import os
import sys
import tempfile
import time
from pathlib import Path

import numpy as np
from scipy import stats

from . import __version__
from .dag import Dag, dag_to_cpdag, format_dag, read_dag, structural_difference
from .equivalence import DEFAULT_TAU, census_csv_row
from .errors import BnSearchError
from .mcmc import ChainConfig, class_bound_report, run_chain, write_diagnostics_csv, write_summary_csv
from .neighbourhoods import KINDS, RCAR_KINDS
from .netio import forward_sample, load_network
from .scoring import ScoreCache, read_arities, read_csv, score, write_arities, write_csv
from .search import DEFAULT_MAX_TRIALS, HcmcConfig, hcmc


def _atomic_write(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(path, command: str, flags: dict, inputs: dict, seconds: float) -> None:
    lines = [f"command: {command}", f"version: {__version__}"]
    for k in sorted(flags):
        lines.append(f"flag.{k}: {flags[k]}")
    for k in sorted(inputs):
        if inputs[k] is not None:
            lines.append(f"input.{k}: {inputs[k]} sha256={_digest(inputs[k])}")
    lines.append(f"wall_seconds: {seconds:.3f}")
    _atomic_write(path, "\n".join(lines) + "\n")


def _load_data(args):
    arities = None
    side = args.arities
    if side is None and Path(str(args.data) + ".arities").exists():
        side = str(args.data) + ".arities"
    if side is not None:
        arities = read_arities(side)
    return read_csv(args.data, integer_states=args.integer_states, arities=arities), side


def _load_structure(path) -> Dag:
    path = Path(path)
    if path.suffix == ".dag":
        return read_dag(path)
    return load_network(path).structure


def _resolve_tau(kind: str, tau):
    if kind in RCAR_KINDS:
        return DEFAULT_TAU if tau is None else tau
    return None


def _mean(values) -> float:
    values = [v for v in values if not math.isnan(v)]
    return sum(values) / len(values) if values else float("nan")


def _ci95(values) -> float:
    values = [v for v in values if not math.isnan(v)]
    if len(values) < 2:
        return float("nan")
    sd = float(np.std(values, ddof=1))
    return float(stats.t.ppf(0.975, len(values) - 1)) * sd / math.sqrt(len(values))


def cmd_sample(args) -> int:
    t0 = time.perf_counter()
    net = load_network(args.network)
    d = forward_sample(net, args.n, np.random.default_rng(args.seed))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    tmp = out.with_name(out.name + ".tmp")
    write_csv(d, tmp, integer_states=args.integer_states)
    os.replace(tmp, out)
    write_arities(d, str(out) + ".arities")
    _write_manifest(
        str(out) + ".manifest.txt",
        "sample",
        {"n": args.n, "seed": args.seed, "out": out, "integer_states": args.integer_states},
        {"network": args.network},
        time.perf_counter() - t0,
    )
    return 0


def cmd_learn(args) -> int:
    t0 = time.perf_counter()
    d, side = _load_data(args)
    kind = args.neighbourhood
    tau = _resolve_tau(kind, args.tau)
    true_cp = None
    if args.true_net:
        true = _load_structure(args.true_net)
        if true.n != d.n_vars:
            raise BnSearchError(f"true network has {true.n} nodes, data has {d.n_vars} variables")
        true_cp = dag_to_cpdag(true)
    prefix = args.out_prefix
    cache = ScoreCache()
    rows = []
    for run in range(args.runs):
        cfg = HcmcConfig(kind=kind, tau=tau, max_trials=args.max_trials, max_steps=args.max_steps,
                         seed=args.seed + run)
        g, trace = hcmc(d, cfg, cache)
        g = g.with_labels(d.labels)
        _atomic_write(f"{prefix}.run{run}.dag", format_dag(g))
        sd = structural_difference(true_cp, dag_to_cpdag(g)) if true_cp is not None else float("nan")
        rows.append((run, trace.steps, trace.sec_per_step, trace.final_score, sd))

    def cell(x):
        if isinstance(x, float) and math.isnan(x):
            return ""
        return repr(x) if isinstance(x, float) else str(x)

    lines = ["run,steps,sec_per_step,score,struct_diff"]
    lines += [",".join(cell(x) for x in r) for r in rows]
    cols = [[float(r[k]) for r in rows] for k in range(1, 5)]
    means = [_mean(c) for c in cols]
    cis = [_ci95(c) for c in cols]
    lines.append("mean," + ",".join(cell(x) for x in means))
    lines.append("ci95," + ",".join(cell(x) for x in cis))
    _atomic_write(f"{prefix}.report.csv", "\n".join(lines) + "\n")
    _write_manifest(
        f"{prefix}.manifest.txt",
        "learn",
        {"neighbourhood": kind, "tau": tau if tau is not None else "unused", "max_trials": args.max_trials,
         "max_steps": args.max_steps if args.max_steps is not None else f"default({10 * d.n_vars ** 2})",
         "runs": args.runs, "seed": args.seed, "integer_states": args.integer_states},
        {"data": args.data, "arities": side, "true_net": args.true_net},
        time.perf_counter() - t0,
    )
    print("\n".join(lines))
    return 0


def cmd_mcmc(args) -> int:
    t0 = time.perf_counter()
    d, side = _load_data(args)
    kind = args.neighbourhood
    tau = _resolve_tau(kind, args.tau)
    start = None
    if args.start:
        start = _load_structure(args.start)
        if start.n != d.n_vars:
            raise BnSearchError("start DAG does not match the dataset")
    cfg = ChainConfig(kind=kind, tau=tau, iterations=args.iterations, seed=args.seed, start=start,
                      hastings_correction=args.hastings, top_k=args.top_k, thin=args.thin)
    records, summary = run_chain(d, cfg)
    prefix = args.out_prefix
    Path(prefix).parent.mkdir(parents=True, exist_ok=True)
    write_diagnostics_csv(records, f"{prefix}.diagnostics.csv")
    write_summary_csv(summary, f"{prefix}.summary.csv")
    report = class_bound_report(summary.dag_visits)
    lines = ["cpdag_id,lower_bound,observed_members"]
    lines += [f"{i},{lb},{obs}" for i, (_, lb, obs) in enumerate(report)]
    _atomic_write(f"{prefix}.classes.csv", "\n".join(lines) + "\n")
    _write_manifest(
        f"{prefix}.manifest.txt",
        "mcmc",
        {"neighbourhood": kind, "tau": tau if tau is not None else "unused", "iterations": args.iterations,
         "seed": args.seed, "hastings": args.hastings, "thin": args.thin, "top_k": args.top_k,
         "integer_states": args.integer_states},
        {"data": args.data, "arities": side, "start": args.start},
        time.perf_counter() - t0,
    )
    print(f"distinct_cpdags={summary.distinct_cpdags} acc_rej_ratio={summary.acc_rej_ratio:.6g} "
          f"iter_per_sec={summary.iter_per_sec:.1f} phatD_log={summary.phat_log:.6f}")
    return 0


def cmd_census(args) -> int:
    if args.header:
        print("n,dags,classes,ratio")
    print(census_csv_row(args.nodes))
    return 0


def cmd_diff(args) -> int:
    a = _load_structure(args.a)
    b = _load_structure(args.b)
    print(structural_difference(dag_to_cpdag(a), dag_to_cpdag(b)))
    return 0


def cmd_score(args) -> int:
    d, _ = _load_data(args)
    g = _load_structure(args.dag)
    print(repr(score(g, d)))
    return 0


def _add_data_flags(p):
    p.add_argument("--data", required=True, help="dataset CSV with a header row")
    p.add_argument("--integer-states", action="store_true", help="cells are state indices 0..r-1")
    p.add_argument("--arities", help="sidecar file of 'label:arity' lines (default: <data>.arities if present)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bnsearch", description="Equivalence-aware Bayesian network structure search")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="forward-sample a dataset from a network file")
    p.add_argument("--network", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--integer-states", action="store_true")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("learn", help="hill-climber Monte Carlo search, repeated over seeded runs")
    _add_data_flags(p)
    p.add_argument("--neighbourhood", choices=KINDS, default="rcarr")
    p.add_argument("--tau", type=int, help=f"RCAR bound (default {DEFAULT_TAU}; ignored for non-RCAR kinds)")
    p.add_argument("--max-trials", type=int, default=DEFAULT_MAX_TRIALS)
    p.add_argument("--max-steps", type=int)
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--true-net", help="reference .dag or network file for struct diff")
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("mcmc", help="MC3 chain with diagnostics")
    _add_data_flags(p)
    p.add_argument("--neighbourhood", choices=KINDS, default="ar")
    p.add_argument("--tau", type=int)
    p.add_argument("--iterations", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--hastings", action="store_true", help="neighbourhood-size correction (nr, ar, cr, ncr)")
    p.add_argument("--thin", type=int, default=1)
    p.add_argument("--top-k", type=int, default=5)
    p.add_argument("--start", help="starting .dag (default: empty graph)")
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(func=cmd_mcmc)

    p = sub.add_parser("census", help="count DAGs and equivalence classes")
    p.add_argument("--nodes", type=int, required=True)
    p.add_argument("--header", action="store_true")
    p.set_defaults(func=cmd_census)

    p = sub.add_parser("diff", help="structural difference between two essential graphs")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.set_defaults(func=cmd_diff)

    p = sub.add_parser("score", help="BDeu score of a DAG")
    _add_data_flags(p)
    p.add_argument("--dag", required=True)
    p.set_defaults(func=cmd_score)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    for flag in ("runs", "iterations", "n", "thin", "top_k", "max_trials"):
        v = getattr(args, flag, None)
        if v is not None and v < (0 if flag in ("max_trials", "n") else 1):
            print(f"error: --{flag.replace('_', '-')} out of range: {v}", file=sys.stderr)
            return 2
    try:
        return args.func(args)
    except (BnSearchError, FileNotFoundError, IsADirectoryError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {exc!r}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
