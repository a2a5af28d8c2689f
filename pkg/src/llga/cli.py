"""``llga`` command line: run, sweep, drift, success, tail, oracle, lemma41.

Every output file starts with ``# llga-csv v1 <subcommand>`` followed by a
``# config:`` line echoing the resolved experiment configuration as sorted
JSON.  Execution-only settings (thread count, output paths) are not echoed,
so the bytes of an output file only depend on the experiment itself.
"""
from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
from pathlib import Path
from typing import Any, Sequence

from . import harness, oracle, theory
from .bitcore import ContractError, GaParams, derive_seed
from .engine import run_until_optimum
from .fitness import FitnessFunction

CSV_VERSION = "v1"

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CENSORED = 3
EXIT_ORACLE_SIZE = 4

SUBCOMMANDS = ("run", "sweep", "drift", "success", "tail", "oracle", "lemma41")

DEFAULTS: dict[str, Any] = {
    "lambda": "auto",
    "reps": 100,
    "seed": 0,
    "budget_factor": harness.DEFAULT_BUDGET_FACTOR,
    "deltas": [0.5, 1.0, 2.0],
    "distances": None,
    "C": 1.0,
    "n_max": oracle.DEFAULT_N_MAX,
    "trace": None,
    "no_trace": False,
    "summary": None,
    "out": None,
    "threads": None,
}
_NOT_ECHOED = {"out", "summary", "threads", "config", "trace", "no_trace", "subcommand"}


def fmt(v: Any) -> str:
    """Round-trip serialisation of one CSV cell."""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _lambda_arg(text: str):
    if text == "auto":
        return "auto"
    return _int_list(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="llga",
        description="(1+(lambda,lambda)) GA on OneMax: simulation, exact oracle and theory checks.")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=_int_list, help="problem size (comma list allowed for run/sweep)")
    common.add_argument("--lambda", dest="lambda", type=_lambda_arg,
                        help="offspring population size, comma list, or 'auto'")
    common.add_argument("--reps", type=int, help="replications (samples per distance for drift/success)")
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--budget-factor", dest="budget_factor", type=float,
                        help="evaluation budget as a multiple of the runtime bound")
    common.add_argument("--out", help="output CSV path (default: stdout)")
    common.add_argument("--summary", help="also write a JSON summary here")
    common.add_argument("--threads", type=int, help="worker threads (output does not depend on it)")
    common.add_argument("--config", help="JSON file with defaults; flags override it")
    common.add_argument("--deltas", type=_float_list, help="comma list of deviation factors")
    common.add_argument("--distances", type=_int_list, help="comma list of fitness distances")
    common.add_argument("--no-trace", dest="no_trace", action="store_true", default=None,
                        help="never write per-iteration traces")

    helps = {
        "run": "independent runs, one CSV row per run",
        "sweep": "runtime statistics per lambda",
        "drift": "mean one-round fitness gain per distance",
        "success": "one-round strict improvement frequency per distance",
        "tail": "upper-tail exceedance frequencies of the runtime",
        "oracle": "exact expected iterations from the distance Markov chain",
        "lemma41": "geometric-sum / coupon-collector tail check",
    }
    subs = {name: sub.add_parser(name, parents=[common], help=h) for name, h in helps.items()}
    subs["run"].add_argument("--trace", help="write per-iteration traces to this CSV")
    subs["oracle"].add_argument("--n-max", dest="n_max", type=int, help="largest n the exact oracle accepts")
    subs["lemma41"].add_argument("--C", dest="C", type=float, help="success-probability scale in (0, 1]")
    return parser


def resolve(args: argparse.Namespace, parser: argparse.ArgumentParser) -> dict[str, Any]:
    cfg = dict(DEFAULTS)
    if args.config:
        try:
            loaded = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            parser.error(f"cannot read config {args.config}: {exc}")
        for k, v in loaded.items():
            key = k.replace("-", "_")
            if key == "lambda_":
                key = "lambda"
            cfg[key] = v
    for k, v in vars(args).items():
        if v is not None:
            cfg[k] = v
    cfg["subcommand"] = args.subcommand

    def as_list(v, conv):
        if v is None or v == "auto":
            return v
        if isinstance(v, (list, tuple)):
            return [conv(t) for t in v]
        if isinstance(v, str):
            return [conv(t) for t in v.split(",") if t.strip()]
        return [conv(v)]

    try:
        cfg["n"] = as_list(cfg.get("n"), int)
        cfg["lambda"] = as_list(cfg["lambda"], int)
        cfg["deltas"] = as_list(cfg["deltas"], float)
        cfg["distances"] = as_list(cfg["distances"], int)
        cfg["reps"] = int(cfg["reps"])
        cfg["seed"] = int(cfg["seed"])
        cfg["budget_factor"] = float(cfg["budget_factor"])
        cfg["C"] = float(cfg["C"])
        cfg["n_max"] = int(cfg["n_max"])
    except (TypeError, ValueError) as exc:
        parser.error(f"invalid configuration value: {exc}")

    if not cfg["n"]:
        parser.error("--n is required")
    if any(n < 1 for n in cfg["n"]):
        parser.error("n must be a positive integer")
    if len(cfg["n"]) > 1 and args.subcommand not in ("run", "sweep"):
        parser.error(f"{args.subcommand} takes a single --n")
    if cfg["reps"] < 1:
        parser.error("--reps must be >= 1")
    if not 0 <= cfg["seed"] < 2 ** 64:
        parser.error("--seed must be a 64-bit unsigned integer")
    if cfg["budget_factor"] <= 0:
        parser.error("--budget-factor must be positive")
    if cfg["lambda"] != "auto":
        if not cfg["lambda"]:
            parser.error("--lambda is empty")
        for n in cfg["n"]:
            for lam in cfg["lambda"]:
                if not 1 <= lam <= n:
                    parser.error(f"lambda={lam} outside [1..{n}]")
        if len(cfg["lambda"]) > 1 and args.subcommand not in ("sweep",):
            parser.error(f"{args.subcommand} takes a single --lambda")
    if any(d < 0 for d in cfg["deltas"]):
        parser.error("deltas must be non-negative")
    if args.subcommand == "lemma41" and not 0 < cfg["C"] <= 1:
        parser.error("--C must lie in (0, 1]")
    if cfg["distances"] is not None:
        n = cfg["n"][0]
        if any(not 1 <= d <= n for d in cfg["distances"]):
            parser.error(f"distances must lie in [1..{n}]")
    threads = cfg.get("threads")
    cfg["threads"] = max(1, int(threads)) if threads is not None else (os.cpu_count() or 1)
    return cfg


def _lambdas(cfg: dict, n: int) -> list[int]:
    if cfg["lambda"] == "auto":
        return [theory.optimal_lambda(n)[1]]
    return cfg["lambda"]


def _echo(cfg: dict) -> dict:
    echo = {k: v for k, v in cfg.items() if k not in _NOT_ECHOED}
    if echo.get("lambda") == "auto":
        echo["lambda_resolved"] = [theory.optimal_lambda(n)[1] for n in cfg["n"]]
    sc = cfg["subcommand"]
    keep = {
        "run": {"n", "lambda", "lambda_resolved", "reps", "seed", "budget_factor"},
        "sweep": {"n", "lambda", "lambda_resolved", "reps", "seed", "budget_factor"},
        "drift": {"n", "lambda", "lambda_resolved", "reps", "seed", "distances"},
        "success": {"n", "lambda", "lambda_resolved", "reps", "seed", "distances"},
        "tail": {"n", "lambda", "lambda_resolved", "reps", "seed", "budget_factor", "deltas"},
        "oracle": {"n", "lambda", "lambda_resolved", "n_max"},
        "lemma41": {"n", "C", "reps", "seed", "deltas"},
    }[sc]
    return {k: v for k, v in echo.items() if k in keep}


class Table:
    def __init__(self, subcommand: str, config: dict, columns: Sequence[str]):
        self.subcommand = subcommand
        self.config = config
        self.columns = list(columns)
        self.rows: list[list[Any]] = []
        self.notes: dict[str, Any] = {}

    def add(self, *row):
        self.rows.append(list(row))

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# llga-csv {CSV_VERSION} {self.subcommand}\n")
        buf.write(f"# config: {json.dumps(self.config, sort_keys=True)}\n")
        for k, v in self.notes.items():
            buf.write(f"# {k}: {fmt(v)}\n")
        buf.write(",".join(self.columns) + "\n")
        for row in self.rows:
            buf.write(",".join(fmt(v) for v in row) + "\n")
        return buf.getvalue()

    def to_json(self) -> str:
        def clean(v):
            if isinstance(v, float) and not math.isfinite(v):
                return None
            return v
        doc = {
            "format": f"llga-json {CSV_VERSION}",
            "subcommand": self.subcommand,
            "config": self.config,
            **{k: clean(v) for k, v in self.notes.items()},
            "rows": [dict(zip(self.columns, map(clean, r))) for r in self.rows],
        }
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def _progress(msg: str) -> None:
    print(msg, file=sys.stderr, flush=True)


def _cmd_run(cfg: dict, table: Table) -> int:
    all_censored = True
    traces: list[list[Any]] = []
    want_trace = cfg.get("trace") and not cfg.get("no_trace")
    for n in cfg["n"]:
        for lam in _lambdas(cfg, n):
            budget = harness.default_budget(n, lam, cfg["budget_factor"])
            if want_trace:
                params, f = GaParams(n, lam), FitnessFunction.onemax(n)
                runs = []
                for i in range(cfg["reps"]):
                    res, tr = run_until_optimum(params, f, derive_seed(cfg["seed"], i), budget, trace=True)
                    runs.append(res)
                    for t, it in enumerate(tr, start=1):
                        traces.append([n, lam, i, t, it.ell, it.best_mutant_gain, it.good_bits,
                                       it.crossover_gain, it.accepted, it.distance_before,
                                       it.distance_after, it.evaluations])
            else:
                runs = harness.replicate(n, lam, cfg["reps"], cfg["seed"], budget, threads=cfg["threads"])
            for i, r in enumerate(runs):
                table.add(i, r.seed, n, lam, r.evaluations, r.iterations, r.censored)
            all_censored &= all(r.censored for r in runs)
            _progress(f"run n={n} lambda={lam}: {len(runs)} runs")
    if want_trace:
        tt = Table("trace", table.config,
                   ["n", "lambda", "run_index", "iteration", "ell", "best_mutant_gain", "good_bits",
                    "crossover_gain", "accepted", "distance_before", "distance_after", "evaluations"])
        tt.rows = traces
        Path(cfg["trace"]).write_text(tt.to_csv())
    return EXIT_CENSORED if all_censored else EXIT_OK


def _cmd_sweep(cfg: dict, table: Table) -> int:
    status = EXIT_OK
    for n in cfg["n"]:
        res = harness.lambda_sweep(n, _lambdas(cfg, n), cfg["reps"], cfg["seed"],
                                   cfg["budget_factor"], cfg["threads"], progress=_progress)
        for lam, st in res.rows:
            table.add(n, lam, st.reps, st.mean, st.std_err, st.median, st.q05, st.q95, st.censored_count)
            if st.all_censored:
                status = EXIT_CENSORED
        table.notes[f"argmin_n{n}"] = res.argmin
    return status


def _default_distances(n: int) -> list[int]:
    ds, d = [], n
    while d >= 1:
        ds.append(d)
        d //= 2
    return ds


def _cmd_drift(cfg: dict, table: Table) -> int:
    n = cfg["n"][0]
    lam = _lambdas(cfg, n)[0]
    ds = cfg["distances"] or _default_distances(n)
    prof = harness.drift_profile(n, lam, ds, cfg["reps"], cfg["seed"], threads=cfg["threads"])
    for b in prof.bins:
        table.add(b.d, b.samples, b.mean_gain, b.se_gain, b.mean_good_bits, b.mean_ell)
    return EXIT_OK


def _cmd_success(cfg: dict, table: Table) -> int:
    n = cfg["n"][0]
    lam = _lambdas(cfg, n)[0]
    ds = cfg["distances"] or _default_distances(n)
    for r in harness.success_probability(n, lam, ds, cfg["reps"], cfg["seed"], threads=cfg["threads"]):
        table.add(r.d, r.samples, r.freq_improve, r.implied_c)
    return EXIT_OK


def _cmd_tail(cfg: dict, table: Table) -> int:
    n = cfg["n"][0]
    lam = _lambdas(cfg, n)[0]
    rep = harness.tail_estimate(n, lam, cfg["reps"], cfg["deltas"], cfg["seed"],
                                cfg["budget_factor"], cfg["threads"])
    table.notes["mean"] = rep.stats.mean
    table.notes["censored"] = rep.stats.censored_count
    for r in rep.rows:
        table.add(r.delta, r.threshold, r.freq_exceed, r.reference_bound)
    return EXIT_CENSORED if rep.stats.all_censored else EXIT_OK


def _cmd_oracle(cfg: dict, table: Table) -> int:
    n = cfg["n"][0]
    lam = _lambdas(cfg, n)[0]
    try:
        kern = oracle.build_kernel(n, lam, n_max=cfg["n_max"])
    except oracle.OracleSizeError as exc:
        print(f"llga: {exc}", file=sys.stderr)
        return EXIT_ORACLE_SIZE
    ht = oracle.expected_times(kern)
    table.notes["expected_evaluations_total"] = ht.expected_evaluations_total
    table.notes["expected_evaluations_exact"] = ht.expected_evaluations_exact
    table.columns = ["d", "expected_iterations"] + [f"p_{j}" for j in range(n + 1)]
    for d in range(n + 1):
        table.add(d, float(ht.expected_iterations[d]), *map(float, kern.rows[d]))
    return EXIT_OK


def _cmd_lemma41(cfg: dict, table: Table) -> int:
    n = cfg["n"][0]
    rep = harness.lemma41_check(n, cfg["C"], cfg["reps"], cfg["deltas"] or [1.0], cfg["seed"])
    for r in rep.rows:
        table.add(n, cfg["C"], cfg["reps"], rep.mean, rep.harmonic_bound, r.delta, r.threshold, r.freq, r.bound)
    table.notes["coupon_mean"] = rep.coupon_moments[0]
    table.notes["coupon_second_moment"] = rep.coupon_moments[1]
    table.notes["geometric_second_moment"] = rep.geometric_moments[1]
    return EXIT_OK


COLUMNS = {
    "run": ["run_index", "seed", "n", "lambda", "evaluations", "iterations", "censored"],
    "sweep": ["n", "lambda", "reps", "mean", "std_err", "median", "q05", "q95", "censored"],
    "drift": ["d", "samples", "mean_gain", "se_gain", "mean_good_bits", "mean_ell"],
    "success": ["d", "samples", "freq_improve", "implied_c"],
    "tail": ["delta", "threshold", "freq_exceed", "reference_bound"],
    "oracle": ["d", "expected_iterations"],
    "lemma41": ["n", "C", "reps", "mean", "harmonic_bound", "delta", "threshold", "freq", "bound"],
}
COMMANDS = {
    "run": _cmd_run, "sweep": _cmd_sweep, "drift": _cmd_drift, "success": _cmd_success,
    "tail": _cmd_tail, "oracle": _cmd_oracle, "lemma41": _cmd_lemma41,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = resolve(args, parser)
    except SystemExit as exc:
        return int(exc.code or 0)

    table = Table(cfg["subcommand"], _echo(cfg), COLUMNS[cfg["subcommand"]])
    try:
        code = COMMANDS[cfg["subcommand"]](cfg, table)
    except ContractError as exc:
        print(f"llga: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if code == EXIT_ORACLE_SIZE:
        return code
    text = table.to_csv()
    if cfg["out"]:
        Path(cfg["out"]).write_text(text)
    else:
        sys.stdout.write(text)
    if cfg["summary"]:
        Path(cfg["summary"]).write_text(table.to_json())
    if code == EXIT_CENSORED:
        print("llga: every run was censored by the evaluation budget", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
