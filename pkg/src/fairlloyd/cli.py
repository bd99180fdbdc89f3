"""Command-line entry point.

Subcommands:

* ``run``: ingest a CSV, preprocess, sweep k for Lloyd and/or Fair-Lloyd,
  and write a JSON report plus plot-data CSVs;
* ``gen-synthetic``: write a group-skewed synthetic CSV and its sidecar;
* ``bench``: kernel and per-iteration timings.

Exit codes: 0 success, 1 input error, 2 internal error. Errors are printed
to stderr as a JSON object.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from importlib import resources
from pathlib import Path

import jsonschema

from .clustering import ClusteringConfig, fair_lloyd, lloyd
from .errors import FairLloydError, InvalidArgumentError
from .fair_solver import MODES, SolverConfig
from .io import SyntheticParams, ingest_csv, write_synthetic
from .metrics import metrics_report
from .preprocess import fit_pipeline, parse_pipeline

SCHEMA_VERSION = 1
INIT_ALIASES = {"random": "random", "kmeanspp": "kmeanspp", "weighted": "weighted_lloyd",
                "weighted_lloyd": "weighted_lloyd"}
ALGOS = {"lloyd": ("lloyd",), "fair-lloyd": ("fair_lloyd",), "both": ("lloyd", "fair_lloyd")}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InvalidArgumentError(message)


def parse_k(text):
    """``"5"`` -> [5]; ``"4..16"`` -> [4, ..., 16]."""
    try:
        if ".." in text:
            lo, hi = (int(x) for x in text.split("..", 1))
        else:
            lo = hi = int(text)
    except ValueError as exc:
        raise InvalidArgumentError(f"cannot parse k {text!r}; use 5 or 4..16") from exc
    if lo < 1 or hi < lo:
        raise InvalidArgumentError(f"empty or invalid k range {text!r}")
    return list(range(lo, hi + 1))


def _jsonable(x):
    if isinstance(x, float) and not math.isfinite(x):
        return "inf" if x > 0 else ("-inf" if x < 0 else "nan")
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def load_schema():
    text = resources.files("fairlloyd").joinpath("schemas/report.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


def validate_report(report):
    jsonschema.validate(report, load_schema())


def _result_entry(k, algo, res, dataset, plan, baseline):
    met = metrics_report(res, dataset, baseline)
    return {
        "k": k,
        "algorithm": algo,
        "objective": res.objective,
        "iterations_run": res.iterations_run,
        "converged": res.converged,
        "restart": res.restart,
        "objective_trace": list(res.objective_trace),
        "centers": res.centers.tolist(),
        "preprocess_plan": json.loads(plan.to_json()),
        "metrics": met.to_dict(),
        "fair_report": None if res.fair_report is None else res.fair_report.to_dict(),
    }


def run(args):
    ks = parse_k(args.k)
    algos = ALGOS[args.algo]
    parse_pipeline(args.preprocess)  # fail early on a bad pipeline
    categorical = [c for c in (args.categorical or "").split(",") if c]
    raw = ingest_csv(args.input, args.group_col, categorical)
    solver = SolverConfig(mode=args.solver)
    report = {
        "schema_version": SCHEMA_VERSION,
        "run": {
            "input": Path(args.input).name,
            "group_col": args.group_col,
            "categorical": categorical,
            "k_values": ks,
            "algorithms": list(algos),
            "init": INIT_ALIASES[args.init],
            "restarts": args.restarts,
            "iterations": args.iters,
            "seed": args.seed,
            "preprocess": args.preprocess,
            "solver": args.solver,
        },
        "dataset": {
            "n": raw.n, "d": raw.d, "m": raw.m,
            "group_labels": list(raw.group_labels),
            "group_sizes": raw.group_sizes.tolist(),
            "feature_names": list(raw.feature_names),
            "rejected_lines": list(raw.meta.get("rejected_lines", [])),
        },
        "results": [],
    }
    timing = []
    for k in ks:
        plan = fit_pipeline(args.preprocess, raw, k)
        ds = plan.apply(raw)
        cfg = ClusteringConfig(k=k, max_outer_iterations=args.iters, restarts=args.restarts,
                               seed=args.seed, init=INIT_ALIASES[args.init], threads=args.threads)
        baseline = None
        for algo in algos:
            if algo == "lloyd":
                res = lloyd(ds, cfg)
                baseline = res
            else:
                res = fair_lloyd(ds, cfg, solver)
            report["results"].append(
                _result_entry(k, algo, res, ds, plan, baseline if algo == "fair_lloyd" else None))
            timing.append({"k": k, "algorithm": algo, "wall_time_s": round(res.wall_time, 3)})
    report = _jsonable(report)
    validate_report(report)
    _write_json(args.out_report, report)
    if args.out_plotdata:
        _write_plotdata(report, raw.group_labels, Path(args.out_plotdata), args.out_ratio)
    if args.out_timing:
        _write_json(args.out_timing, {"schema_version": SCHEMA_VERSION, "timings": timing})
    return 0


def _write_json(path, doc):
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _write_plotdata(report, labels, path, ratio_path=None):
    ratio_path = Path(ratio_path) if ratio_path else path.with_name(path.stem + ".ratio.csv")
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "algorithm", "group", "avg_cost"])
        for r in report["results"]:
            for lab, cost in zip(labels, r["metrics"]["per_group_cost"]):
                w.writerow([r["k"], r["algorithm"], lab, repr(cost)])
    with ratio_path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "algorithm", "max_cost_ratio"])
        for r in report["results"]:
            ratio = r["metrics"]["max_cost_ratio"]
            w.writerow([r["k"], r["algorithm"], ratio if isinstance(ratio, str) else repr(ratio)])


def gen(args):
    sizes = tuple(int(x) for x in args.n_per_group.split(","))
    params = SyntheticParams(n_per_group=sizes, blobs=args.blobs, d=args.d, seed=args.seed,
                             shift=args.shift, spread=args.spread, symmetric=args.symmetric)
    write_synthetic(params, args.out, args.group_col)
    return 0


def bench(args):
    from .bench import run_benchmark

    _write_json(args.out, _jsonable(run_benchmark(args.n, args.d, args.k, args.repeat, args.seed)))
    return 0


def build_parser():
    p = _Parser(prog="fairlloyd", description="Socially fair k-means (Fair-Lloyd) and Lloyd.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="cluster a CSV and write reports")
    r.add_argument("--input", required=True)
    r.add_argument("--group-col", required=True)
    r.add_argument("--categorical", default="", help="comma-separated columns to one-hot encode")
    r.add_argument("--k", required=True, help="single k or a range a..b")
    r.add_argument("--algo", choices=sorted(ALGOS), default="both")
    r.add_argument("--init", choices=sorted(INIT_ALIASES), default="random")
    r.add_argument("--restarts", type=int, default=200)
    r.add_argument("--iters", type=int, default=200)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--preprocess", default="zscore,pca:k")
    r.add_argument("--solver", choices=MODES, default="auto")
    r.add_argument("--threads", type=int, default=1)
    r.add_argument("--out-report", default="-")
    r.add_argument("--out-plotdata", default=None)
    r.add_argument("--out-ratio", default=None, help="defaults to <plotdata stem>.ratio.csv")
    r.add_argument("--out-timing", default=None, help="wall times, kept out of the report")
    r.set_defaults(func=run)

    g = sub.add_parser("gen-synthetic", help="write a group-skewed synthetic CSV")
    g.add_argument("--out", required=True)
    g.add_argument("--n-per-group", default="1400,600")
    g.add_argument("--blobs", type=int, default=2)
    g.add_argument("--d", type=int, default=2)
    g.add_argument("--shift", type=float, default=2.5)
    g.add_argument("--spread", type=float, default=1.1)
    g.add_argument("--symmetric", action="store_true")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--group-col", default="group")
    g.set_defaults(func=gen)

    b = sub.add_parser("bench", help="time kernels and iterations")
    b.add_argument("--n", type=int, default=10_000)
    b.add_argument("--d", type=int, default=10)
    b.add_argument("--k", type=int, default=10)
    b.add_argument("--repeat", type=int, default=5)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out", default="-")
    b.set_defaults(func=bench)
    return p


def _fail(kind, exc, code):
    sys.stderr.write(json.dumps({"error": kind, "type": type(exc).__name__, "message": str(exc)}) + "\n")
    return code


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except (FairLloydError, OSError) as exc:
        return _fail("input", exc, 1)
    except Exception as exc:  # noqa: BLE001 - reported as an internal error
        return _fail("internal", exc, 2)


if __name__ == "__main__":
    sys.exit(main())
