"""Command-line experiment runner.

``tailsim run`` simulates one configuration and writes its tail CDF,
``tailsim compare`` overlays the exact CDF where one is known, and
``tailsim report`` tabulates every method over a range of seeds.

Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error,
3 tolerance exceeded.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import fields, replace
from typing import Sequence

import numpy as np

from .errors import TailSimError
from .estimator import sup_distance
from .experiments import METHODS, REGIONS, TARGETS, Experiment, method_report, run_experiment
from .oracles import conditional_oracle, exact_cdf_for, exact_tail_mass

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, EXIT_TOLERANCE = 0, 1, 2, 3

EXPERIMENT_KEYS = {f.name for f in fields(Experiment)}
OPTION_DEFAULTS = {"tol": 0.07, "out": None, "jobs": 1, "scale": "conditional", "seeds": 10, "methods": list(METHODS)}


class UsageError(Exception):
    pass


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def _add_common(p: argparse.ArgumentParser) -> None:
    # defaults stay None so that config-file values can sit underneath the flags
    p.add_argument("--config", help="JSON file with any of the options below; flags override it")
    p.add_argument("--target", choices=TARGETS)
    p.add_argument("--n", type=int, help="number of variables (sum/product targets)")
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--tail", choices=("left", "right"))
    p.add_argument("--epsilon", type=float, help="tail depth")
    p.add_argument("--samples", type=int, help="draws per run")
    p.add_argument("--seed", type=int)
    p.add_argument("--method", choices=METHODS)
    p.add_argument("--region", choices=REGIONS, help="simulation region for --method reduced")
    p.add_argument("--resolution", type=int, help="quadrature nodes per stage for equal-scores")
    p.add_argument("--tol", type=float, help="sup-distance tolerance for compare")
    p.add_argument("--out", help="output CSV path (default: standard output)")
    p.add_argument("--jobs", type=int, help="worker processes")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tailsim", description="Tail simulation of monotone functions.")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="simulate one configuration and write z,cdf,weight")
    _add_common(run)
    compare = sub.add_parser("compare", help="compare the simulated tail CDF with the exact one")
    _add_common(compare)
    compare.add_argument("--scale", choices=("conditional", "absolute"))
    report = sub.add_parser("report", help="tabulate all methods over several seeds")
    _add_common(report)
    report.add_argument("--seeds", type=int, help="replications per method")
    report.add_argument("--methods", help="comma-separated subset of methods")
    return parser


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError("config must be a JSON object")
    data = {k.replace("-", "_"): v for k, v in data.items()}
    unknown = set(data) - EXPERIMENT_KEYS - set(OPTION_DEFAULTS)
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    return data


def resolve(args: argparse.Namespace) -> tuple[Experiment, dict]:
    """Merge defaults, config file and flags into an experiment plus runner options."""
    settings = {**OPTION_DEFAULTS, **_load_config(args.config)}
    for key, value in vars(args).items():
        if value is not None and key not in ("config", "command"):
            settings[key] = value
    if isinstance(settings["methods"], str):
        settings["methods"] = [m.strip() for m in settings["methods"].split(",") if m.strip()]
    if "epsilon" not in settings:
        raise UsageError("--epsilon is required")
    try:
        exp = Experiment(**{k: v for k, v in settings.items() if k in EXPERIMENT_KEYS})
        exp = replace(
            exp, n=int(exp.n), samples=int(exp.samples), seed=int(exp.seed), resolution=int(exp.resolution),
            epsilon=float(exp.epsilon), alpha=float(exp.alpha), beta=float(exp.beta),
        )
        exp.validate()
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from exc
    opts = {k: settings[k] for k in OPTION_DEFAULTS}
    if int(opts["jobs"]) < 1 or int(opts["seeds"]) < 1:
        raise UsageError("--jobs and --seeds must be at least 1")
    bad = [m for m in opts["methods"] if m not in METHODS]
    if bad:
        raise UsageError(f"unknown methods {bad}; expected a subset of {METHODS}")
    return exp, opts


def _write_csv(path: str | None, header: str, rows: list[Sequence[float]]) -> None:
    text = header + "\n" + "".join(",".join(_fmt(v) for v in row) + "\n" for row in rows)
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _info(opts: dict):
    # keep standard output clean for the CSV when no --out is given
    return sys.stdout if opts["out"] is not None else sys.stderr


def cmd_run(exp: Experiment, opts: dict) -> int:
    res = run_experiment(exp, jobs=int(opts["jobs"]))
    cdf = res.tail_cdf()
    _write_csv(opts["out"], "z,cdf,weight", list(zip(cdf.z, cdf.cdf, cdf.weights)))
    vol = res.stats.volume_rejection
    out = _info(opts)
    print(f"target={exp.target} tail={exp.tail} epsilon={exp.epsilon:g} method={exp.method}", file=out)
    print(f"samples={res.stats.m_total} accepted={res.stats.m_accepted}", file=out)
    print(f"tail_mass={cdf.tail_mass:.6g} stderr={cdf.stderr:.3g} effective_size={cdf.effective_size:.1f}", file=out)
    print(f"count_rejection={res.stats.count_rejection:.6g} volume_rejection={vol if vol is None else f'{vol:.6g}'}",
          file=out)
    print(f"runtime_s={res.seconds:.3f}", file=out)
    return EXIT_OK


def cmd_compare(exp: Experiment, opts: dict) -> int:
    f, model, spec = exp.problem()
    exact = exact_cdf_for(f, model)
    mass = exact_tail_mass(f, model, spec)
    if exact is None or mass is None:
        print(f"error: no exact CDF registered for {exp.target} with this tail", file=sys.stderr)
        return EXIT_USAGE
    cdf = run_experiment(exp, jobs=int(opts["jobs"])).tail_cdf()
    if opts["scale"] == "conditional":
        cdf = cdf.conditional()
        exact = conditional_oracle(exact, spec, mass)
    ref = np.asarray(exact(cdf.z), dtype=float)
    err = np.abs(cdf.cdf - ref)
    _write_csv(opts["out"], "z,cdf_sim,cdf_exact,abs_err", list(zip(cdf.z, cdf.cdf, ref, err)))
    dist = sup_distance(cdf, exact)
    print(f"sup_distance={_fmt(dist)}", file=_info(opts))
    return EXIT_OK if dist <= float(opts["tol"]) else EXIT_TOLERANCE


def format_report(rows, exp: Experiment) -> str:
    head = f"{'method':<14}{'tail samples':>14}{'share':>9}{'min..max':>14}{'tail_mass +- se':>26}{'count_rej':>11}{'wall_s':>9}"
    lines = [f"# target={exp.target} tail={exp.tail} epsilon={exp.epsilon:g} samples={exp.samples}", head]
    for r in rows:
        if r.note:
            lines.append(f"{r.method:<14}  unavailable: {r.note}")
            continue
        share = r.mean_tail_samples / r.samples
        span = f"{min(r.tail_samples)}..{max(r.tail_samples)}"
        mass = f"{r.tail_mass:.4e} +- {r.tail_mass_se:.2e}"
        lines.append(
            f"{r.method:<14}{r.mean_tail_samples:>14.1f}{share:>9.1%}{span:>14}{mass:>26}"
            f"{r.count_rejection:>11.4f}{r.seconds:>9.3f}"
        )
    return "\n".join(lines) + "\n"


def cmd_report(exp: Experiment, opts: dict) -> int:
    rows = method_report(exp, opts["methods"], int(opts["seeds"]), jobs=int(opts["jobs"]))
    sys.stdout.write(format_report(rows, exp))
    if opts["out"] is not None:
        # wall time is left out so the file is reproducible
        with open(opts["out"], "w", encoding="utf-8", newline="") as fh:
            fh.write("method,runs,mean_tail_samples,min_tail_samples,max_tail_samples,tail_mass,tail_mass_se,count_rejection\n")
            for r in rows:
                lo = min(r.tail_samples) if r.tail_samples else math.nan
                hi = max(r.tail_samples) if r.tail_samples else math.nan
                vals = [r.runs, r.mean_tail_samples, lo, hi, r.tail_mass, r.tail_mass_se, r.count_rejection]
                fh.write(r.method + "," + ",".join(_fmt(float(v)) for v in vals) + "\n")
    return EXIT_OK


COMMANDS = {"run": cmd_run, "compare": cmd_compare, "report": cmd_report}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        exp, opts = resolve(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](exp, opts)
    except (TailSimError, ArithmeticError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
