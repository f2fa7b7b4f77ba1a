"""Command-line entry point: ``robustdist {learn,test,bounds,emd,calibrate}``.

Exit codes: 0 success, 2 config validation failure, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import asdict, replace

from .. import bounds, calibration
from ..channels import ConstraintSpec
from ..emd import SupportCapExceeded, paninski_uniform_emd
from ..testing import TesterConfig
from .config import ConfigError, ExperimentConfig, load_config
from .engine import run_learning_experiment, run_testing_experiment
from .report import emit_report

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


def _floats(text: str) -> list:
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text: str) -> list:
    return [int(v) for v in text.split(",") if v.strip()]


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON or YAML file matching the ExperimentConfig schema")
    p.add_argument("--seed", type=int, help="override master_seed")
    p.add_argument("--trials", type=int, help="override the trial count")
    p.add_argument("--out", help="output path (stdout if omitted)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--workers", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="robustdist", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    for name, text in (("learn", "run a learning (DL) experiment"), ("test", "run an identity/uniformity testing experiment")):
        p = sub.add_parser(name, help=text)
        _common(p)

    p = sub.add_parser("bounds", help="evaluate reference rate curves to CSV")
    _common(p)
    p.add_argument("--task", choices=bounds.TASKS)
    p.add_argument("--k", default="10,100,1000")
    p.add_argument("--n", default="1000,10000,100000")
    p.add_argument("--constraint", default=None, help="none | bits:<ell> | ldp:<eps>")
    p.add_argument("--gammas", default=None)

    p = sub.add_parser("emd", help="exact EMD between the Paninski mixture and uniform on a small instance")
    _common(p)
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--alpha", type=float, default=0.2)

    p = sub.add_parser("calibrate", help="calibrate tester thresholds and compression constants")
    _common(p)
    p.add_argument("what", choices=("compression", "compressed", "threshold"))
    p.add_argument("--k", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--ell", type=int, default=2)
    p.add_argument("--alpha", type=float, default=0.3)
    p.add_argument("--c1", type=float, default=0.5)
    return parser


def _experiment_config(args, task_family) -> ExperimentConfig:
    if not args.config:
        raise ConfigError("--config is required")
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, master_seed=args.seed)
    if args.trials is not None:
        cfg = replace(cfg, trials=args.trials)
    cfg = cfg.with_tester()
    problems = cfg.problems()
    if cfg.task not in task_family:
        problems.insert(0, f"config task {cfg.task!r} does not match this subcommand")
    if problems:
        raise ConfigError(problems)
    return cfg


def _write(text: str, out) -> None:
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_experiment(args, task_family, runner) -> None:
    cfg = _experiment_config(args, task_family)
    report = runner(cfg, workers=args.workers)
    text = emit_report(report, args.format, args.out)
    if not args.out:
        sys.stdout.write(text)
    print(f"{len(report.rows)} rows, config {report.config_hash}, {report.wall_clock:.2f}s", file=sys.stderr)


def _cmd_bounds(args) -> None:
    if args.config:
        cfg = load_config(args.config)
        tasks, ks, ns, constraint, gammas = [cfg.task], [cfg.k], [cfg.n], cfg.constraint, list(cfg.gammas)
    else:
        tasks, ks, ns, constraint, gammas = list(bounds.TASKS), _ints(args.k), _ints(args.n), ConstraintSpec(), [0.0]
    if args.task:
        tasks = [args.task]
    if args.constraint:
        try:
            constraint = ConstraintSpec.parse(args.constraint)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    if args.gammas:
        gammas = _floats(args.gammas)
    rows = []
    for task in tasks:
        up = bounds.RateCurve.evaluate(task, "upper", ks, ns, constraint, gammas)
        lo = bounds.RateCurve.evaluate(task, "lower", ks, ns, constraint, gammas)
        for (point, u), (_, l) in zip(up.points, lo.points):
            rows.append({"task": task, "k": point["k"], "n": point["n"], "ell": constraint.ell, "epsilon": constraint.epsilon, "gamma": point["gamma"], "bound_upper": u, "bound_lower": l})
    if args.format == "json":
        text = json.dumps({"label": "rates up to constants (all set to 1)", "rows": rows}, indent=2, sort_keys=True) + "\n"
    else:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]) if rows else ["task"], lineterminator="\n")
        writer.writeheader()
        for r in rows:
            writer.writerow({k: "" if v is None else v for k, v in r.items()})
        text = buf.getvalue()
    _write(text, args.out)


def _cmd_emd(args) -> None:
    try:
        exact = paninski_uniform_emd(args.n, args.k, args.alpha)
    except SupportCapExceeded as exc:
        raise ConfigError(str(exc)) from exc
    bound = bounds.emd_bound_paninski(args.n, args.k, args.alpha)
    result = {"k": args.k, "n": args.n, "alpha": args.alpha, "exact_emd": exact, "emd_bound_paninski": bound, "ratio": exact / bound if bound else None}
    _write(json.dumps(result, indent=2, sort_keys=True) + "\n", args.out)


def _cmd_calibrate(args) -> None:
    seed = args.seed if args.seed is not None else 0
    if args.what == "compression":
        res = calibration.calibrate_compression(args.k or 30, args.ell, args.alpha, args.c1, args.trials or 2000, seed)
        out = res.to_dict()
    elif args.what == "compressed":
        C, curve = calibration.calibrate_compressed_constant(args.k or 60, args.ell, args.n or 60_000, trials=args.trials or 300, master_seed=seed)
        out = {"C": C, "curve": [asdict(p) for p in curve]}
    else:
        if args.k is None or args.n is None:
            raise ConfigError("calibrate threshold needs --k and --n")
        cfg = TesterConfig(alpha=args.alpha, calibration_trials=args.trials or 2000, calibration_seed=seed)
        out = calibration.threshold_table(args.k, args.n, cfg)
    _write(json.dumps(out, indent=2, sort_keys=True) + "\n", args.out)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "learn":
            _cmd_experiment(args, ("DL",), run_learning_experiment)
        elif args.command == "test":
            _cmd_experiment(args, ("IT", "UT"), run_testing_experiment)
        elif args.command == "bounds":
            _cmd_bounds(args)
        elif args.command == "emd":
            _cmd_emd(args)
        else:
            _cmd_calibrate(args)
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - surfaced as an exit code
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
