"""Hashing-estimator risk against n, with the rate overlay, as CSV.

    python scripts/learning_curve.py --k 64 --ell 3 --out curve.csv
"""

import argparse

import numpy as np

from robustdist.channels import ConstraintSpec
from robustdist.harness import AttackSpec, ExperimentConfig, concat_reports, emit_report, sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--k", type=int, default=64)
    ap.add_argument("--ell", type=int, default=3)
    ap.add_argument("--log2n", default="10,16", help="first,last exponent")
    ap.add_argument("--gammas", default="0,0.02,0.04,0.08")
    ap.add_argument("--trials", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=4)
    ap.add_argument("--out")
    args = ap.parse_args()

    lo, hi = (int(v) for v in args.log2n.split(","))
    template = ExperimentConfig(
        task="DL",
        k=args.k,
        n=2**lo,
        constraint=ConstraintSpec("bits", ell=args.ell),
        gammas=tuple(float(g) for g in args.gammas.split(",")),
        attack=AttackSpec("hash_flood"),
        trials=args.trials,
        master_seed=args.seed,
    )
    ns = [2**e for e in range(lo, hi + 1)]
    reports = sweep(template, "n", ns, workers=args.workers)
    text = emit_report(concat_reports(reports), "csv", args.out)
    if not args.out:
        print(text, end="")

    risks = [rep.value("tv_error", template.gammas[0]) for rep in reports]
    slope = np.polyfit(np.log(ns), np.log(risks), 1)[0]
    print(f"# log-log slope at gamma={template.gammas[0]}: {slope:.3f}")


if __name__ == "__main__":
    main()
