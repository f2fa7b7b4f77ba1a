"""No-rate of the robust uniformity tester over a grid of alpha, per gamma.

    python scripts/power_curve.py --k 100 --n 10000 --gammas 0,0.005
"""

import argparse

import numpy as np

from robustdist import bounds
from robustdist.channels import ConstraintSpec
from robustdist.harness import AttackSpec, ExperimentConfig, SourceSpec, sweep
from robustdist.testing import TesterConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--k", type=int, default=100)
    ap.add_argument("--n", type=int, default=10_000)
    ap.add_argument("--gammas", default="0,0.005")
    ap.add_argument("--points", type=int, default=12)
    ap.add_argument("--trials", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=4)
    args = ap.parse_args()

    print("gamma,alpha,rate,no_rate_alt,stderr,yes_rate_null")
    for gamma in (float(g) for g in args.gammas.split(",")):
        r = bounds.rate_it(args.k, args.n, ConstraintSpec(), gamma)[0]
        alphas = np.geomspace(r / 4, min(0.5, 4 * r), args.points)
        template = ExperimentConfig(
            task="UT",
            k=args.k,
            n=args.n,
            gammas=(gamma,),
            source=SourceSpec("paninski", alpha=r),
            attack=AttackSpec("flatten"),
            null_attack=AttackSpec("spike", {"target": 0}),
            tester=TesterConfig(alpha=r),
            trials=args.trials,
            master_seed=args.seed,
        )
        for a, rep in zip(alphas, sweep(template, "alpha", alphas, workers=args.workers)):
            (no,) = rep.metric("no_rate_alt")
            print(f"{gamma},{a:.6g},{r:.6g},{no.value},{no.stderr:.4g},{rep.value('yes_rate_null', gamma)}")


if __name__ == "__main__":
    main()
