"""Re-run the calibrations behind the stored constants and print them as JSON.

Covers the compression constants (c1, c2), the compressed-tester multiplier C
and the krr trace-norm ratio. Compare the output with ``DEFAULT_COMPRESSION``
and ``COMPRESSED_POWER_C`` before changing either.
"""

import argparse
import json
from dataclasses import asdict

from robustdist.calibration import calibrate_compressed_constant, calibrate_compression, krr_trace_ratio
from robustdist.testing import DEFAULT_COMPRESSION


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=2000)
    ap.add_argument("--trials", type=int, default=300)
    args = ap.parse_args()

    comp = calibrate_compression(k=30, ell=2, alpha=0.3, c1=DEFAULT_COMPRESSION.c1, seeds=args.seeds, master_seed=0)
    C, curve = calibrate_compressed_constant(grid=(1.0, 1.25, 1.5, 2.0, 3.0), trials=args.trials, master_seed=1)
    out = {
        "compression": comp.to_dict(),
        "stored": asdict(DEFAULT_COMPRESSION),
        "c2_holds": comp.fraction >= DEFAULT_COMPRESSION.c2,
        "compressed_C": C,
        "compressed_curve": [asdict(p) for p in curve],
        "krr_trace_norm_over_eps2": {k: krr_trace_ratio(k, [0.05, 0.1, 0.25, 0.5, 1.0]) for k in (4, 10, 30)},
    }
    print(json.dumps(out, indent=2))


if __name__ == "__main__":
    main()
