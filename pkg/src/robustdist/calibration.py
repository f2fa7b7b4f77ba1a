"""Monte Carlo calibration of the constants the theory leaves open.

* compression: (c1, c2) of the random-partition compression
* compressed tester: the multiplier C in alpha = C * sqrt(k/2^ell) * r,
  where r is the unconstrained testing rate on alphabet 2^ell with n/N users
  and budget N*gamma
* thresholds: null quantiles of the S statistic (cached in ``testing``)
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .bounds import rate_it
from .channels import UNCONSTRAINED, channel_info_matrix, compression_map, krr_channel, trace_norm
from .distributions import PaninskiIndex, paninski_dist, sample_values, uniform
from .rng import derive_int, derive_rng
from .testing import (
    DEFAULT_COMPRESSION,
    CompressionConstants,
    TesterConfig,
    compressed_identity_test,
    null_quantile,
    threshold_for,
)


# `robustdist calibrate compressed` (k=60, ell=2, n=60000, 300 trials, seed 1):
# power 0.877 at C=1.0 and 0.953 at C=1.25; rounded up to 1.5 for margin.
COMPRESSED_POWER_C = 1.5


@dataclass
class CompressionCalibration:
    k: int
    ell: int
    alpha: float
    c1: float
    seeds: int
    fraction: float  # share of partitions meeting the c1 target
    ratios: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("ratios")
        return d


def compressed_tv(parts: np.ndarray, p: np.ndarray, q: np.ndarray, bins: int) -> float:
    return 0.5 * float(np.abs(np.bincount(parts, weights=p - q, minlength=bins)).sum())


def calibrate_compression(k: int = 30, ell: int = 2, alpha: float = 0.3, c1: float = 0.5, seeds: int = 2000, master_seed: int = 0) -> CompressionCalibration:
    """Fraction of random partitions whose compressed TV reaches c1*alpha*sqrt(2^ell/k)
    for a Paninski-versus-uniform pair at TV distance alpha."""
    q = uniform(k).probs
    p = paninski_dist(PaninskiIndex.random(k, alpha, derive_rng(master_seed, "pair"))).probs
    bins = 2**ell
    ratios = []
    for s in range(seeds):
        parts = compression_map(k, ell, derive_rng(master_seed, "partition", s))
        ratios.append(compressed_tv(parts, p, q, bins) / (alpha * math.sqrt(bins / k)))
    fraction = float(np.mean(np.asarray(ratios) >= c1 - 1e-12))
    return CompressionCalibration(k, ell, alpha, c1, seeds, fraction, ratios)


def adjusted_distance(k: int, ell: int, n: int, gamma: float, C: float, constants: CompressionConstants = DEFAULT_COMPRESSION) -> float:
    """C * sqrt(k/2^ell) * r(2^ell, n/N, N gamma), capped at 1/2."""
    N = constants.batches
    r = rate_it(2**ell, n // N, UNCONSTRAINED, min(1.0, N * gamma))[0]
    return min(0.5, C * math.sqrt(k / 2**ell) * r)


@dataclass
class PowerPoint:
    C: float
    alpha: float
    power: float
    stderr: float


def compressed_power(k: int, ell: int, n: int, alpha: float, trials: int, master_seed: int = 0, gamma: float = 0.0, constants: CompressionConstants = DEFAULT_COMPRESSION) -> float:
    """Share of trials in which the compressed tester rejects a fresh Paninski alternative against uniform."""
    cfg = TesterConfig(alpha=alpha, gamma=gamma)
    q = uniform(k)
    rejects = 0
    for t in range(trials):
        p = paninski_dist(PaninskiIndex.random(k, alpha, derive_rng(master_seed, "trial", t, "source")))
        x = sample_values(p.probs, n, derive_rng(master_seed, "trial", t, "sample"))
        v = compressed_identity_test(x, k, ell, q, cfg, derive_int(master_seed, "trial", t, "public"), constants)
        rejects += not v.accept
    return rejects / trials


def calibrate_compressed_constant(
    k: int = 60,
    ell: int = 2,
    n: int = 60_000,
    grid=(1.0, 1.5, 2.0, 2.5, 3.0, 4.0, 5.0, 6.0, 8.0),
    trials: int = 100,
    target: float = 0.9,
    master_seed: int = 1,
    constants: CompressionConstants = DEFAULT_COMPRESSION,
) -> tuple:
    """Smallest C on ``grid`` whose power estimate clears ``target`` (None if none does),
    plus the curve of evaluated points."""
    curve = []
    for C in grid:
        alpha = adjusted_distance(k, ell, n, 0.0, C, constants)
        pw = compressed_power(k, ell, n, alpha, trials, master_seed, constants=constants)
        curve.append(PowerPoint(C, alpha, pw, math.sqrt(pw * (1 - pw) / trials)))
        if pw >= target:
            return C, curve
    return None, curve


def threshold_table(k: int, n: int, cfg: TesterConfig) -> dict:
    """The pieces behind the calibrated threshold for one (k, n)."""
    q = null_quantile(k, n, 1 - cfg.beta, cfg.calibration_trials, cfg.calibration_seed)
    return {"k": k, "n": n, "null_quantile": q, "threshold": threshold_for(n, k, cfg), **cfg.to_dict()}


def krr_trace_ratio(k: int, epsilons) -> float:
    """max over epsilon of ||H(W)||_* / epsilon^2 for k-ary randomized response."""
    return max(trace_norm(channel_info_matrix(krr_channel(k, e))) / e**2 for e in epsilons)
