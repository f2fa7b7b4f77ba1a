"""Robust uniformity and identity testers built on the empirical-TV statistic."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy.stats import binom

from .channels import compression_map
from .distributions import Distribution, DistLike, _probs, as_distribution
from .rng import as_rng, derive_rng

MODES = ("calibrated", "analytic")


@dataclass(frozen=True)
class TesterConfig:
    """Tester parameters.

    ``c2`` scales the analytic threshold c2 * alpha^2 * min(n^2/k^2, sqrt(n/k), 1/alpha);
    ``beta`` is the allowed null failure probability, which sets the null
    quantile in calibrated mode.
    """

    __test__ = False

    alpha: float
    gamma: float = 0.0
    c2: float = 0.05
    beta: float = 0.05
    calibration_trials: int = 2000
    calibration_seed: int = 0
    mode: str = "calibrated"

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
        if not 0 <= self.gamma <= 1:
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma}")
        if not self.c2 > 0:
            raise ValueError("c2 must be positive")
        if not 0 < self.beta < 1:
            raise ValueError("beta must lie in (0, 1)")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TesterConfig":
        return cls(**d)


@dataclass(frozen=True)
class TestVerdict:
    accept: bool
    statistic: float
    mu: float
    threshold: float
    details: dict = field(default_factory=dict, compare=False)

    __test__ = False  # not a pytest class

    @property
    def answer(self) -> str:
        return "yes" if self.accept else "no"

    def to_dict(self) -> dict:
        d = {"answer": self.answer, "statistic": self.statistic, "mu": self.mu, "threshold": self.threshold}
        if self.details:
            d["details"] = self.details
        return d


# --- statistic -------------------------------------------------------------


def s_from_counts(counts, n: int) -> float:
    """(1/2) sum_x |M_x/n - 1/k|, evaluated as an integer sum over 2nk."""
    counts = np.asarray(counts, dtype=np.int64)
    k = counts.size
    return float(np.abs(k * counts - n).sum()) / (2.0 * n * k)


def s_statistic(z, k: int) -> float:
    z = np.asarray(z, dtype=np.int64)
    if z.size == 0:
        raise ValueError("need at least one sample")
    return s_from_counts(np.bincount(z, minlength=k), z.size)


@lru_cache(maxsize=4096)
def mean_s_uniform(k: int, n: int) -> float:
    """E[S] under n uniform samples on [k]: (k/2) E|B/n - 1/k|, B ~ Bin(n, 1/k)."""
    if k < 1 or n < 1:
        raise ValueError("k and n must be >= 1")
    if k == 1:
        return 0.0
    b = np.arange(n + 1)
    pmf = np.exp(binom.logpmf(b, n, 1.0 / k))
    return float(0.5 * k * np.sum(pmf * np.abs(b / n - 1.0 / k)))


def analytic_threshold(alpha: float, n: int, k: int, c2: float) -> float:
    return c2 * alpha**2 * min(n**2 / k**2, math.sqrt(n / k), 1.0 / alpha)


def perturbation_slack(gamma: float, n: int, k: int) -> float:
    """Largest shift of S that gamma*n rewritten samples can cause."""
    return min(gamma, n * gamma / k)


@lru_cache(maxsize=1024)
def null_quantile(k: int, n: int, level: float, trials: int, seed: int) -> float:
    """``level``-quantile of S - mu(u[k]) over uniform transcripts of size n."""
    rng = derive_rng(seed, "null-quantile", k, n)
    counts = rng.multinomial(n, np.full(k, 1.0 / k), size=trials)
    s = np.abs(k * counts - n).sum(axis=1) / (2.0 * n * k)
    return float(np.quantile(s, level, method="higher")) - mean_s_uniform(k, n)


def threshold_for(n: int, k: int, cfg: TesterConfig) -> float:
    base = analytic_threshold(cfg.alpha, n, k, cfg.c2)
    if cfg.mode == "analytic":
        return base
    calibrated = null_quantile(k, n, 1.0 - cfg.beta, cfg.calibration_trials, cfg.calibration_seed)
    return max(base, calibrated + perturbation_slack(cfg.gamma, n, k))


def uniformity_test(z, k: int, cfg: TesterConfig) -> TestVerdict:
    z = np.asarray(z, dtype=np.int64)
    n = z.size
    stat = s_statistic(z, k)
    mu = mean_s_uniform(k, n)
    thr = threshold_for(n, k, cfg)
    return TestVerdict(stat - mu <= thr, stat, mu, thr)


# --- identity -> uniformity ---------------------------------------------------


@dataclass(frozen=True, eq=False)
class GoldreichMap:
    """Randomised map [k] -> [6k] sending q to the uniform law on [6k]."""

    q: Distribution
    matrix: np.ndarray  # (k, 6k), includes the uniform-mixing step
    buckets: tuple  # bucket index arrays S_i
    leftover: np.ndarray  # L

    @property
    def k(self) -> int:
        return self.q.k

    def push(self, p: DistLike) -> np.ndarray:
        return _probs(p) @ self.matrix

    def apply(self, z, seed=None) -> np.ndarray:
        z = np.asarray(z, dtype=np.int64)
        cdf = np.cumsum(self.matrix, axis=1)
        u = as_rng(seed).random(z.size)
        # row-wise searchsorted
        out = (u[:, None] >= cdf[z]).sum(axis=1)
        return np.minimum(out, 6 * self.k - 1)


def goldreich_map(q: DistLike) -> GoldreichMap:
    """Mix with uniform, then grain onto 6k buckets.

    q' = (q + u)/2 so q'(i) >= 1/(2k). Symbol i owns m_i = floor(6k q'(i)) >= 3
    private buckets; it lands on one of them w.p. m_i / (6k q'(i)) >= 2/3 and
    otherwise on a uniform leftover bucket. Under q every bucket gets 1/(6k);
    mixing halves TV and private routing keeps >= 2/3 of the rest, so TV to
    uniform on [6k] is at least tv(p, q)/3.
    """
    q = as_distribution(q)
    k = q.k
    big = 6 * k
    qm = 0.5 * (q.probs + 1.0 / k)
    # the slack only matters when 6k q'(i) is an integer up to round-off
    m = np.floor(big * qm + 1e-9).astype(np.int64)
    starts = np.concatenate([[0], np.cumsum(m)])
    buckets = tuple(np.arange(starts[i], starts[i + 1]) for i in range(k))
    leftover = np.arange(starts[-1], big)
    graining = np.zeros((k, big))
    for i in range(k):
        private = min(1.0, m[i] / (big * qm[i]))
        graining[i, buckets[i]] = private / m[i]
        if leftover.size:
            graining[i, leftover] = (1.0 - private) / leftover.size
    mixing = 0.5 * np.eye(k) + 0.5 / k
    matrix = mixing @ graining
    matrix /= matrix.sum(axis=1, keepdims=True)
    return GoldreichMap(q, matrix, buckets, leftover)


def identity_test(z, q: DistLike, cfg: TesterConfig, seed=None) -> TestVerdict:
    q = as_distribution(q)
    gm = goldreich_map(q)
    mapped = gm.apply(z, seed)
    inner = replace(cfg, alpha=cfg.alpha / 3)
    v = uniformity_test(mapped, 6 * q.k, inner)
    return replace(v, details={"reduced_alphabet": 6 * q.k, "reduced_alpha": inner.alpha})


def _is_uniform(p: np.ndarray) -> bool:
    return bool(np.abs(p - 1.0 / p.size).max() < 1e-12)


def identity_or_uniformity_test(z, q: DistLike, cfg: TesterConfig, seed=None) -> TestVerdict:
    """Skip the Goldreich reduction (and its factor-3 distance loss) when q is uniform."""
    q = as_distribution(q)
    if _is_uniform(q.probs):
        return uniformity_test(z, q.k, cfg)
    return identity_test(z, q, cfg, seed)


# --- ell-bit batched tester ------------------------------------------------


@dataclass(frozen=True)
class CompressionConstants:
    """Distance-preservation constants of the random-partition compression:
    with probability >= c2 over the partition, compressed TV >= c1 * alpha * sqrt(2^ell/k)."""

    c1: float
    c2: float

    @property
    def batches(self) -> int:
        return batch_count(self.c2)


# From `robustdist calibrate compression` (k=30, ell=2, alpha=0.3, 2000 partitions,
# Paninski-vs-uniform pair): 0.797 of partitions reach c1 = 0.5; c2 rounded down.
DEFAULT_COMPRESSION = CompressionConstants(c1=0.5, c2=0.75)


def batch_count(c2: float) -> int:
    """N = ceil(log_{1 - c2/2}(1/10))."""
    return math.ceil(math.log(0.1) / math.log(1.0 - c2 / 2.0) - 1e-12)


def batch_beta(c2: float, n_batches: int) -> float:
    return min(c2 / 2.0, 1.0 - 0.9 ** (1.0 / n_batches))


def split_batches(n: int, n_batches: int) -> list:
    """Contiguous index ranges whose sizes differ by at most one."""
    bounds = np.linspace(0, n, n_batches + 1).round().astype(np.int64)
    return [np.arange(bounds[j], bounds[j + 1]) for j in range(n_batches)]


@dataclass(frozen=True, eq=False)
class CompressedProtocol:
    """Public description of the batched compression: batch index ranges and
    one partition of [k] per batch (``None`` entries mean no compression)."""

    k: int
    ell: int
    batches: list
    partitions: list
    beta: float

    @property
    def n_batches(self) -> int:
        return len(self.batches)

    @property
    def alphabet(self) -> int:
        return self.k if self.partitions[0] is None else 2**self.ell


def compressed_protocol(n: int, k: int, ell: int, seed: int = 0, constants: CompressionConstants = DEFAULT_COMPRESSION, beta: float = 0.05) -> CompressedProtocol:
    if 2**ell >= k:
        return CompressedProtocol(k, ell, [np.arange(n)], [None], beta)
    n_batches = constants.batches
    if n_batches > n:
        raise ValueError(f"{n_batches} batches for {n} users")
    parts = [compression_map(k, ell, derive_rng(seed, "batch-partition", j)) for j in range(n_batches)]
    return CompressedProtocol(k, ell, split_batches(n, n_batches), parts, batch_beta(constants.c2, n_batches))


def compressed_messages(x, proto: CompressedProtocol) -> np.ndarray:
    """Y_i = phi(U_j, X_i) for the batch j holding user i."""
    x = np.asarray(x, dtype=np.int64)
    y = x.copy()
    for idx, parts in zip(proto.batches, proto.partitions):
        if parts is not None:
            y[idx] = parts[x[idx]]
    return y


def compressed_verdict(
    z,
    proto: CompressedProtocol,
    q: DistLike,
    cfg: TesterConfig,
    seed: int = 0,
    constants: CompressionConstants = DEFAULT_COMPRESSION,
) -> TestVerdict:
    """Server side: per-batch robust identity test, yes iff every batch says yes."""
    z = np.asarray(z, dtype=np.int64)
    q = as_distribution(q)
    _n, k, ell = z.size, proto.k, proto.ell
    if proto.partitions[0] is None:
        alpha_b = cfg.alpha
    else:
        alpha_b = min(1.0, constants.c1 * cfg.alpha * math.sqrt(2**ell / k))
    # the adversary may spend its whole budget gamma*n inside a single batch
    batch_cfg = replace(cfg, alpha=alpha_b, beta=proto.beta, gamma=min(1.0, cfg.gamma * proto.n_batches))
    accept = True
    per_batch = []
    for j, (idx, parts) in enumerate(zip(proto.batches, proto.partitions)):
        qc = q.probs if parts is None else np.bincount(parts, weights=q.probs, minlength=2**ell)
        v = identity_or_uniformity_test(z[idx], Distribution(qc / qc.sum()), batch_cfg, derive_rng(seed, "batch-goldreich", j))
        accept &= v.accept
        per_batch.append({"batch": j, "size": int(idx.size), **v.to_dict()})
    return TestVerdict(
        bool(accept),
        float(np.mean([b["statistic"] for b in per_batch])),
        float(np.mean([b["mu"] for b in per_batch])),
        float(np.mean([b["threshold"] for b in per_batch])),
        {"batches": per_batch, "n_batches": proto.n_batches, "beta": proto.beta, "batch_alpha": alpha_b},
    )


def compressed_identity_test(
    x,
    k: int,
    ell: int,
    q: DistLike,
    cfg: TesterConfig,
    seed: int = 0,
    constants: CompressionConstants = DEFAULT_COMPRESSION,
    attack=None,
) -> TestVerdict:
    """Batched ell-bit identity test run end to end on raw samples ``x``.

    Users are split into N = ceil(log_{1-c2/2}(1/10)) batches; batch j
    compresses with its own public partition U_j, and a robust identity tester
    runs on the 2^ell-ary messages at distance c1 * alpha * sqrt(2^ell/k) with
    per-batch failure probability min(c2/2, 1 - 0.9^(1/N)). When 2^ell >= k
    there is a single uncompressed batch. ``attack(y) -> z`` may manipulate
    the full message vector before the server sees it.
    """
    x = np.asarray(x, dtype=np.int64)
    proto = compressed_protocol(x.size, k, ell, seed, constants, cfg.beta)
    y = compressed_messages(x, proto)
    z = y if attack is None else np.asarray(attack(y))
    return compressed_verdict(z, proto, q, cfg, seed, constants)
