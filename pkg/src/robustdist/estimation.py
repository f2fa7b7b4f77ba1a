"""Distribution learners: the empirical histogram and the random-hashing estimator."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .distributions import DimensionError, Distribution, simplex_project, tv_distance


@dataclass(frozen=True, eq=False)
class EstimateReport:
    raw: np.ndarray
    projected: Distribution
    tv_to_truth: Optional[float] = None

    def __post_init__(self):
        raw = np.asarray(self.raw, dtype=float)
        if not np.all(np.isfinite(raw)):
            raise ValueError("estimate has non-finite entries")
        raw.flags.writeable = False
        object.__setattr__(self, "raw", raw)

    def against(self, truth) -> "EstimateReport":
        return EstimateReport(self.raw, self.projected, tv_distance(self.projected, truth))

    def raw_tv(self, truth) -> float:
        """Half the l1 distance of the signed estimate to ``truth``."""
        return 0.5 * float(np.abs(self.raw - np.asarray(truth, dtype=float)).sum())

    def to_dict(self, include_raw: bool = False) -> dict:
        d = {"projected": self.projected.probs.tolist(), "tv_to_truth": self.tv_to_truth}
        if include_raw:
            d["raw"] = self.raw.tolist()
        return d


def empirical_estimator(z, k: int) -> EstimateReport:
    z = np.asarray(z, dtype=np.int64)
    if z.size == 0:
        raise ValueError("no samples")
    if z.min() < 0 or z.max() >= k:
        raise ValueError(f"samples outside [0, {k})")
    raw = np.bincount(z, minlength=k) / z.size
    return EstimateReport(raw, Distribution(raw))


def hash_match_counts(z, table: np.ndarray) -> np.ndarray:
    """sum_i T_{h_i}(x, z_i) for every x, as exact integers."""
    return (table == np.asarray(z)[:, None]).sum(axis=0, dtype=np.int64)


def hashing_estimator(z, hashes, ell: int, k: Optional[int] = None) -> EstimateReport:
    """Unbiased estimate from hashed messages z_i = h_i(X_i) (possibly manipulated):

        raw = 2^ell / (n (2^ell - 1)) * (sum_i T_{h_i}(., z_i) - n / 2^ell)

    ``hashes`` is an (n, k) bin table or a sequence of HashFunction objects.
    """
    if ell < 1:
        raise ValueError("ell must be >= 1 (the normaliser 2^ell - 1 vanishes at ell = 0)")
    z = np.asarray(z, dtype=np.int64)
    table = hashes if isinstance(hashes, np.ndarray) else np.stack([h.table for h in hashes])
    if table.shape[0] != z.size:
        raise DimensionError(f"{table.shape[0]} hash functions for {z.size} messages")
    if k is not None and table.shape[1] != k:
        raise DimensionError(f"hash tables cover {table.shape[1]} symbols, expected {k}")
    if z.size and (z.min() < 0 or z.max() >= 2**ell):
        raise ValueError(f"messages outside [0, 2^{ell})")
    n, b = z.size, 2**ell
    counts = hash_match_counts(z, table)
    raw = b / (n * (b - 1)) * (counts - n / b)
    return EstimateReport(raw, simplex_project(raw))
