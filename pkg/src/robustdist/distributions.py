"""Discrete distributions over ``[k] = {0, ..., k-1}`` and basic divergences.

Symbols are 0-indexed throughout the package.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .rng import as_rng

PROB_TOL = 1e-9


class DimensionError(ValueError):
    pass


class SupportError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Distribution:
    probs: np.ndarray

    def __post_init__(self):
        p = np.array(self.probs, dtype=float).ravel()
        if p.size == 0:
            raise ValueError("empty distribution")
        if not np.all(np.isfinite(p)):
            raise ValueError("non-finite probability")
        if p.min() < 0:
            raise ValueError(f"negative probability {p.min()!r}")
        if abs(p.sum() - 1.0) > PROB_TOL:
            raise ValueError(f"probabilities sum to {p.sum()!r}, not 1")
        p.flags.writeable = False
        object.__setattr__(self, "probs", p)

    @property
    def k(self) -> int:
        return self.probs.size

    def __len__(self):
        return self.k

    def __array__(self, dtype=None, copy=None):
        return self.probs if dtype is None else self.probs.astype(dtype)

    def __eq__(self, other):
        if not isinstance(other, Distribution):
            return NotImplemented
        return self.k == other.k and bool(np.array_equal(self.probs, other.probs))

    def __hash__(self):
        return hash(self.probs.tobytes())

    def __repr__(self):
        return f"Distribution({np.array2string(self.probs, precision=4)})"


DistLike = Union[Distribution, Sequence[float], np.ndarray]


def as_distribution(p: DistLike) -> Distribution:
    return p if isinstance(p, Distribution) else Distribution(np.asarray(p, dtype=float))


def _probs(p: DistLike) -> np.ndarray:
    return as_distribution(p).probs


def uniform(k: int) -> Distribution:
    return Distribution(np.full(k, 1.0 / k))


def point_mass(k: int, x: int) -> Distribution:
    p = np.zeros(k)
    p[x] = 1.0
    return Distribution(p)


def _check_same_k(p: np.ndarray, q: np.ndarray):
    if p.shape != q.shape:
        raise DimensionError(f"alphabet mismatch: {p.size} vs {q.size}")


def tv_distance(p: DistLike, q: DistLike) -> float:
    p, q = _probs(p), _probs(q)
    _check_same_k(p, q)
    return 0.5 * float(np.abs(p - q).sum())


def chi_square_divergence(p: DistLike, q: DistLike) -> float:
    p, q = _probs(p), _probs(q)
    _check_same_k(p, q)
    bad = (q <= 0) & (p > 0)
    if bad.any():
        raise SupportError(f"p has mass outside the support of q at {np.flatnonzero(bad).tolist()}")
    keep = q > 0
    return float(np.sum((p[keep] - q[keep]) ** 2 / q[keep]))


@dataclass(frozen=True, eq=False)
class PaninskiIndex:
    """Sign vector ``z`` in {+1,-1}^(k/2) and perturbation size ``alpha``."""

    z: np.ndarray
    alpha: float

    def __post_init__(self):
        z = np.array(self.z, dtype=np.int8).ravel()
        if not np.all(np.isin(z, (-1, 1))):
            raise ValueError("z must have entries in {+1, -1}")
        if not 0 <= self.alpha or 2 * self.alpha > 1:
            raise ValueError(f"alpha must lie in [0, 1/2], got {self.alpha}")
        z.flags.writeable = False
        object.__setattr__(self, "z", z)

    @property
    def k(self) -> int:
        return 2 * self.z.size

    @classmethod
    def random(cls, k: int, alpha: float, seed=None) -> "PaninskiIndex":
        if k % 2:
            raise ValueError(f"Paninski family needs even k, got {k}")
        z = as_rng(seed).choice(np.array([-1, 1], dtype=np.int8), size=k // 2)
        return cls(z, alpha)


def paninski_dist(idx: PaninskiIndex, k: int | None = None) -> Distribution:
    """Pairwise +-2*alpha/k perturbation of uniform: p(2i) = (1 + 2*alpha*z_i)/k,
    p(2i+1) = (1 - 2*alpha*z_i)/k (0-indexed)."""
    if k is None:
        k = idx.k
    if k % 2:
        raise ValueError(f"Paninski family needs even k, got {k}")
    if idx.z.size != k // 2:
        raise DimensionError(f"|z| = {idx.z.size} but k/2 = {k // 2}")
    if 2 * idx.alpha > 1:
        raise ValueError("2*alpha > 1")
    shift = 2.0 * idx.alpha * idx.z
    p = np.empty(k)
    p[0::2] = (1.0 + shift) / k
    p[1::2] = (1.0 - shift) / k
    return Distribution(p)


@dataclass(frozen=True, eq=False)
class SampleBlock:
    values: np.ndarray
    k: int
    seed: object = field(default=None, repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.int64)
        if v.size and (v.min() < 0 or v.max() >= self.k):
            raise ValueError("sample values outside [0, k)")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.size

    def counts(self) -> np.ndarray:
        return np.bincount(self.values, minlength=self.k)


def sample(p: DistLike, n: int, seed=None) -> SampleBlock:
    p = as_distribution(p)
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    rng = as_rng(seed)
    values = sample_values(p.probs, n, rng)
    return SampleBlock(values, p.k, seed if not isinstance(seed, np.random.Generator) else None)


def sample_values(probs: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    """Inverse-CDF draws; the hot path used by the harness."""
    cdf = np.cumsum(probs)
    cdf[-1] = 1.0
    out = np.searchsorted(cdf, rng.random(n), side="right")
    # guard zero-probability tail symbols hit by round-off
    return np.minimum(out, probs.size - 1).astype(np.int64)


def simplex_project(v) -> Distribution:
    """Euclidean projection onto the probability simplex (sort-based).

    Exact fixed point on inputs that are already distributions. For any
    distribution r, tv(proj, r) <= ||v - r||_1, so projecting a signed
    estimate at most doubles its TV-style error.
    """
    v = np.asarray(v, dtype=float).ravel()
    if not np.all(np.isfinite(v)):
        raise ValueError("simplex_project: non-finite input")
    if v.min() >= 0 and abs(v.sum() - 1.0) <= PROB_TOL:
        return Distribution(v)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ind = np.arange(1, v.size + 1)
    rho = np.flatnonzero(u - css / ind > 0)[-1]
    theta = css[rho] / (rho + 1)
    w = np.maximum(v - theta, 0.0)
    # round-off can leave the sum 1 +- 1e-15; absorb it into the largest entry
    w[np.argmax(w)] += 1.0 - w.sum()
    return Distribution(w)
