"""gamma-manipulation attacks.

An attack sees the full intended transcript ``y`` (plus whatever public
randomness it is handed) and rewrites at most ``m = floor(gamma * n)`` entries.
Every attack returns an :class:`AttackOutcome`, whose constructor checks the
budget and that untouched entries agree with ``y``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .distributions import DimensionError, DistLike, _probs, tv_distance
from .rng import as_rng

ATTACKS = ("null", "coupling", "flatten", "spike", "hash_flood")


@dataclass(frozen=True)
class AttackBudget:
    gamma: float
    n: int

    def __post_init__(self):
        if not 0 <= self.gamma <= 1:
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma}")
        if self.n < 0:
            raise ValueError("n must be nonnegative")

    @property
    def m(self) -> int:
        # the 1e-9 slack keeps e.g. floor(0.29 * 100) at 29 despite round-off
        return min(self.n, math.floor(self.gamma * self.n + 1e-9))


@dataclass(frozen=True, eq=False)
class AttackOutcome:
    z: np.ndarray
    corrupted: np.ndarray
    budget_exhausted: bool = False

    def check(self, y: np.ndarray, budget: AttackBudget) -> "AttackOutcome":
        if self.z.shape != y.shape:
            raise AssertionError("attack changed the transcript length")
        if self.corrupted.size > budget.m:
            raise AssertionError(f"attack touched {self.corrupted.size} > m = {budget.m} messages")
        off = np.ones(y.size, dtype=bool)
        off[self.corrupted] = False
        if not np.array_equal(self.z[off], y[off]):
            raise AssertionError("attack modified a message outside its corrupted set")
        return self


def _outcome(y: np.ndarray, z: np.ndarray, budget: AttackBudget, exhausted=False) -> AttackOutcome:
    z.flags.writeable = False
    changed = np.flatnonzero(z != y)
    return AttackOutcome(z, changed, exhausted).check(y, budget)


def null_attack(y, budget: AttackBudget) -> AttackOutcome:
    y = np.asarray(y)
    return _outcome(y, y.copy(), budget)


# --- coupling attack --------------------------------------------------------


def build_maximal_coupling(p: DistLike, q: DistLike) -> np.ndarray:
    """Kernel K(y'|y) with P K = Q and P(y' != y) = tv(P, Q).

    Each symbol keeps min(P, Q)/P of its mass; the excess (P - Q)_+ is routed
    proportionally to the deficit (Q - P)_+. Rows where P(y) = 0 are identity.
    """
    p, q = _probs(p), _probs(q)
    if p.shape != q.shape:
        raise DimensionError(f"alphabet mismatch: {p.size} vs {q.size}")
    stay = np.where(p > 0, np.minimum(p, q) / np.where(p > 0, p, 1.0), 1.0)
    deficit = np.maximum(q - p, 0.0)
    kern = np.diag(stay)
    total = deficit.sum()
    if total > 0:
        kern += np.outer(1.0 - stay, deficit / total)
    return kern


def maximal_coupling_kernels(ps: np.ndarray, qs: np.ndarray) -> np.ndarray:
    """Row-wise :func:`build_maximal_coupling` for (n, a) arrays of laws."""
    safe = np.where(ps > 0, ps, 1.0)
    stay = np.where(ps > 0, np.minimum(ps, qs) / safe, 1.0)
    deficit = np.maximum(qs - ps, 0.0)
    total = deficit.sum(axis=1, keepdims=True)
    share = np.divide(deficit, total, out=np.zeros_like(deficit), where=total > 0)
    kern = (1.0 - stay)[:, :, None] * share[:, None, :]
    idx = np.arange(ps.shape[1])
    kern[:, idx, idx] += stay
    return kern


@dataclass(frozen=True, eq=False)
class CouplingPlan:
    """Per-user source/target message laws and their maximal-coupling kernels."""

    sources: np.ndarray  # (n, a)
    targets: np.ndarray  # (n, a)
    kernels: np.ndarray  # (n, a, a)

    @classmethod
    def build(cls, sources: Sequence[DistLike], targets: Sequence[DistLike]) -> "CouplingPlan":
        if len(sources) != len(targets):
            raise DimensionError("sources and targets differ in length")
        ps = np.array([_probs(p) for p in sources])
        qs = np.array([_probs(q) for q in targets])
        return cls.from_arrays(ps, qs)

    @classmethod
    def from_arrays(cls, ps: np.ndarray, qs: np.ndarray) -> "CouplingPlan":
        """Rows of ``ps``/``qs`` are per-user laws; kernels are built in one pass."""
        ps, qs = np.asarray(ps, dtype=float), np.asarray(qs, dtype=float)
        if ps.shape != qs.shape:
            raise DimensionError(f"sources {ps.shape} vs targets {qs.shape}")
        return cls(ps, qs, maximal_coupling_kernels(ps, qs))

    @classmethod
    def iid(cls, p: DistLike, q: DistLike, n: int) -> "CouplingPlan":
        p, q = _probs(p), _probs(q)
        kern = build_maximal_coupling(p, q)
        return cls(np.tile(p, (n, 1)), np.tile(q, (n, 1)), np.broadcast_to(kern, (n,) + kern.shape))

    def __len__(self):
        return self.sources.shape[0]

    def expected_changes(self) -> float:
        return float(sum(tv_distance(p, q) for p, q in zip(self.sources, self.targets)))


def coupling_attack(y, plan: CouplingPlan, budget: AttackBudget, seed=None, strict: bool = False) -> AttackOutcome:
    """Push each y_i through its kernel, then enforce the budget.

    strict=False keeps the first m intended changes in a seed-derived random
    order. strict=True is all-or-nothing: if more than m changes are intended
    the whole transcript is returned untouched.
    """
    y = np.asarray(y, dtype=np.int64)
    if len(plan) != y.size:
        raise DimensionError(f"plan covers {len(plan)} users, transcript has {y.size}")
    rng = as_rng(seed)
    order = rng.permutation(y.size)
    u = rng.random(y.size)
    rows = plan.kernels[np.arange(y.size), y]
    cdf = np.cumsum(rows, axis=1)
    proposal = np.minimum((u[:, None] >= cdf).sum(axis=1), rows.shape[1] - 1)
    wanted = order[proposal[order] != y[order]]
    m = budget.m
    z = y.copy()
    if wanted.size <= m:
        z[wanted] = proposal[wanted]
        return _outcome(y, z, budget)
    if strict:
        return _outcome(y, z, budget, exhausted=True)
    keep = wanted[:m]
    z[keep] = proposal[keep]
    return _outcome(y, z, budget, exhausted=True)


# --- attacks on raw samples against the empirical-TV statistic --------------


def flatten_attack(y, k: int, budget: AttackBudget) -> AttackOutcome:
    """Greedily move samples from the most over-represented symbol to the most
    under-represented one while each move strictly lowers sum_x |k M_x - n|."""
    y = np.asarray(y, dtype=np.int64)
    n = y.size
    z = y.copy()
    counts = np.bincount(y, minlength=k)
    dev = k * counts - n
    untouched = np.ones(n, dtype=bool)
    moves = 0
    while moves < budget.m:
        a, b = int(np.argmax(dev)), int(np.argmin(dev))
        if dev[a] <= 0 or dev[b] >= 0:
            break
        gain = (abs(dev[a]) - abs(dev[a] - k)) + (abs(dev[b]) - abs(dev[b] + k))
        if gain <= 0:
            break
        # prefer a sample that has not been moved yet so |C| tracks the move count
        idx = np.flatnonzero((z == a) & untouched)
        if idx.size == 0:
            idx = np.flatnonzero(z == a)
        i = idx[0]
        z[i] = b
        untouched[i] = False
        dev[a] -= k
        dev[b] += k
        moves += 1
    return _outcome(y, z, budget)


def spike_attack(y, target: int, budget: AttackBudget, k: Optional[int] = None) -> AttackOutcome:
    """Rewrite up to m messages to ``target``, taking them from the currently
    most common non-target symbols."""
    y = np.asarray(y, dtype=np.int64)
    k = int(max(y.max(initial=0), target)) + 1 if k is None else k
    if not 0 <= target < k:
        raise ValueError(f"target {target} outside [0, {k})")
    counts = np.bincount(y, minlength=k)
    counts[target] = -1
    take = np.zeros(k, dtype=np.int64)
    for _ in range(budget.m):
        a = int(np.argmax(counts))
        if counts[a] <= 0:
            break
        counts[a] -= 1
        take[a] += 1
    z = y.copy()
    for a in np.flatnonzero(take):
        idx = np.flatnonzero(y == a)[: take[a]]
        z[idx] = target
    return _outcome(y, z, budget)


# --- attack on the hashing estimator -----------------------------------------


def _as_table(hashes, n: int) -> np.ndarray:
    if isinstance(hashes, np.ndarray):
        table = hashes
    else:
        table = np.stack([h.table for h in hashes])
    if table.shape[0] != n:
        raise DimensionError(f"{table.shape[0]} hash functions for {n} users")
    return table


def hash_flood_attack(y, hashes, target_set, budget: AttackBudget, seed=None, ell: Optional[int] = None) -> AttackOutcome:
    """Each corrupted user i reports the bin whose preimage under h_i covers
    the most target symbols net of non-target ones; corrupted users are the
    first m in a seed-derived random order."""
    y = np.asarray(y, dtype=np.int64)
    table = _as_table(hashes, y.size)
    k = table.shape[1]
    if ell is None:
        ell = getattr(hashes[0], "ell", None) if not isinstance(hashes, np.ndarray) else None
    n_bins = 2**ell if ell is not None else int(table.max()) + 1
    weight = -np.ones(k)
    weight[np.asarray(sorted(target_set), dtype=np.int64)] = 1.0
    chosen = as_rng(seed).permutation(y.size)[: budget.m]
    z = y.copy()
    if chosen.size:
        sub = table[chosen].astype(np.int64)
        scores = np.zeros((chosen.size, n_bins))
        rows = np.repeat(np.arange(chosen.size), k)
        np.add.at(scores, (rows, sub.ravel()), np.tile(weight, chosen.size))
        z[chosen] = np.argmax(scores, axis=1)
    return _outcome(y, z, budget)
