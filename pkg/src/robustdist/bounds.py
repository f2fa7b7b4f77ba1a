"""Reference rate curves and lower-bound diagnostics.

All hidden constants are set to 1; every value is capped at 1. These curves
are for shape comparison against measured risk, not for exact prediction.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .channels import Channel, ConstraintSpec, channel_info_matrix, output_distribution, trace_norm
from .distributions import PaninskiIndex, chi_square_divergence, paninski_dist, uniform

TASKS = ("DL", "IT", "UT")

__all__ = [
    "ConstraintSpec",
    "RateCurve",
    "rate_dl",
    "rate_it",
    "rate",
    "lower_bound_from_trace_norm",
    "emd_bound_paninski",
    "emd_bound_channels",
    "expected_chi_square_paninski",
    "chi_square_trace_bound",
    "alpha_for_emd_budget",
]


def _cap(x: float) -> float:
    return min(1.0, x)


def _effective_bins(k: int, c: ConstraintSpec):
    """2^ell clipped at k, or None when the constraint does not bind."""
    if c.kind != "bits" or 2**c.ell >= k:
        return None
    return 2**c.ell


def rate_dl(k: int, n: int, constraint: ConstraintSpec, gamma: float) -> tuple:
    """(upper, lower) minimax TV risk for learning."""
    if constraint.kind == "ldp":
        e = constraint.epsilon
        v = math.sqrt(k**2 / (e**2 * n)) + gamma * math.sqrt(k) / e
        return _cap(v), _cap(v)
    b = _effective_bins(k, constraint)
    if b is None:
        v = math.sqrt(k / n) + gamma
    else:
        v = math.sqrt(k**2 / (n * b)) + gamma * math.sqrt(k / b)
    return _cap(v), _cap(v)


def _rate_it_unconstrained(k: int, n: int, gamma: float) -> float:
    return k**0.25 / math.sqrt(n) + gamma + math.sqrt(k * gamma / n) + (k * gamma**2 / n) ** 0.25


def rate_it(k: int, n: int, constraint: ConstraintSpec, gamma: float) -> tuple:
    """(upper, lower) minimax testing distance. Upper and lower differ for
    general ell-bit constraints; nothing here claims they match."""
    if constraint.kind == "ldp":
        e = constraint.epsilon
        v = math.sqrt(k / (e**2 * n)) + gamma * math.sqrt(k) / e
        return _cap(v), _cap(v)
    b = _effective_bins(k, constraint)
    if b is None:
        v = _rate_it_unconstrained(k, n, gamma)
        return _cap(v), _cap(v)
    first = math.sqrt(k / (math.sqrt(b) * n))
    scale = math.sqrt(k / b)
    upper = first + scale * (gamma + math.sqrt(b * gamma / n) + (b * gamma**2 / n) ** 0.25)
    lower = first + scale * (gamma + math.sqrt(b * gamma / n))
    return _cap(upper), _cap(lower)


def rate(task: str, k: int, n: int, constraint: ConstraintSpec, gamma: float) -> tuple:
    if task == "DL":
        return rate_dl(k, n, constraint, gamma)
    if task in ("IT", "UT"):
        return rate_it(k, n, constraint, gamma)
    raise ValueError(f"unknown task {task!r}")


@dataclass
class RateCurve:
    task: str
    bound: str  # "upper" | "lower"
    formula: str
    points: list = field(default_factory=list)  # (config dict, value)

    @classmethod
    def evaluate(cls, task: str, bound: str, ks, ns, constraint: ConstraintSpec, gammas) -> "RateCurve":
        idx = 0 if bound == "upper" else 1
        curve = cls(task, bound, f"{task}/{constraint.kind}")
        for k, n, g in itertools.product(ks, ns, gammas):
            v = rate(task, k, n, constraint, g)[idx]
            curve.points.append(({"k": k, "n": n, "gamma": g, **constraint.to_dict()}, v))
        return curve


def lower_bound_from_trace_norm(k: int, gamma: float, max_trace_norm: float) -> float:
    """gamma * sqrt(k / max ||H(W)||_*), capped at 1."""
    if not max_trace_norm > 0:
        raise ValueError("max_trace_norm must be positive")
    return _cap(gamma * math.sqrt(k / max_trace_norm))


def emd_bound_paninski(n: int, k: int, alpha: float) -> float:
    """n * min(n alpha^2 / k, sqrt(n) alpha^2 / sqrt(k), alpha): EMD between the
    Paninski mixture and the uniform law over n raw samples, constant 1."""
    if not 0 <= alpha <= 0.5:
        raise ValueError("alpha must lie in [0, 1/2]")
    return n * min(n * alpha**2 / k, math.sqrt(n) * alpha**2 / math.sqrt(k), alpha)


def emd_bound_channels(channels: Sequence[Channel], k: int, alpha: float, n: int) -> float:
    """2 n alpha sqrt(max_W ||H(W)||_* / k) over the given channel family."""
    if k % 2:
        raise ValueError(f"k must be even, got {k}")
    worst = max(trace_norm(channel_info_matrix(w)) for w in channels)
    return 2 * n * alpha * math.sqrt(worst / k)


def expected_chi_square_paninski(w: Channel, alpha: float) -> float:
    """E_z chi^2(W p_z || W u) by enumerating all 2^(k/2) sign vectors."""
    k = w.k
    ref = output_distribution(w, uniform(k))
    total = 0.0
    signs = list(itertools.product((-1, 1), repeat=k // 2))
    for z in signs:
        total += chi_square_divergence(output_distribution(w, paninski_dist(PaninskiIndex(np.array(z), alpha))), ref)
    return total / len(signs)


def chi_square_trace_bound(w: Channel, alpha: float) -> float:
    """8 alpha^2 / k * ||H(W)||_*."""
    return 8 * alpha**2 / w.k * trace_norm(channel_info_matrix(w))


def alpha_for_emd_budget(n: int, k: int, gamma: float, tol: float = 1e-12) -> float:
    """Largest alpha in [0, 1/2] with emd_bound_paninski(n, k, alpha) <= gamma n / 2 (bisection)."""
    target = gamma * n / 2
    if emd_bound_paninski(n, k, 0.5) <= target:
        return 0.5
    lo, hi = 0.0, 0.5
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if emd_bound_paninski(n, k, mid) <= target:
            lo = mid
        else:
            hi = mid
    return lo


def emd_branch(n: int, k: int, alpha: float) -> int:
    """Index of the active term in the min: 0 -> n a^2/k, 1 -> sqrt(n) a^2/sqrt(k), 2 -> a."""
    terms = (n * alpha**2 / k, math.sqrt(n) * alpha**2 / math.sqrt(k), alpha)
    return int(np.argmin(terms))
