"""Exact earth-mover distance with Hamming cost between laws on small product spaces."""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .distributions import PROB_TOL, DimensionError, DistLike, _probs, tv_distance

DEFAULT_ATOM_CAP = 10**6


class SupportCapExceeded(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class FiniteJoint:
    """A law on ``[a_1] x ... x [a_n]`` stored as a flat row-major mass vector."""

    alphabet: tuple
    mass: np.ndarray

    def __post_init__(self):
        alphabet = tuple(int(a) for a in self.alphabet)
        mass = np.array(self.mass, dtype=float).ravel()
        if any(a < 1 for a in alphabet):
            raise ValueError("alphabet sizes must be positive")
        if mass.size != int(np.prod(alphabet, dtype=np.int64)):
            raise DimensionError(f"mass has {mass.size} atoms, alphabet {alphabet} needs {np.prod(alphabet)}")
        if mass.min() < 0 or abs(mass.sum() - 1) > PROB_TOL:
            raise ValueError("mass must be nonnegative and sum to 1")
        mass.flags.writeable = False
        object.__setattr__(self, "alphabet", alphabet)
        object.__setattr__(self, "mass", mass)

    @property
    def n(self) -> int:
        return len(self.alphabet)

    @property
    def size(self) -> int:
        return self.mass.size

    @classmethod
    def product(cls, marginals: Sequence[DistLike]) -> "FiniteJoint":
        ps = [_probs(p) for p in marginals]
        mass = reduce(lambda a, b: np.multiply.outer(a, b).ravel(), ps)
        return cls(tuple(p.size for p in ps), mass)

    @classmethod
    def mixture(cls, components: Sequence["FiniteJoint"], weights=None) -> "FiniteJoint":
        if weights is None:
            weights = np.full(len(components), 1.0 / len(components))
        alphabet = components[0].alphabet
        if any(c.alphabet != alphabet for c in components):
            raise DimensionError("mixture components live on different spaces")
        mass = sum(w * c.mass for w, c in zip(weights, components))
        return cls(alphabet, mass)

    def marginal(self, i: int) -> np.ndarray:
        axes = tuple(j for j in range(self.n) if j != i)
        return self.mass.reshape(self.alphabet).sum(axis=axes)


def _hamming(alphabet, rows, cols) -> np.ndarray:
    a = np.array(np.unravel_index(rows, alphabet)).T
    b = np.array(np.unravel_index(cols, alphabet)).T
    return (a[:, None, :] != b[None, :, :]).sum(axis=2).astype(float)


def exact_emd_hamming(q1: FiniteJoint, q2: FiniteJoint, atom_cap: int = DEFAULT_ATOM_CAP) -> float:
    """min over couplings of E[d_Ham], solved as a transportation LP.

    Shared mass min(q1, q2) stays put (Hamming is a metric), so only the
    positive parts of q1 - q2 and q2 - q1 enter the LP.
    """
    if q1.alphabet != q2.alphabet:
        raise DimensionError(f"support mismatch: {q1.alphabet} vs {q2.alphabet}")
    if q1.size > atom_cap:
        raise SupportCapExceeded(f"{q1.size} atoms exceeds cap {atom_cap}")
    diff = q1.mass - q2.mass
    rows = np.flatnonzero(diff > 1e-15)
    cols = np.flatnonzero(diff < -1e-15)
    if rows.size == 0 or cols.size == 0:
        return 0.0
    if rows.size == 1 or cols.size == 1:
        cost = _hamming(q1.alphabet, rows, cols)
        w = diff[rows] if cols.size == 1 else -diff[cols]
        return float((cost.ravel() * w).sum())
    supply, demand = diff[rows], -diff[cols]
    # demand and supply carry equal totals up to round-off; rescale demand so the LP is feasible
    demand = demand * (supply.sum() / demand.sum())
    r, c = rows.size, cols.size
    if r * c > atom_cap:
        raise SupportCapExceeded(f"transport LP with {r * c} variables exceeds cap {atom_cap}")
    cost = _hamming(q1.alphabet, rows, cols).ravel()
    a_rows = sp.kron(sp.identity(r), np.ones((1, c)))
    a_cols = sp.kron(np.ones((1, r)), sp.identity(c)).tocsr()
    a_eq = sp.vstack([a_rows, a_cols[:-1]]).tocsr()
    b_eq = np.concatenate([supply, demand[:-1]])
    res = linprog(cost, A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    if res.status != 0:
        raise RuntimeError(f"EMD linear program failed: {res.message}")
    return float(res.fun)


def naive_coupling_emd_bound(ps: Sequence[DistLike], qs: Sequence[DistLike]) -> float:
    """Sum of per-coordinate TV distances; the cost of coupling coordinates independently."""
    if len(ps) != len(qs):
        raise DimensionError(f"{len(ps)} vs {len(qs)} coordinates")
    return float(sum(tv_distance(p, q) for p, q in zip(ps, qs)))


def paninski_mixture_joint(n: int, k: int, alpha: float) -> FiniteJoint:
    """Law of n samples drawn i.i.d. from p_z, with z uniform over all sign vectors."""
    from itertools import product

    from .distributions import PaninskiIndex, paninski_dist

    comps = [FiniteJoint.product([paninski_dist(PaninskiIndex(np.array(z), alpha))] * n) for z in product((-1, 1), repeat=k // 2)]
    return FiniteJoint.mixture(comps)


def paninski_uniform_emd(n: int, k: int, alpha: float, atom_cap: int = DEFAULT_ATOM_CAP) -> float:
    """Exact Hamming EMD between the Paninski mixture and u[k]^n."""
    if k**n > atom_cap:
        raise SupportCapExceeded(f"k^n = {k**n} atoms exceeds the cap {atom_cap}")
    mix = paninski_mixture_joint(n, k, alpha)
    return exact_emd_hamming(mix, FiniteJoint.product([np.full(k, 1.0 / k)] * n), atom_cap)
