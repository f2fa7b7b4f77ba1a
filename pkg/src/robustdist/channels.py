"""Message channels W(y | x) from ``[k]`` to a finite alphabet, and the channel
information matrix used by the lower-bound diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .distributions import PROB_TOL, DimensionError, Distribution, DistLike, _probs
from .rng import as_rng, splitmix64

KINDS = ("identity", "hash", "compression", "krr", "custom")


@dataclass(frozen=True)
class ConstraintSpec:
    """``unconstrained``, ``bits`` (ell-bit messages) or ``ldp`` (epsilon-LDP)."""

    kind: str = "unconstrained"
    ell: Optional[int] = None
    epsilon: Optional[float] = None

    def __post_init__(self):
        if self.kind == "bits":
            if self.ell is None or self.ell < 1:
                raise ValueError(f"bits constraint needs ell >= 1, got {self.ell}")
        elif self.kind == "ldp":
            if self.epsilon is None or not self.epsilon > 0:
                raise ValueError(f"ldp constraint needs epsilon > 0, got {self.epsilon}")
        elif self.kind != "unconstrained":
            raise ValueError(f"unknown constraint kind {self.kind!r}")

    @classmethod
    def parse(cls, text: str) -> "ConstraintSpec":
        """``"none"``, ``"bits:3"`` or ``"ldp:0.5"``."""
        text = text.strip().lower()
        if text in ("none", "unconstrained", ""):
            return cls()
        kind, _, value = text.partition(":")
        if kind in ("bits", "ell"):
            return cls("bits", ell=int(value))
        if kind in ("ldp", "eps", "epsilon"):
            return cls("ldp", epsilon=float(value))
        raise ValueError(f"cannot parse constraint {text!r}")

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == "bits":
            d["ell"] = self.ell
        if self.kind == "ldp":
            d["epsilon"] = self.epsilon
        return d

    @classmethod
    def from_dict(cls, d) -> "ConstraintSpec":
        if isinstance(d, str):
            return cls.parse(d)
        return cls(d.get("kind", "unconstrained"), d.get("ell"), d.get("epsilon"))


UNCONSTRAINED = ConstraintSpec()


@dataclass(frozen=True, eq=False)
class Channel:
    matrix: np.ndarray
    kind: str = "custom"
    constraint: ConstraintSpec = UNCONSTRAINED
    params: dict = field(default_factory=dict)
    seed: Optional[int] = None

    def __post_init__(self):
        w = np.array(self.matrix, dtype=float)
        if w.ndim != 2:
            raise ValueError("channel matrix must be 2-d")
        if self.kind not in KINDS:
            raise ValueError(f"unknown channel kind {self.kind!r}")
        if w.min() < 0 or np.abs(w.sum(axis=1) - 1).max() > PROB_TOL:
            raise ValueError("channel matrix must be row-stochastic")
        c = self.constraint
        if c.kind == "bits" and w.shape[1] != 2**c.ell:
            raise ValueError(f"{c.ell}-bit channel must have {2**c.ell} outputs, has {w.shape[1]}")
        if c.kind == "ldp" and ldp_ratio(w) > math.exp(c.epsilon) * (1 + 1e-9):
            raise ValueError(f"channel violates {c.epsilon}-LDP")
        w.flags.writeable = False
        object.__setattr__(self, "matrix", w)

    @property
    def k(self) -> int:
        return self.matrix.shape[0]

    @property
    def y_size(self) -> int:
        return self.matrix.shape[1]

    @property
    def deterministic(self) -> bool:
        return bool(np.all((self.matrix == 0) | (self.matrix == 1)))

    def descriptor(self) -> dict:
        d = {"kind": self.kind, "params": dict(self.params), "seed": self.seed}
        if self.kind == "custom":
            d["params"]["matrix"] = self.matrix.tolist()
            d["params"]["constraint"] = self.constraint.to_dict()
        return d


def ldp_ratio(w: np.ndarray) -> float:
    """max_y max_{x,x'} W(y|x)/W(y|x'), infinite if a column mixes zeros and nonzeros."""
    lo, hi = w.min(axis=0), w.max(axis=0)
    used = hi > 0
    if np.any(lo[used] == 0):
        return math.inf
    return float((hi[used] / lo[used]).max())


def channel_from_descriptor(d: dict) -> Channel:
    kind, params, seed = d["kind"], d.get("params", {}), d.get("seed")
    if kind == "identity":
        return identity_channel(params["k"])
    if kind == "hash":
        return random_hash_channel(params["k"], params["ell"], seed, user=params.get("user", 0))[0]
    if kind == "compression":
        return domain_compression_channel(params["k"], params["ell"], seed)
    if kind == "krr":
        return krr_channel(params["k"], params["epsilon"])
    if kind == "custom":
        return Channel(
            np.asarray(params["matrix"]),
            "custom",
            ConstraintSpec.from_dict(params.get("constraint", {})),
        )
    raise ValueError(f"unknown channel kind {kind!r}")


def identity_channel(k: int) -> Channel:
    if k < 2:
        raise ValueError("k must be >= 2")
    return Channel(np.eye(k), "identity", UNCONSTRAINED, {"k": k})


# --- random hashing -------------------------------------------------------


def hash_tables(seed: int, users, k: int, ell: int) -> np.ndarray:
    """Bins ``h_u(x)`` for every user in ``users`` and every x in [k].

    Each entry is a keyed splitmix64 hash of (seed, user, x), so any single
    user's hash can be rebuilt from the public seed alone.
    """
    users = np.atleast_1d(np.asarray(users, dtype=np.uint64))
    key = splitmix64(np.uint64(int(seed) & 0xFFFFFFFFFFFFFFFF) ^ splitmix64(users))
    with np.errstate(over="ignore"):
        vals = splitmix64(key[:, None] * np.uint64(0x100000001B3) + np.arange(k, dtype=np.uint64)[None, :])
    dtype = np.uint8 if ell <= 8 else np.uint16
    return (vals >> np.uint64(64 - ell)).astype(dtype)


@dataclass(frozen=True, eq=False)
class HashFunction:
    k: int
    ell: int
    table: np.ndarray
    seed: Optional[int] = None
    user: int = 0

    @classmethod
    def from_seed(cls, k: int, ell: int, seed: int, user: int = 0) -> "HashFunction":
        table = hash_tables(seed, [user], k, ell)[0]
        table.flags.writeable = False
        return cls(k, ell, table, seed, user)

    def __call__(self, x):
        return self.table[x]

    def preimage_indicator(self, y: int) -> np.ndarray:
        """Column y of T_h: the 0/1 vector 1{h(x) = y} over x."""
        return (self.table == y).astype(np.int64)


def random_hash_channel(k: int, ell: int, seed: int, user: int = 0):
    if ell < 1 or k < 2:
        raise ValueError("need ell >= 1 and k >= 2")
    h = HashFunction.from_seed(k, ell, seed, user)
    w = np.zeros((k, 2**ell))
    w[np.arange(k), h.table.astype(np.int64)] = 1.0
    ch = Channel(w, "hash", ConstraintSpec("bits", ell=ell), {"k": k, "ell": ell, "user": user}, seed)
    return ch, h


# --- domain compression ---------------------------------------------------


def compression_map(k: int, ell: int, seed) -> np.ndarray:
    """part index of each x under a uniformly random near-balanced partition of [k]."""
    perm = as_rng(seed).permutation(k)
    parts = np.empty(k, dtype=np.int64)
    parts[perm] = np.arange(k) % (2**ell)
    return parts


def domain_compression_channel(k: int, ell: int, seed) -> Channel:
    if 2**ell >= k:
        raise ValueError(f"2^ell = {2**ell} >= k = {k}; use identity_channel")
    parts = compression_map(k, ell, seed)
    w = np.zeros((k, 2**ell))
    w[np.arange(k), parts] = 1.0
    return Channel(w, "compression", ConstraintSpec("bits", ell=ell), {"k": k, "ell": ell}, seed)


# --- LDP ------------------------------------------------------------------


def krr_channel(k: int, epsilon: float) -> Channel:
    """k-ary randomized response."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    # e^eps overflows past ~709; the row is a point mass to double precision long before that
    e = math.exp(min(epsilon, 700.0))
    denom = e + k - 1
    w = np.full((k, k), 1.0 / denom)
    np.fill_diagonal(w, e / denom)
    return Channel(w, "krr", ConstraintSpec("ldp", epsilon=epsilon), {"k": k, "epsilon": epsilon})


# --- using channels -------------------------------------------------------


def output_distribution(w: Channel, p: DistLike) -> Distribution:
    p = _probs(p)
    if p.size != w.k:
        raise DimensionError(f"channel input size {w.k} vs distribution size {p.size}")
    out = p @ w.matrix
    return Distribution(out / out.sum())


def apply_channel(w: Channel, xs, rng) -> np.ndarray:
    """Vectorised y_i ~ W(. | x_i)."""
    xs = np.asarray(xs, dtype=np.int64)
    if w.deterministic:
        return np.argmax(w.matrix, axis=1)[xs]
    cdf = np.cumsum(w.matrix, axis=1)
    u = as_rng(rng).random(xs.size)
    return np.minimum((u[:, None] >= cdf[xs]).sum(axis=1), w.y_size - 1)


def channel_apply(w: Channel, x: int, seed=None) -> int:
    if not 0 <= x < w.k:
        raise ValueError(f"symbol {x} outside [0, {w.k})")
    return int(apply_channel(w, [x], as_rng(seed))[0])


# --- channel information matrix -------------------------------------------


@dataclass(frozen=True, eq=False)
class ChannelInfoMatrix:
    entries: np.ndarray

    def __post_init__(self):
        h = np.array(self.entries, dtype=float)
        if h.ndim != 2 or h.shape[0] != h.shape[1]:
            raise ValueError("channel information matrix must be square")
        if np.abs(h - h.T).max(initial=0.0) > 1e-9:
            raise ValueError("channel information matrix must be symmetric")
        if h.size and np.linalg.eigvalsh(h).min() < -1e-8:
            raise ValueError("channel information matrix must be PSD")
        h.flags.writeable = False
        object.__setattr__(self, "entries", h)

    @property
    def k(self) -> int:
        return 2 * self.entries.shape[0]


def channel_info_matrix(w: Channel) -> ChannelInfoMatrix:
    """H(i1, i2) = sum_y d_{i1}(y) d_{i2}(y) / sum_x W(y|x),
    d_i(y) = W(y | 2i) - W(y | 2i+1); outputs no input emits are skipped."""
    if w.k % 2:
        raise ValueError(f"channel information matrix needs even k, got {w.k}")
    m = w.matrix
    col = m.sum(axis=0)
    keep = col > 0
    d = m[0::2, keep] - m[1::2, keep]
    h = (d / col[keep]) @ d.T
    return ChannelInfoMatrix(0.5 * (h + h.T))


def trace_norm(m) -> float:
    h = m.entries if isinstance(m, ChannelInfoMatrix) else np.asarray(m, dtype=float)
    if h.ndim != 2 or h.shape[0] != h.shape[1] or np.abs(h - h.T).max(initial=0.0) > 1e-9:
        raise ValueError("trace_norm expects a symmetric matrix")
    return float(np.abs(np.linalg.eigvalsh(h)).sum())
