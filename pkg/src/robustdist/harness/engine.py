"""Monte Carlo engine: source -> channels -> attack -> server, repeated over trials.

Per-trial randomness is addressed by (master_seed, "trial", t, role), and
every gamma grid point of a trial reuses the same samples and public
randomness, so attack effects are measured with common random numbers.
Results are gathered in trial order before any reduction, so reports do not
depend on the worker count.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .. import bounds
from ..adversary import (
    AttackBudget,
    CouplingPlan,
    coupling_attack,
    flatten_attack,
    hash_flood_attack,
    null_attack,
    spike_attack,
)
from ..channels import hash_tables
from ..distributions import Distribution, PaninskiIndex, paninski_dist, sample_values, tv_distance, uniform
from ..estimation import empirical_estimator, hashing_estimator
from ..rng import derive_int, derive_rng
from ..testing import (
    DEFAULT_COMPRESSION,
    CompressionConstants,
    compressed_messages,
    compressed_protocol,
    compressed_verdict,
    identity_or_uniformity_test,
    uniformity_test,
)
from .config import AttackSpec, ConfigError, ExperimentConfig, SourceSpec
from .report import RiskReport, RiskRow

LEARNING_METRICS = ("tv_error", "raw_tv_error", "attack_shift")
TESTING_METRICS = ("yes_rate_null", "no_rate_alt", "advantage")


# --- sources ------------------------------------------------------------


def _leaf_sources(src: SourceSpec) -> list:
    return list(src.sources) if src.kind == "worst-of-list" else [src]


def source_distribution(src: SourceSpec, k: int, master_seed: int, trial: int, slot: int = 0) -> Distribution:
    if src.kind == "uniform":
        return uniform(k)
    if src.kind == "explicit":
        return Distribution(np.asarray(src.probs))
    if src.kind == "paninski":
        if src.z_policy == "fixed":
            rng = derive_rng(master_seed, "source-fixed", slot)
        else:
            rng = derive_rng(master_seed, "trial", trial, "source", slot)
        return paninski_dist(PaninskiIndex.random(k, src.alpha, rng))
    raise ValueError(f"cannot draw from source kind {src.kind!r}")


# --- attacks ------------------------------------------------------------


@dataclass
class AttackContext:
    """What the adversary sees besides the messages: the protocol's public
    randomness and message laws (it knows the protocol and observes U)."""

    alphabet: int
    k: int
    message_laws: Optional[object] = None  # callable: input law (k,) -> per-user message laws (n, alphabet)
    table: Optional[np.ndarray] = None
    ell: Optional[int] = None


def _coupling_target(spec: AttackSpec, k: int, rng) -> np.ndarray:
    if spec.params.get("target", "paninski") == "explicit":
        return np.asarray(spec.params["probs"], dtype=float)
    return paninski_dist(PaninskiIndex.random(k, float(spec.params.get("alpha", 0.1)), rng)).probs


def run_attack(spec: AttackSpec, y: np.ndarray, gamma: float, ctx: AttackContext, rng, source: np.ndarray):
    budget = AttackBudget(gamma, y.size)
    name = spec.name
    if name == "null" or budget.m == 0:
        return null_attack(y, budget)
    if name == "flatten":
        return flatten_attack(y, ctx.alphabet, budget)
    if name == "spike":
        return spike_attack(y, int(spec.params.get("target", 0)), budget, k=ctx.alphabet)
    if name == "coupling":
        target = _coupling_target(spec, ctx.k, rng)
        plan = CouplingPlan.from_arrays(ctx.message_laws(source), ctx.message_laws(target))
        return coupling_attack(y, plan, budget, rng, strict=bool(spec.params.get("strict", False)))
    if name == "hash_flood":
        target_set = spec.params.get("target_set", list(range(ctx.k // 2)))
        return hash_flood_attack(y, ctx.table, target_set, budget, rng, ell=ctx.ell)
    raise ConfigError(f"unknown attack {name!r}")


def _identity_laws(n: int):
    return lambda law: np.broadcast_to(np.asarray(law, dtype=float), (n, len(law)))


def _hash_laws(table: np.ndarray, n_bins: int):
    n, k = table.shape

    def laws(law):
        out = np.zeros((n, n_bins))
        rows = np.repeat(np.arange(n), k)
        np.add.at(out, (rows, table.ravel().astype(np.int64)), np.tile(np.asarray(law, dtype=float), n))
        return out

    return laws


def _compressed_laws(proto, n: int):
    def laws(law):
        law = np.asarray(law, dtype=float)
        out = np.empty((n, proto.alphabet))
        for idx, parts in zip(proto.batches, proto.partitions):
            out[idx] = law if parts is None else np.bincount(parts, weights=law, minlength=proto.alphabet)
        return out

    return laws


# --- trials -------------------------------------------------------------


def _hashing_active(cfg: ExperimentConfig) -> bool:
    return cfg.constraint.kind == "bits" and 2**cfg.constraint.ell < cfg.k


def learning_trial(cfg: ExperimentConfig, t: int) -> np.ndarray:
    """(sources, gammas, metrics) array for trial t."""
    leaves = _leaf_sources(cfg.source)
    out = np.empty((len(leaves), len(cfg.gammas), len(LEARNING_METRICS)))
    n, k, seed = cfg.n, cfg.k, cfg.master_seed
    for s, src in enumerate(leaves):
        p = source_distribution(src, k, seed, t, s)
        x = sample_values(p.probs, n, derive_rng(seed, "trial", t, "sample", s))
        if _hashing_active(cfg):
            ell = cfg.constraint.ell
            table = hash_tables(derive_int(seed, "trial", t, "public", s), np.arange(n), k, ell)
            y = table[np.arange(n), x].astype(np.int64)
            ctx = AttackContext(2**ell, k, _hash_laws(table, 2**ell), table, ell)

            def estimate(msgs):
                return hashing_estimator(msgs, table, ell, k)

        else:
            y = x
            ctx = AttackContext(k, k, _identity_laws(n))

            def estimate(msgs):
                return empirical_estimator(msgs, k)

        clean = estimate(y)
        for g, gamma in enumerate(cfg.gammas):
            rng = derive_rng(seed, "trial", t, "attack", s, g)
            z = run_attack(cfg.attack, y, gamma, ctx, rng, p.probs).z
            est = clean if z is y or np.array_equal(z, y) else estimate(z)
            out[s, g] = (
                tv_distance(est.projected, p),
                est.raw_tv(p),
                0.5 * float(np.abs(est.raw - clean.raw).sum()),
            )
    return out


def _tester_for(cfg: ExperimentConfig, gamma: float):
    tester = cfg.with_tester().tester
    return replace(tester, gamma=cfg.tester_gamma if cfg.tester_gamma is not None else gamma)


def testing_trial(cfg: ExperimentConfig, t: int, constants: CompressionConstants = DEFAULT_COMPRESSION) -> np.ndarray:
    """(sources, gammas, metrics) array of 0/1 outcomes; the advantage column
    holds reject(alt) - reject(null) for the trial."""
    leaves = _leaf_sources(cfg.source)
    out = np.empty((len(leaves), len(cfg.gammas), len(TESTING_METRICS)))
    n, k, seed = cfg.n, cfg.k, cfg.master_seed
    q = Distribution(np.asarray(cfg.reference)) if cfg.reference is not None else uniform(k)
    compressed = cfg.constraint.kind == "bits"
    tester0 = cfg.with_tester().tester

    def transcript(law, role, s):
        x = sample_values(law, n, derive_rng(seed, "trial", t, "sample", role, s))
        if not compressed:
            return x, AttackContext(k, k, _identity_laws(n)), None
        proto = compressed_protocol(n, k, cfg.constraint.ell, derive_int(seed, "trial", t, "public", role, s), constants, tester0.beta)
        return compressed_messages(x, proto), AttackContext(proto.alphabet, k, _compressed_laws(proto, n)), proto

    def verdict(z, proto, tester, role, s, g):
        vseed = derive_int(seed, "trial", t, "verdict", role, s, g)
        if proto is not None:
            return compressed_verdict(z, proto, q, tester, vseed, constants).accept
        if cfg.task == "UT":
            return uniformity_test(z, k, tester).accept
        return identity_or_uniformity_test(z, q, tester, vseed).accept

    for s, src in enumerate(leaves):
        p = source_distribution(src, k, seed, t, s)
        y0, ctx0, proto0 = transcript(q.probs, "null", s)
        y1, ctx1, proto1 = transcript(p.probs, "alt", s)
        for g, gamma in enumerate(cfg.gammas):
            tester = _tester_for(cfg, gamma)
            z0 = run_attack(cfg.null_attack, y0, gamma, ctx0, derive_rng(seed, "trial", t, "attack", "null", s, g), q.probs).z
            z1 = run_attack(cfg.attack, y1, gamma, ctx1, derive_rng(seed, "trial", t, "attack", "alt", s, g), p.probs).z
            yes0 = float(verdict(z0, proto0, tester, "null", s, g))
            no1 = 1.0 - float(verdict(z1, proto1, tester, "alt", s, g))
            out[s, g] = (yes0, no1, no1 - (1.0 - yes0))
    return out


# --- driver -------------------------------------------------------------


def _trial_job(args):
    fn, cfg, t = args
    return fn(cfg, t)


def run_trials(fn, cfg: ExperimentConfig, workers: int = 1) -> np.ndarray:
    jobs = [(fn, cfg, t) for t in range(cfg.trials)]
    if workers <= 1:
        results = [_trial_job(j) for j in jobs]
    else:
        chunk = max(1, cfg.trials // (4 * workers))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_trial_job, jobs, chunksize=chunk))
    return np.stack(results)


def _aggregate(cfg: ExperimentConfig, values: np.ndarray, metrics) -> RiskReport:
    """values: (trials, sources, gammas, metrics)."""
    trials = values.shape[0]
    means = values.mean(axis=0)
    if trials > 1:
        ses = values.std(axis=0, ddof=1) / np.sqrt(trials)
    else:
        ses = np.zeros_like(means)
    h = cfg.config_hash()
    rows = []
    attack_label = cfg.attack.label if cfg.task == "DL" else f"{cfg.null_attack.label}/{cfg.attack.label}"
    for g, gamma in enumerate(cfg.gammas):
        upper, lower = bounds.rate(cfg.task, cfg.k, cfg.n, cfg.constraint, gamma)
        for m, metric in enumerate(metrics):
            col = means[:, g, m]
            # worst source: largest risk, except the null yes-rate where smaller is worse
            s = int(np.argmin(col)) if metric == "yes_rate_null" else int(np.argmax(col))
            rows.append(
                RiskRow(
                    task=cfg.task,
                    k=cfg.k,
                    n=cfg.n,
                    ell=cfg.constraint.ell,
                    epsilon=cfg.constraint.epsilon,
                    gamma=gamma,
                    attack=attack_label,
                    metric=metric,
                    value=float(means[s, g, m]),
                    stderr=float(ses[s, g, m]),
                    trials=trials,
                    bound_upper=upper,
                    bound_lower=lower,
                    seed=cfg.master_seed,
                    config_hash=h,
                )
            )
    return RiskReport(cfg.to_dict(), h, rows)


def run_learning_experiment(cfg: ExperimentConfig, workers: int = 1) -> RiskReport:
    cfg.validate()
    if cfg.task != "DL":
        raise ConfigError(f"run_learning_experiment needs task DL, got {cfg.task}")
    start = time.perf_counter()
    report = _aggregate(cfg, run_trials(learning_trial, cfg, workers), LEARNING_METRICS)
    report.wall_clock = time.perf_counter() - start
    return report


def run_testing_experiment(cfg: ExperimentConfig, workers: int = 1) -> RiskReport:
    cfg = cfg.with_tester().validate()
    if cfg.task not in ("IT", "UT"):
        raise ConfigError(f"run_testing_experiment needs task IT or UT, got {cfg.task}")
    start = time.perf_counter()
    report = _aggregate(cfg, run_trials(testing_trial, cfg, workers), TESTING_METRICS)
    report.wall_clock = time.perf_counter() - start
    return report


def run_experiment(cfg: ExperimentConfig, workers: int = 1) -> RiskReport:
    if cfg.task == "DL":
        return run_learning_experiment(cfg, workers)
    return run_testing_experiment(cfg, workers)


SWEEP_AXES = ("k", "n", "trials", "ell", "epsilon", "alpha", "gamma")


def with_axis(cfg: ExperimentConfig, axis: str, value) -> ExperimentConfig:
    """Copy of ``cfg`` with one numeric field set; the master seed is re-derived
    from (master_seed, axis, value)."""
    seed = derive_int(cfg.master_seed, "sweep", axis, value) & 0x7FFFFFFFFFFFFFFF
    if axis in ("k", "n", "trials"):
        return replace(cfg, **{axis: int(value)}, master_seed=seed)
    if axis == "ell":
        return replace(cfg, constraint=replace(cfg.constraint, kind="bits", ell=int(value)), master_seed=seed)
    if axis == "epsilon":
        return replace(cfg, constraint=replace(cfg.constraint, kind="ldp", epsilon=float(value)), master_seed=seed)
    if axis == "gamma":
        return replace(cfg, gammas=(float(value),), master_seed=seed)
    if axis == "alpha":
        new = replace(cfg, source=replace(cfg.source, alpha=float(value)), master_seed=seed)
        if cfg.task != "DL":
            new = replace(new, tester=replace(cfg.with_tester().tester, alpha=float(value)))
        return new
    raise ConfigError(f"unknown sweep axis {axis!r}; choose from {SWEEP_AXES}")


def sweep(template: ExperimentConfig, axis: str, values, workers: int = 1) -> list:
    if axis not in SWEEP_AXES:
        raise ConfigError(f"unknown sweep axis {axis!r}; choose from {SWEEP_AXES}")
    return [run_experiment(with_axis(template, axis, v), workers) for v in values]
