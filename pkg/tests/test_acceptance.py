"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v`` or ``python tests/test_acceptance.py``.
"""

import math
import os
import sys
import time
from itertools import product

import numpy as np
import pytest
import sympy
from scipy import stats

from robustdist import bounds
from robustdist.adversary import (
    AttackBudget,
    CouplingPlan,
    coupling_attack,
    flatten_attack,
    hash_flood_attack,
    null_attack,
    spike_attack,
)
from robustdist.calibration import COMPRESSED_POWER_C, adjusted_distance
from robustdist.channels import Channel, ConstraintSpec, channel_info_matrix, hash_tables, identity_channel, trace_norm
from robustdist.distributions import PaninskiIndex, paninski_dist, sample_values, tv_distance, uniform
from robustdist.emd import FiniteJoint, exact_emd_hamming, naive_coupling_emd_bound
from robustdist.harness import AttackSpec, ExperimentConfig, SourceSpec, emit_report, run_learning_experiment, run_testing_experiment, sweep
from robustdist.rng import derive_rng
from robustdist.testing import DEFAULT_COMPRESSION, TesterConfig, batch_count, goldreich_map, mean_s_uniform, s_statistic

from conftest import ACCEPTANCE_LINES

WORKERS = min(8, os.cpu_count() or 1)
UNCONSTRAINED = ConstraintSpec()


def verdict(name: str, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'}  {name}: {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def fuzz_dist(rng, k, zeros=True):
    w = rng.dirichlet(np.full(k, rng.choice([0.1, 0.5, 1.0, 5.0])))
    if zeros and rng.random() < 0.3:
        w[rng.random(k) < 0.3] = 0.0
        if w.sum() == 0:
            w[rng.integers(k)] = 1.0
    return w / w.sum()


# --- 1. exact invariants ---------------------------------------------------


def test_1a_statistic_perturbation():
    start = time.perf_counter()
    rng = np.random.default_rng(101)
    violations = small_n = 0
    cases = 10_000
    for case in range(cases):
        k = int(rng.integers(2, 60))
        n = int(rng.integers(1, 2 * k + 1)) if case % 2 else int(rng.integers(1, 400))
        gamma = float(rng.choice([rng.random(), rng.random() * 0.1, 1.0, 0.0]))
        y = rng.integers(0, k, n) if rng.random() < 0.5 else sample_values(fuzz_dist(rng, k), n, rng)
        b = AttackBudget(gamma, n)
        kind = case % 6
        if kind == 0:
            z = null_attack(y, b).z
        elif kind == 1:
            z = flatten_attack(y, k, b).z
        elif kind == 2:
            z = spike_attack(y, int(rng.integers(k)), b, k=k).z
        elif kind in (3, 4):
            plan = CouplingPlan.iid(np.bincount(y, minlength=k) / n, fuzz_dist(rng, k), n)
            z = coupling_attack(y, plan, b, rng, strict=kind == 4).z
        else:
            ell = int(rng.integers(1, 4))
            table = hash_tables(int(rng.integers(2**32)), np.arange(n), k, ell)
            y = table[np.arange(n), y].astype(np.int64)
            z = hash_flood_attack(y, table, range(k // 2 + 1), b, rng, ell=ell).z
            k = 2**ell
        delta = abs(s_statistic(y, k) - s_statistic(z, k))
        violations += delta > gamma + 1e-12
        if n <= k:
            small_n += 1
            violations += delta > n * gamma / k + 1e-12
    elapsed = time.perf_counter() - start
    verdict("1a", violations == 0 and elapsed < 60, f"{cases} fuzz cases ({small_n} with n <= k), {violations} violations, {elapsed:.1f}s")


def test_1b_goldreich_map():
    rng = np.random.default_rng(102)
    worst_fix = worst_gap = 0.0
    bad = 0
    for _ in range(1000):
        k = int(rng.integers(1, 51))
        q, p = fuzz_dist(rng, k), fuzz_dist(rng, k)
        g = goldreich_map(q)
        u6 = np.full(6 * k, 1 / (6 * k))
        fix = np.abs(g.push(q) - u6).max()
        gap = tv_distance(p, q) / 3 - tv_distance(g.push(p), u6)
        worst_fix, worst_gap = max(worst_fix, fix), max(worst_gap, gap)
        bad += fix > 1e-12 or gap > 1e-12
    verdict("1b", bad == 0, f"1000 pairs, max |q G - u| = {worst_fix:.1e}, max (tv/3 - tv_G) = {worst_gap:.2e}")


def test_1c_hashing_single_sample_identity():
    p, b = sympy.symbols("p b", positive=True)
    symbolic = sympy.simplify(b / (b - 1) * (p + (1 - p) / b - 1 / b) - p) == 0
    # numeric: average the one-user estimator over every hash function [k] -> [2^ell]
    worst = 0.0
    for k, ell in [(2, 1), (4, 1), (8, 1), (3, 2), (6, 2), (8, 2), (4, 3), (5, 3)]:
        bins = 2**ell
        funcs = np.array(list(product(range(bins), repeat=k)))  # every h, uniformly weighted
        probs = fuzz_dist(np.random.default_rng(k * 7 + ell), k, zeros=False)
        mean = np.zeros(k)
        for x in range(k):
            t = (funcs == funcs[:, [x]]).astype(float)  # T_h(., h(x)) for every h
            raw = bins / (bins - 1) * (t - 1 / bins)
            mean += probs[x] * raw.mean(axis=0)
        worst = max(worst, np.abs(mean - probs).max())
    verdict("1c", symbolic and worst < 1e-12, f"symbolic identity {symbolic}, max exhaustive-average error {worst:.1e} (k <= 8)")


def test_1d_emd():
    rng = np.random.default_rng(104)
    worst_tv = worst_excess = 0.0
    bad = 0
    for _ in range(300):
        a = int(rng.integers(2, 5))
        p, q = fuzz_dist(rng, a), fuzz_dist(rng, a)
        err = abs(exact_emd_hamming(FiniteJoint((a,), p), FiniteJoint((a,), q)) - tv_distance(p, q))
        worst_tv = max(worst_tv, err)
        bad += err > 1e-9
    for _ in range(300):
        n = int(rng.integers(1, 4))
        alph = [int(rng.integers(2, 5)) for _ in range(n)]
        ps = [fuzz_dist(rng, a) for a in alph]
        qs = [fuzz_dist(rng, a) for a in alph]
        excess = exact_emd_hamming(FiniteJoint.product(ps), FiniteJoint.product(qs)) - naive_coupling_emd_bound(ps, qs)
        worst_excess = max(worst_excess, excess)
        bad += excess > 1e-9
    verdict("1d", bad == 0, f"n=1 max |emd - tv| = {worst_tv:.1e}; products max (emd - naive) = {worst_excess:.1e}")


def test_1e_channel_information_matrix():
    rng = np.random.default_rng(105)
    bad = 0
    worst_ratio = 0.0
    for _ in range(1000):
        k = 2 * int(rng.integers(1, 9))
        ell = int(rng.integers(1, 4))
        w = rng.dirichlet(np.full(2**ell, rng.choice([0.05, 0.3, 1.0, 3.0])), size=k)
        det = rng.random(k) < rng.random()
        w[det] = np.eye(2**ell)[rng.integers(0, 2**ell, det.sum())]
        h = channel_info_matrix(Channel(w, constraint=ConstraintSpec("bits", ell=ell))).entries
        tn = trace_norm(h)
        worst_ratio = max(worst_ratio, tn / 2**ell)
        bad += np.linalg.eigvalsh(h).min() < -1e-10 or tn > 2**ell + 1e-9
    verdict("1e", bad == 0, f"1000 channels, max trace_norm / 2^ell = {worst_ratio:.3f}")


# --- 2. the coupling attack reproduces the alternative --------------------


def _homogeneity_pvalue(a, b):
    """Chi-square two-sample homogeneity test on category counts, pooling sparse categories."""
    a, b = np.asarray(a, float), np.asarray(b, float)
    order = np.argsort(-(a + b))
    a, b = a[order], b[order]
    keep = (a + b) >= 10
    table = np.stack([np.append(a[keep], a[~keep].sum()), np.append(b[keep], b[~keep].sum())])
    table = table[:, table.sum(axis=0) > 0]
    return stats.chi2_contingency(table)[1]


def test_2_attack_matches_alternative():
    start = time.perf_counter()
    k, n, trials, alpha = 4, 50, 10_000, 0.25
    u = uniform(k).probs
    attacked, genuine = np.empty((trials, n), np.int64), np.empty((trials, n), np.int64)
    for t in range(trials):
        r = derive_rng(2, "attacked", t)
        y = sample_values(u, n, r)
        target = paninski_dist(PaninskiIndex.random(k, alpha, r)).probs
        attacked[t] = coupling_attack(y, CouplingPlan.iid(u, target, n), AttackBudget(1.0, n), r).z
        r = derive_rng(2, "genuine", t)
        genuine[t] = sample_values(paninski_dist(PaninskiIndex.random(k, alpha, r)).probs, n, r)

    def position_symbol(x):
        return np.stack([np.bincount(x[:, i], minlength=k) for i in range(n)]).ravel()

    def first_pair(x):
        return np.bincount(x[:, 0] * k + x[:, 1], minlength=k * k)

    def pair_imbalance(x):
        counts = np.stack([np.bincount(row, minlength=k) for row in x])
        d = ((counts[:, 0::2] - counts[:, 1::2]) ** 2).sum(axis=1)
        return np.bincount(d, minlength=n * n + 1)

    pvals = {
        "position x symbol": _homogeneity_pvalue(position_symbol(attacked), position_symbol(genuine)),
        "first pair": _homogeneity_pvalue(first_pair(attacked), first_pair(genuine)),
        "pair imbalance": _homogeneity_pvalue(pair_imbalance(attacked), pair_imbalance(genuine)),
    }
    # Bonferroni: the family rejects at 0.01 if any test has p < 0.01/3
    ok = min(pvals.values()) >= 0.01 / len(pvals)
    elapsed = time.perf_counter() - start
    detail = ", ".join(f"{name} p={p:.3f}" for name, p in pvals.items())
    verdict("2", ok and elapsed < 120, f"{detail}; {elapsed:.1f}s")


# --- 3. the attack collapses a tester ----------------------------------------


def test_3_strict_coupling_collapses_testing():
    k, n, alpha = 20, 2000, 0.1
    gamma = 2 * bounds.emd_bound_paninski(n, k, alpha) / n
    cfg = ExperimentConfig(
        task="UT",
        k=k,
        n=n,
        gammas=(gamma,),
        source=SourceSpec("paninski", alpha=alpha),
        null_attack=AttackSpec("coupling", {"target": "paninski", "alpha": alpha, "strict": True}),
        tester=TesterConfig(alpha=alpha),
        tester_gamma=0.0,
        trials=500,
        master_seed=303,
    )
    rep = run_testing_experiment(cfg, workers=WORKERS)
    adv = rep.value("advantage", gamma)
    no_null = 1 - rep.value("yes_rate_null", gamma)
    verdict("3", abs(adv) <= 0.15, f"gamma={gamma:.3f}, P(no|attacked null)={no_null:.3f}, P(no|alt)={rep.value('no_rate_alt', gamma):.3f}, advantage={adv:+.3f}")


# --- 4. unconstrained rates ----------------------------------------------------


def test_4a_unconstrained_learning_rate():
    ratios = {}
    for k, n in [(10, 10_000), (100, 10_000)]:
        src = SourceSpec("worst-of-list", sources=(SourceSpec("uniform"), SourceSpec("paninski", alpha=0.25)))
        cfg = ExperimentConfig(task="DL", k=k, n=n, gammas=(0.0,), source=src, trials=200, master_seed=404)
        ratios[(k, n)] = run_learning_experiment(cfg, workers=WORKERS).value("tv_error", 0.0) / math.sqrt(k / n)
    ok = all(0.5 <= r <= 2 for r in ratios.values())
    verdict("4a", ok, ", ".join(f"k={k},n={n}: risk/sqrt(k/n)={r:.3f}" for (k, n), r in ratios.items()) + " (band [0.5, 2])")


def _crossing(alphas, powers, target=0.9):
    """Smallest alpha where the power curve reaches ``target``, log-linearly interpolated."""
    for i, pw in enumerate(powers):
        if pw >= target:
            if i == 0:
                return alphas[0]
            a0, a1, p0 = alphas[i - 1], alphas[i], powers[i - 1]
            frac = (target - p0) / (pw - p0)
            return math.exp(math.log(a0) + frac * (math.log(a1) - math.log(a0)))
    return math.inf


def test_4b_uniformity_power_curve():
    k, n = 100, 10_000
    parts = []
    ok = True
    for gamma in (0.0, 0.005):
        r = bounds.rate_it(k, n, UNCONSTRAINED, gamma)[0]
        alphas = list(np.geomspace(r / 4, min(0.5, 4 * r), 15))
        template = ExperimentConfig(
            task="UT",
            k=k,
            n=n,
            gammas=(gamma,),
            source=SourceSpec("paninski", alpha=r),
            attack=AttackSpec("flatten"),
            null_attack=AttackSpec("spike", {"target": 0}),
            tester=TesterConfig(alpha=r),
            trials=200,
            master_seed=405,
        )
        reports = sweep(template, "alpha", alphas, workers=WORKERS)
        powers = [rep.value("no_rate_alt", gamma) for rep in reports]
        cross = _crossing(alphas, powers)
        ratio = cross / r
        ok &= 1 / 3 <= ratio <= 3
        parts.append(f"gamma={gamma}: crossing alpha={cross:.4f}, rate={r:.4f}, ratio={ratio:.2f}")
    verdict("4b", ok, "; ".join(parts) + " (band [1/3, 3])")


# --- 5. ell-bit learning -----------------------------------------------------


def test_5a_hashing_learning_slope():
    ns = [2**e for e in range(10, 17)]
    template = ExperimentConfig(task="DL", k=64, n=ns[0], constraint=ConstraintSpec("bits", ell=3), gammas=(0.0,), trials=200, master_seed=505)
    reports = sweep(template, "n", ns, workers=WORKERS)
    risks = [rep.value("tv_error", 0.0) for rep in reports]
    slope = np.polyfit(np.log(ns), np.log(risks), 1)[0]
    verdict("5a", abs(slope + 0.5) <= 0.07, f"log-log slope {slope:.3f} over n=2^10..2^16 (target -0.5 +/- 0.07)")


def test_5b_hash_flood_error_scale():
    k, n, gamma = 64, 2**14, 0.05
    scaled = {}
    floor_ok = True
    parts = []
    for ell in (2, 3, 4):
        cfg = ExperimentConfig(task="DL", k=k, n=n, constraint=ConstraintSpec("bits", ell=ell), gammas=(0.0, gamma), attack=AttackSpec("hash_flood"), trials=100, master_seed=506)
        rep = run_learning_experiment(cfg, workers=WORKERS)
        scale = gamma * math.sqrt(k / 2**ell)
        shift, err = rep.value("attack_shift", gamma), rep.value("tv_error", gamma)
        floor_ok &= shift >= 0.2 * scale and err >= 0.2 * scale
        scaled[ell] = shift / scale
        parts.append(f"ell={ell}: tv_error={err:.3f}, induced={shift:.3f}, induced/(gamma sqrt(k/2^ell))={scaled[ell]:.2f}")
    spread = max(scaled.values()) / min(scaled.values())
    verdict("5b", floor_ok and spread <= 2, "; ".join(parts) + f"; spread {spread:.2f} (<= 2)")


# --- 6. compressed tester ------------------------------------------------------


def test_6_compressed_tester():
    k, ell, n = 60, 2, 60_000
    alpha = adjusted_distance(k, ell, n, 0.0, COMPRESSED_POWER_C)
    cfg = ExperimentConfig(
        task="IT",
        k=k,
        n=n,
        constraint=ConstraintSpec("bits", ell=ell),
        gammas=(0.0,),
        source=SourceSpec("paninski", alpha=alpha),
        tester=TesterConfig(alpha=alpha),
        trials=300,
        master_seed=606,
    )
    start = time.perf_counter()
    rep = run_testing_experiment(cfg, workers=WORKERS)
    elapsed = time.perf_counter() - start
    (yes,) = rep.metric("yes_rate_null", 0.0)
    power = rep.value("no_rate_alt", 0.0)
    batches = batch_count(DEFAULT_COMPRESSION.c2)
    ok = yes.value >= 0.9 - 2 * yes.stderr and power >= 0.9 and elapsed < 600
    verdict("6", ok, f"N={batches} batches, yes-rate {yes.value:.3f} (SE {yes.stderr:.3f}), power {power:.3f} at alpha={alpha:.4f} (C={COMPRESSED_POWER_C}), {elapsed:.1f}s")


# --- 7. exact values ----------------------------------------------------------


def test_7_exact_values():
    checks = {
        "mean_s_uniform(2,2)": mean_s_uniform(2, 2) == 0.25,
        "s_statistic([1,1,2,3],4)": s_statistic([1, 1, 2, 3], 4) == 0.25,
        "H(identity, k=2)": np.array_equal(channel_info_matrix(identity_channel(2)).entries, [[2.0]]),
    }
    p = paninski_dist(PaninskiIndex(np.array([1, -1]), 0.1))
    checks["paninski(k=4, a=0.1, z=(+1,-1))"] = np.allclose(p.probs, [0.3, 0.2, 0.2, 0.3], rtol=0, atol=1e-15)
    checks["tv(paninski, u) == 0.1"] = abs(tv_distance(p, uniform(4)) - 0.1) <= 1e-15
    failed = [name for name, ok in checks.items() if not ok]
    verdict("7", not failed, f"{len(checks) - len(failed)}/{len(checks)} exact values" + (f", failed: {failed}" if failed else ""))


# --- 8. reproducibility ---------------------------------------------------------


def test_8_reproducibility():
    cfgs = [
        ExperimentConfig(task="DL", k=64, n=4096, constraint=ConstraintSpec("bits", ell=3), gammas=(0.0, 0.04), attack=AttackSpec("hash_flood"), trials=40, master_seed=808),
        ExperimentConfig(task="UT", k=20, n=2000, gammas=(0.0, 0.2), source=SourceSpec("paninski", alpha=0.1), null_attack=AttackSpec("coupling", {"alpha": 0.1, "strict": True}), tester_gamma=0.0, trials=40, master_seed=809),
    ]
    identical = True
    for cfg in cfgs:
        runner = run_learning_experiment if cfg.task == "DL" else run_testing_experiment
        outs = set()
        for workers in (1, 1, 8):
            rep = runner(cfg, workers=workers)
            outs.add((emit_report(rep, "csv"), emit_report(rep, "json")))
        identical &= len(outs) == 1
    verdict("8", identical, "CSV and JSON byte-identical across repeated runs and worker counts {1, 8}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
