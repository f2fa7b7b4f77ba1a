import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robustdist.distributions import DimensionError, tv_distance
from robustdist.emd import (
    FiniteJoint,
    SupportCapExceeded,
    exact_emd_hamming,
    naive_coupling_emd_bound,
    paninski_uniform_emd,
)

from conftest import dists


def brute_force_emd(q1: FiniteJoint, q2: FiniteJoint) -> float:
    """Full transport LP over every atom pair, no shared-mass shortcut."""
    from scipy.optimize import linprog

    atoms = list(itertools.product(*[range(a) for a in q1.alphabet]))
    m = len(atoms)
    cost = np.array([[sum(x != y for x, y in zip(a, b)) for b in atoms] for a in atoms], dtype=float).ravel()
    a_eq = np.zeros((2 * m, m * m))
    for i in range(m):
        a_eq[i, i * m : (i + 1) * m] = 1
        a_eq[m + i, i::m] = 1
    b_eq = np.concatenate([q1.mass, q2.mass])
    res = linprog(cost, A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    return res.fun


@given(dists(max_k=6), st.data())
def test_single_coordinate_equals_tv(p, data):
    q = data.draw(dists(k=p.size))
    val = exact_emd_hamming(FiniteJoint((p.size,), p), FiniteJoint((q.size,), q))
    assert val == pytest.approx(tv_distance(p, q), abs=1e-9)


@settings(max_examples=25)
@given(st.integers(2, 3), st.integers(2, 3), st.data())
def test_matches_brute_force_lp(n, a, data):
    ps = [data.draw(dists(k=a)) for _ in range(n)]
    w = np.asarray(data.draw(st.lists(st.floats(0.01, 1), min_size=a**n, max_size=a**n)))
    q1 = FiniteJoint.product(ps)
    q2 = FiniteJoint((a,) * n, w / w.sum())
    assert exact_emd_hamming(q1, q2) == pytest.approx(brute_force_emd(q1, q2), abs=1e-7)


@given(st.integers(1, 3), st.integers(2, 4), st.data())
def test_product_emd_below_naive_bound(n, a, data):
    ps = [data.draw(dists(k=a)) for _ in range(n)]
    qs = [data.draw(dists(k=a)) for _ in range(n)]
    exact = exact_emd_hamming(FiniteJoint.product(ps), FiniteJoint.product(qs))
    assert exact <= naive_coupling_emd_bound(ps, qs) + 1e-9


def test_two_point_masses():
    # (0,0) vs (1,1): every coupling moves both coordinates
    a = FiniteJoint((2, 2), [1, 0, 0, 0])
    b = FiniteJoint((2, 2), [0, 0, 0, 1])
    assert exact_emd_hamming(a, b) == pytest.approx(2.0)


def test_identical_laws_cost_nothing():
    a = FiniteJoint.product([[0.3, 0.7], [0.5, 0.5]])
    assert exact_emd_hamming(a, a) == 0.0


def test_marginal_of_product():
    j = FiniteJoint.product([[0.1, 0.9], [0.2, 0.3, 0.5]])
    np.testing.assert_allclose(j.marginal(1), [0.2, 0.3, 0.5])


def test_mismatched_spaces():
    with pytest.raises(DimensionError):
        exact_emd_hamming(FiniteJoint((2,), [0.5, 0.5]), FiniteJoint((3,), [1 / 3] * 3))


def test_atom_cap():
    a = FiniteJoint.product([[0.5, 0.5]] * 4)
    with pytest.raises(SupportCapExceeded):
        exact_emd_hamming(a, a, atom_cap=8)


def test_paninski_mixture_has_uniform_marginals():
    # a single sample from the mixture is exactly uniform
    assert paninski_uniform_emd(1, 4, 0.3) == pytest.approx(0.0, abs=1e-12)


def test_paninski_mixture_two_samples_k2():
    # k=2: p_z = (1/2 + a z, 1/2 - a z); mixture of two products vs uniform^2.
    # Mass moves from {01,10} to {00,11}: each diagonal atom gains a^2, cost 1 per unit.
    a = 0.1
    assert paninski_uniform_emd(2, 2, a) == pytest.approx(2 * a**2, abs=1e-12)


def test_naive_bound_examples():
    p = [[0.5, 0.5], [0.2, 0.8]]
    assert naive_coupling_emd_bound(p, p) == 0.0
    assert naive_coupling_emd_bound([[1.0, 0.0], [0.5, 0.5]], [[0.8, 0.2], [0.2, 0.8]]) == pytest.approx(0.5)
    with pytest.raises((ValueError, DimensionError)):
        naive_coupling_emd_bound([[1.0, 0.0]], [[1.0, 0.0], [0.5, 0.5]])
