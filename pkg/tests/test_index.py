from __future__ import annotations

import math
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

from dualrisk.checks import random_gamble
from dualrisk.index import alpha_hat, check_properties, duality_index, index_value
from dualrisk.numerics import INF
from dualrisk.outcomes import (
    Category,
    ExpTailDiscrete,
    FiniteDiscrete,
    affine_map,
    heavy_tail_law,
    independent_sum,
    mean_preserving_spread,
    scale,
    truncate,
)

INDEX_GOLDEN = 2.0780869212350273  # 1 / ln golden ratio
TOL = 1e-10


def _brent_alpha(X: FiniteDiscrete) -> float:
    """Independent route: the positive root of log E[exp(-a X)] by Brent's method."""
    f = lambda a: math.log(float(np.dot(X.probs, np.exp(-a * X.values))))
    hi = 1.0
    while f(hi) < 0:
        hi *= 2
    return brentq(f, 1e-9, hi, xtol=1e-14, rtol=1e-14)


def test_two_atom_index():
    res = duality_index(FiniteDiscrete.from_atoms([(2.0, 0.5), (-1.0, 0.5)]))
    assert res.index == pytest.approx(INDEX_GOLDEN, abs=1e-8)
    assert res.category is Category.A
    assert res.boundary_status == "eq_one"


def test_heavy_tail_example_stops_at_radius():
    t0 = time.perf_counter()
    res = duality_index(heavy_tail_law())
    assert time.perf_counter() - t0 < 1.0
    assert abs(res.alpha_hat - 3.0) < 1e-6
    assert res.boundary_value == pytest.approx(0.0820195448543844, rel=1e-9)
    assert res.boundary_status == "lt_one"


def test_nonnegative_law_has_zero_index():
    res = duality_index(FiniteDiscrete.from_atoms([(0.0, 0.5), (2.0, 0.5)]))
    assert res.alpha_hat == INF and res.index == 0.0
    assert res.category is Category.B


def test_nonpositive_mean_has_infinite_index():
    res = duality_index(FiniteDiscrete.from_atoms([(1.0, 0.5), (-1.0, 0.5)]))
    assert res.alpha_hat == 0.0 and res.index == INF


def test_polynomial_tail_has_infinite_index():
    X = ExpTailDiscrete.build(0.0, 3.0, 0.1, head=[(10.0, "rest")])
    assert index_value(X) == INF


def test_normal_law_index():
    # E[exp(-a(mu + s Z))] = 1  <=>  a = 2 mu / s^2
    mu, s = 0.3, 1.5
    assert index_value(affine_map(mu, s)) == pytest.approx(s * s / (2 * mu), rel=1e-8)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_agrees_with_brent_route(seed):
    X = random_gamble(np.random.default_rng(seed))
    assert alpha_hat(X, 1e-12) == pytest.approx(_brent_alpha(X), rel=1e-9, abs=1e-11)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([0.5, 2.0, 10.0]))
def test_positive_homogeneity(seed, k):
    X = random_gamble(np.random.default_rng(seed))
    assert abs(k * alpha_hat(scale(X, k), TOL) - alpha_hat(X, TOL)) <= (k + 1) * TOL


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_subadditivity(seed):
    rng = np.random.default_rng(seed)
    X, Y = random_gamble(rng), random_gamble(rng)
    rs = index_value(independent_sum(X, Y), TOL)
    assert rs <= index_value(X, TOL) + index_value(Y, TOL) + 1e-6


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.05, 2.0))
def test_spread_of_loss_atom_increases_index(seed, eps):
    X = random_gamble(np.random.default_rng(seed))
    i = int(np.argmin(X.values))
    assert index_value(mean_preserving_spread(X, i, eps), TOL) > index_value(X, TOL)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_permutation_invariance(seed):
    rng = np.random.default_rng(seed)
    X = random_gamble(rng)
    perm = rng.permutation(len(X))
    Y = FiniteDiscrete.from_atoms(zip(X.values[perm], X.probs[perm]))
    assert index_value(Y, TOL) == pytest.approx(index_value(X, TOL), rel=1e-9)


def test_check_properties_passes_on_gambles():
    rng = np.random.default_rng(11)
    rep = check_properties(random_gamble(rng), random_gamble(rng), rng=rng)
    assert rep.passed, rep.failures


def test_check_properties_detects_fault():
    rng = np.random.default_rng(11)
    rep = check_properties(random_gamble(rng), random_gamble(rng), rng=rng, _homogeneity_fault=1e-3)
    assert not rep.passed
    assert all(c.name.startswith("homogeneity") for c in rep.failures)


def test_truncations_approach_limit_monotonically():
    # truncation removes the far losses, so the index approaches 1/3 from below
    gaps = [1 / 3 - index_value(truncate(heavy_tail_law(), n)) for n in (10, 50, 200, 1000, 5000)]
    assert all(g > 0 for g in gaps)
    assert all(a > b for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] < 5e-4


@pytest.mark.parametrize("n", [50, 100])
def test_truncated_index_agrees_with_brent_route(n):
    Xn = truncate(heavy_tail_law(), n)
    assert alpha_hat(Xn, 1e-12) == pytest.approx(_brent_alpha(Xn), rel=1e-9)
