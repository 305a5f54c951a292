from __future__ import annotations

import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import norm

from dualrisk.checks import random_gamble
from dualrisk.errors import DomainError, UnsupportedRepresentation
from dualrisk.numerics import INF
from dualrisk.outcomes import (
    Category,
    ExpTailDiscrete,
    FiniteDiscrete,
    _series,
    affine_exp_map,
    affine_map,
    classify,
    comonotone_combination,
    heavy_tail_law,
    independent_sum,
    mean_preserving_spread,
    mgf_neg,
    moments,
    scale,
    shift,
    truncate,
)

TWO_ATOM = [(2.0, 0.5), (-1.0, 0.5)]


def _heavy_mgf_oracle(alpha: float) -> float:
    """E[exp(-alpha X)] for the n^-2 e^{-3n-3} law, summed by mpmath."""
    mp.mp.dps = 30
    tail = mp.nsum(lambda n: n**-2 * mp.e ** (-3 * n - 3 + alpha * n), [1, mp.inf])
    head = 1 - mp.e**-3 * mp.polylog(2, mp.e**-3)
    return float(tail + head * mp.e ** (-3 * alpha))


def test_atoms_are_merged_and_sorted():
    X = FiniteDiscrete.from_atoms([(1.0, 0.25), (-1.0, 0.5), (1.0, 0.25)])
    assert X.values.tolist() == [-1.0, 1.0]
    assert np.allclose(X.probs, [0.5, 0.5])


def test_mass_must_sum_to_one():
    with pytest.raises(DomainError):
        FiniteDiscrete.from_atoms([(1.0, 0.5), (2.0, 0.6)])


def test_two_atom_moment():
    X = FiniteDiscrete.from_atoms(TWO_ATOM)
    assert mgf_neg(X, 0.2) == pytest.approx(0.9458614020979046, rel=1e-15)
    assert mgf_neg(X, 0.0) == 1.0


def test_series_against_polylog():
    assert _series(2.5, 0.3) == pytest.approx(float(mp.polylog(2.5, mp.e**-0.3)), rel=1e-12)
    # small decay stresses the incomplete-gamma remainder
    assert _series(3.0, 1e-4) == pytest.approx(float(mp.polylog(3, mp.e**-1e-4)), rel=1e-12)
    assert _series(1.0, 0.0) == INF


def test_heavy_tail_moments_and_radius():
    X = heavy_tail_law()
    m = moments(X)
    assert m.mgf_radius == 3.0
    assert m.mean_neg == pytest.approx(0.002542584803085099, rel=1e-12)
    assert classify(X) is Category.A


@pytest.mark.parametrize("alpha", [0.5, 2.0, 2.9, 3.0])
def test_heavy_tail_moment_matches_series_oracle(alpha):
    assert mgf_neg(heavy_tail_law(), alpha) == pytest.approx(_heavy_mgf_oracle(alpha), rel=1e-10)


def test_heavy_tail_moment_diverges_past_radius():
    assert mgf_neg(heavy_tail_law(), 3.0 + 1e-9) == INF


def test_exp_tail_rejects_bad_mass():
    with pytest.raises(DomainError):
        ExpTailDiscrete.build(1.0, 0.0, 0.5, head=[(1.0, 0.5)])


def test_polynomial_tail_is_category_d():
    X = ExpTailDiscrete.build(0.0, 3.0, 0.1, head=[(10.0, "rest")])
    assert X.radius == 0.0
    assert classify(X) is Category.D


def test_categories_of_finite_laws():
    assert classify(FiniteDiscrete.from_atoms(TWO_ATOM)) is Category.A
    assert classify(FiniteDiscrete.from_atoms([(2.0, 0.5), (0.0, 0.5)])) is Category.B
    assert classify(FiniteDiscrete.from_atoms([(1.0, 0.5), (-1.0, 0.5)])) is Category.C


def test_affine_normal_moments_closed_form():
    mu, s = 0.4, 1.3
    m = moments(affine_map(mu, s))
    d = mu / s
    pos = mu * norm.cdf(d) + s * norm.pdf(d)
    assert m.mean_pos == pytest.approx(pos, rel=1e-9)
    assert m.mean_pos - m.mean_neg == pytest.approx(mu, abs=1e-9)


def test_normal_moment_generating_function():
    X = affine_map(0.5, 2.0)
    a = 0.3
    assert mgf_neg(X, a) == pytest.approx(math.exp(-a * 0.5 + 0.5 * (a * 2.0) ** 2), rel=1e-10)


def test_lognormal_loss_has_zero_radius():
    X = affine_exp_map(2.0, -1.0, 0.5)
    assert X.mgf_radius == 0.0
    assert mgf_neg(X, 0.1) == INF
    assert classify(X) is Category.D


def test_scale_shift_on_tail_law():
    X = heavy_tail_law()
    Y = shift(scale(X, 2.0), 1.0)
    assert Y.radius == pytest.approx(1.5)
    # E[exp(-a(2X+1))] = e^{-a} E[exp(-2a X)]
    assert mgf_neg(Y, 1.0) == pytest.approx(math.exp(-1.0) * mgf_neg(X, 2.0), rel=1e-12)


def test_truncation_keeps_mass_and_clamps():
    Xn = truncate(heavy_tail_law(), 20)
    assert isinstance(Xn, FiniteDiscrete)
    assert Xn.probs.sum() == pytest.approx(1.0, abs=1e-12)
    assert Xn.values.min() == -20.0 and Xn.values.max() == 3.0


def test_deep_truncation_keeps_underflowing_atoms():
    Xn = truncate(heavy_tail_law(), 400)
    # mass near e^{-1200} cannot be a double but its log can
    assert Xn.logp[0] < -1000
    assert len(Xn) == 401


def test_independent_sum_convolution():
    X = FiniteDiscrete.from_atoms([(0.0, 0.5), (1.0, 0.5)])
    S = independent_sum(X, X)
    assert S.values.tolist() == [0.0, 1.0, 2.0]
    assert np.allclose(S.probs, [0.25, 0.5, 0.25])


def test_independent_sum_rejects_other_laws():
    with pytest.raises(UnsupportedRepresentation):
        independent_sum(heavy_tail_law(), heavy_tail_law())


def test_mean_preserving_spread():
    X = FiniteDiscrete.from_atoms(TWO_ATOM)
    S = mean_preserving_spread(X, 1, 0.5)
    mean = lambda L: float(np.dot(L.values, L.probs))
    var = lambda L: float(np.dot(L.values**2, L.probs)) - mean(L) ** 2
    assert mean(S) == pytest.approx(mean(X), abs=1e-15)
    assert var(S) > var(X)


def test_comonotone_combination_endpoints():
    X = FiniteDiscrete.from_atoms(TWO_ATOM)
    Y = FiniteDiscrete.from_atoms([(3.0, 0.3), (-0.5, 0.7)])
    C = comonotone_combination(X, Y, 1.0)
    assert np.allclose(C.values, X.values) and np.allclose(C.probs, X.probs)
    mix = comonotone_combination(X, Y, 0.4)
    assert float(np.dot(mix.values, mix.probs)) == pytest.approx(0.4 * 0.5 + 0.6 * 0.55)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.1, 10.0), st.floats(0.01, 2.0))
def test_moment_scales_with_law(seed, k, alpha):
    X = random_gamble(np.random.default_rng(seed))
    assert mgf_neg(scale(X, k), alpha / k) == pytest.approx(mgf_neg(X, alpha), rel=1e-12)
