from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dualrisk.errors import DomainError, Unsupported
from dualrisk.utility import (
    CARA,
    GenericConcave,
    Linear,
    forward_map,
    inverse_map,
    newton_inverse_map,
)

X_GRID = -np.logspace(-3, 3, 30)


def test_linear_inverse_closed_form():
    assert inverse_map(Linear(), 1.0, -1.0) == 0.0
    assert inverse_map(Linear(), 2.0, -1.0) == pytest.approx(-math.log(0.5) / 2.0)


def test_linear_has_no_inverse_marginal():
    with pytest.raises(Unsupported):
        Linear().inv_du(1.0)


def test_cara_basics():
    U = CARA(2.0)
    assert U.u(0.0) == 0.0
    assert U.du0 == 2.0
    assert U.inv_du(U.du(0.7)) == pytest.approx(0.7)
    with pytest.raises(DomainError):
        CARA(0.0)


@pytest.mark.parametrize("alpha", [0.25, 1.0, 4.0])
@pytest.mark.parametrize("beta", [0.5, 1.0, 3.0])
def test_cara_closed_form_matches_newton(alpha, beta):
    U = CARA(beta)
    diff = np.abs(inverse_map(U, alpha, X_GRID) - newton_inverse_map(U, alpha, X_GRID))
    assert diff.max() < 1e-8


@settings(max_examples=200, deadline=None)
@given(st.floats(0.05, 5.0), st.floats(0.05, 8.0), st.floats(-6.0, 6.0))
def test_cara_round_trip(beta, alpha, log_x):
    U = CARA(beta)
    x = -math.exp(log_x)
    t = inverse_map(U, alpha, x)
    assert forward_map(U, alpha, t) == pytest.approx(x, rel=1e-11)


def test_inverse_map_domain():
    with pytest.raises(DomainError):
        inverse_map(CARA(1.0), 1.0, 0.5)
    with pytest.raises(DomainError):
        inverse_map(CARA(1.0), 0.0, -0.5)


def test_forward_is_increasing():
    t = np.linspace(-3, 3, 101)
    assert np.all(np.diff(forward_map(CARA(1.3), 0.7, t)) > 0)


def _generic_cara(beta):
    return GenericConcave(lambda x: -np.expm1(-beta * x), lambda x: beta * np.exp(-beta * x),
                          lambda m: -np.log(m / beta) / beta)


def test_generic_utility_uses_newton_and_matches_closed_form():
    G = _generic_cara(1.5)
    assert np.max(np.abs(inverse_map(G, 0.8, X_GRID) - inverse_map(CARA(1.5), 0.8, X_GRID))) < 1e-8


def test_generic_without_inverse_marginal():
    G = GenericConcave(lambda x: -np.expm1(-x), lambda x: np.exp(-x))
    assert abs(inverse_map(G, 1.0, -0.3) - inverse_map(CARA(1.0), 1.0, -0.3)) < 1e-8


def test_generic_validation():
    with pytest.raises(DomainError):
        GenericConcave(lambda x: x + 1.0, lambda x: np.ones_like(x))
    with pytest.raises(DomainError):
        GenericConcave(lambda x: np.expm1(x), lambda x: np.exp(x))
