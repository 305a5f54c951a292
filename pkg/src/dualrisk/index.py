"""The duality index R(X) = 1/alpha_hat, alpha_hat = sup{a >= 0 : E[exp(-a X)] <= 1}."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .numerics import DEFAULT_TOL, INF, Bracket, ExtReal, bisect_monotone, reciprocal
from .outcomes import (
    Category,
    FiniteDiscrete,
    OutcomeDistribution,
    classify,
    comonotone_combination,
    independent_sum,
    mean_preserving_spread,
    mgf_neg,
    scale,
)

BOUNDARY_TOL = 1e-8
HI_LIMIT = 1e8


@dataclass(frozen=True)
class IndexResult:
    alpha_hat: ExtReal
    index: ExtReal
    category: Category
    boundary_value: ExtReal | None = None
    diagnostics: dict = field(default_factory=dict, compare=False)

    @property
    def boundary_status(self) -> str | None:
        """``"lt_one"`` when E[exp(-alpha_hat X)] < 1 strictly, ``"eq_one"`` otherwise."""
        if self.boundary_value is None:
            return None
        return "lt_one" if self.boundary_value < 1.0 - BOUNDARY_TOL else "eq_one"


def _search(X: OutcomeDistribution, tol: float) -> tuple[float, float, dict]:
    accept = lambda a: mgf_neg(X, a) <= 1.0
    hi = 1.0
    while accept(hi):
        hi *= 2.0
        if hi > HI_LIMIT:
            return INF, INF, {"note": "bracket growth exceeded 1e8; treated as riskless"}
    lo, hi = bisect_monotone(accept, Bracket(0.0, hi), tol)
    return lo, hi, {"bracket_hi": hi}


def alpha_hat(X: OutcomeDistribution, tol: float = DEFAULT_TOL) -> ExtReal:
    """sup{a >= 0 : E[exp(-a X)] <= 1}: +inf on category B, 0 on C and D."""
    return duality_index(X, tol).alpha_hat


def duality_index(X: OutcomeDistribution, tol: float = DEFAULT_TOL) -> IndexResult:
    cat = classify(X)
    if cat is Category.B:
        return IndexResult(INF, 0.0, cat)
    if cat in (Category.C, Category.D):
        return IndexResult(0.0, INF, cat)
    lo, hi, diag = _search(X, tol)
    if math.isinf(lo):
        return IndexResult(INF, 0.0, cat, diagnostics=diag)
    a = lo + 0.5 * (hi - lo)
    # evaluated on the accepting side so a jump to +inf just past alpha_hat is not hit
    bv = mgf_neg(X, lo)
    return IndexResult(a, reciprocal(a), cat, bv, diag)


def index_value(X: OutcomeDistribution, tol: float = DEFAULT_TOL) -> ExtReal:
    return duality_index(X, tol).index


# ---------------------------------------------------------------------------
# property checks


@dataclass(frozen=True)
class PropertyCheck:
    name: str
    passed: bool
    lhs: float
    rhs: float
    detail: str = ""


@dataclass
class PropertyReport:
    checks: list[PropertyCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> list[PropertyCheck]:
        return [c for c in self.checks if not c.passed]

    def add(self, *args, **kwargs) -> None:
        self.checks.append(PropertyCheck(*args, **kwargs))


def _index_slack(tol: float, *indices: float) -> float:
    # an alpha error of tol moves R = 1/alpha by about tol * R^2
    return 4.0 * tol * sum(r * r for r in indices if math.isfinite(r)) + 1e-12


def check_properties(
    X: FiniteDiscrete,
    Y: FiniteDiscrete,
    ks: Sequence[float] = (0.5, 2.0, 10.0),
    spread_index: int | None = None,
    spread_eps: float | None = None,
    mix: float = 0.3,
    tol: float = DEFAULT_TOL,
    rng: np.random.Generator | None = None,
    _homogeneity_fault: float = 0.0,
) -> PropertyReport:
    """Check homogeneity, subadditivity, convexity, dominance monotonicity and law invariance.

    ``spread_index`` defaults to the atom with the largest share of
    E[exp(-alpha_hat X)] and ``spread_eps`` to a quarter of X's range. ``_homogeneity_fault`` perturbs the scaled law
    and exists only as a negative control.
    """
    report = PropertyReport()
    rx = duality_index(X, tol)
    ry = duality_index(Y, tol)

    for k in ks:
        kx = scale(X, k * (1.0 + _homogeneity_fault))
        a_k = alpha_hat(kx, tol)
        err = abs(k * a_k - rx.alpha_hat)
        report.add(f"homogeneity k={k:g}", err <= (k + 1.0) * tol, k * a_k, rx.alpha_hat,
                   "k * alpha_hat(kX) vs alpha_hat(X)")

    r_sum = index_value(independent_sum(X, Y), tol)
    bound = rx.index + ry.index
    report.add("subadditivity", r_sum <= bound + _index_slack(tol, r_sum, rx.index, ry.index),
               r_sum, bound, "R(X+Y) <= R(X) + R(Y), X and Y independent")

    r_mix = index_value(comonotone_combination(X, Y, mix), tol)
    convex_bound = mix * rx.index + (1 - mix) * ry.index
    report.add("convexity", r_mix <= convex_bound + _index_slack(tol, r_mix, rx.index, ry.index),
               r_mix, convex_bound, f"comonotone mixture with weight {mix:g}")

    if spread_index is None:
        # the atom carrying most of E[exp(-alpha_hat X)] moves the index the most
        i = int(np.argmax(X.logp - rx.alpha_hat * X.values))
    else:
        i = spread_index
    eps = 0.25 * float(X.values[-1] - X.values[0]) if spread_eps is None else spread_eps
    if eps > 0:
        r_spread = index_value(mean_preserving_spread(X, i, eps), tol)
        report.add("second-order monotonicity", r_spread > rx.index, r_spread, rx.index,
                   f"spread atom {i} by {eps:g} must raise the index")

    rng = rng or np.random.default_rng(0)
    perm = rng.permutation(len(X))
    shuffled = FiniteDiscrete.from_log_atoms(X.values[perm], X.logp[perm], renormalize=False)
    r_perm = index_value(shuffled, tol)
    report.add("law invariance", r_perm == rx.index, r_perm, rx.index, "permuted atom list")
    return report
