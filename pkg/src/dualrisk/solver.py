"""Complete-market portfolio selection under the duality index.

The problem  min R(u(X - l))  s.t.  E[rho X] = x  is rewritten with Y = X - l and
surplus y = l - x. For 0 < y < y_hat it is solved by a family of exponential
utility problems

    phi(a) = min E[exp(-a u(Y))]  s.t.  E[rho Y] = -y,

whose minimizer is Y_a = I_a(lam rho) with lam < 0 fixed by the budget. The
optimal risk aversion a* is the unique positive root of phi(a) = 1 and the
optimal index value is V(y) = 1/a*.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import BracketFailure, DomainError, Infeasible, NoBracket, NonConvergent
from .market import DiscreteKernel, LognormalKernel, Market, entropy, kernel_expectation
from .numerics import (
    INF,
    Bracket,
    bisect_monotone,
    ext_exp,
    find_root_continuous,
)
from .outcomes import FiniteDiscrete, NormalMap, OutcomeDistribution
from .utility import CARA, Linear, Utility, forward_map, inverse_map

LAMBDA_GROWTH_LIMIT = 60
OUTER_HALVINGS = 60
NEAR_THRESHOLD = 0.98
THRESHOLD_SHIFT = 1e-8
INNER_TOL = 1e-13
OUTER_RTOL = 1e-12


class ConditioningWarning(UserWarning):
    """Surplus close to the threshold y_hat; V(y) blows up there."""


class Feasibility(str, Enum):
    RISKLESS = "RisklessBenchmark"
    SOLVED = "Solved"
    INFEASIBLE = "Infeasible"


@dataclass(frozen=True)
class ProblemSpec:
    utility: Utility
    market: Market
    endowment: float
    benchmark: float

    @property
    def surplus(self) -> float:
        return self.benchmark - self.endowment


# ---------------------------------------------------------------------------
# well-posedness threshold


def _generic_threshold(U: Utility, M: Market) -> tuple[float, dict]:
    """y_hat = -lim_{lam -> lam_hat+} E[rho (u')^{-1}(lam rho)] for strictly concave u."""

    def positive_utility(log_lam: float) -> bool:
        m = math.exp(log_lam)
        return kernel_expectation(M, lambda r: U.u(U.inv_du(m * r)), check=False) > 0

    lo, hi = -30.0, 0.0
    while not positive_utility(lo):
        lo -= 10.0
        if lo < -700:
            return 0.0, {"lambda_hat": 0.0}
    while positive_utility(hi):
        hi += 2.0
        if hi > 700:
            return INF, {"lambda_hat": INF}
    lo, hi = bisect_monotone(positive_utility, Bracket(lo, hi), 1e-13)
    lam_hat = math.exp(0.5 * (lo + hi))

    def candidate(shift: float) -> float:
        m = lam_hat * (1.0 + shift)
        return -kernel_expectation(M, lambda r: U.inv_du(m * r), weighted=True)

    y1 = candidate(THRESHOLD_SHIFT)
    y2 = candidate(10 * THRESHOLD_SHIFT)
    return y1, {
        "lambda_hat": lam_hat,
        # the limit is linear in the shift, so (y2 - y1)/9 estimates the bias of y1
        "richardson_error": abs(y2 - y1) / 9.0,
        "extrapolated": y1 - (y2 - y1) / 9.0,
    }


def threshold(U: Utility, M: Market) -> tuple[float, dict]:
    """y_hat together with how it was obtained."""
    if isinstance(U, Linear):
        # any Y with E[Y] > 0 can be pushed to arbitrary cost as long as rho varies
        return (0.0 if M.is_degenerate else INF), {"method": "linear"}
    if isinstance(U, CARA) and isinstance(M, LognormalKernel):
        return M.sigma2 / (2.0 * U.beta), {"method": "closed form sigma2/(2 beta)"}
    val, diag = _generic_threshold(U, M)
    diag["method"] = "limit at lambda_hat (1 + 1e-8)"
    return val, diag


def y_hat(U: Utility, M: Market) -> float:
    return threshold(U, M)[0]


# ---------------------------------------------------------------------------
# inner problem


@dataclass(frozen=True, eq=False)
class InnerSolution:
    alpha: float
    lam: float
    phi: float
    y: float
    utility: Utility
    market: Market
    diagnostics: dict = field(default_factory=dict)

    def payoff(self, rho):
        """Y_alpha(rho) = I_alpha(lam rho)."""
        return inverse_map(self.utility, self.alpha, self.lam * np.asarray(rho, dtype=float))

    def residuals(self, refined: bool = False) -> dict:
        rho, w = self.market.support(refined)
        Y = self.payoff(rho)
        fwd = forward_map(self.utility, self.alpha, Y)
        return {
            "budget": float(np.dot(w, rho * Y)) + self.y,
            "foc": float(np.max(np.abs(fwd / (self.lam * rho) - 1.0))),
        }


def _budget_gap(U: Utility, alpha: float, y: float, rho: np.ndarray, w: np.ndarray):
    def gap(log_neg_lam: float) -> float:
        Y = inverse_map(U, alpha, -math.exp(log_neg_lam) * rho)
        return float(np.dot(w, rho * Y)) + y
    return gap


def _phi_value(U: Utility, alpha: float, Y: np.ndarray, w: np.ndarray) -> float:
    vals = ext_exp(-alpha * U.u(Y))
    if np.isposinf(vals).any():
        return INF
    return float(np.dot(w, vals))


def solve_inner(U: Utility, M: Market, alpha: float, y: float, tol: float = INNER_TOL) -> InnerSolution:
    """Solve min E[exp(-alpha u(Y))] s.t. E[rho Y] = -y.

    The multiplier is searched as s = log(-lam): the budget E[rho I_alpha(lam rho)]
    increases in lam, so the gap decreases in s. The bracket starts at
    lam in [-1, -1e-8] and each end is pushed out by a factor 10 as needed.
    """
    if not alpha > 0:
        raise DomainError("alpha must be positive")
    if not y > 0:
        raise DomainError("surplus must be positive")
    rho, w = M.support()
    gap = _budget_gap(U, alpha, y, rho, w)
    s_lo, s_hi = math.log(1e-8), 0.0
    g_lo, g_hi = gap(s_lo), gap(s_hi)
    grow = 0
    while not g_lo > 0:
        s_lo -= math.log(10.0)
        g_lo = gap(s_lo)
        grow += 1
        if grow > LAMBDA_GROWTH_LIMIT:
            raise BracketFailure(f"budget stays below -y as lam -> 0- (alpha={alpha:g}, y={y:g})")
    grow = 0
    while not g_hi < 0:
        s_hi += math.log(10.0)
        g_hi = gap(s_hi)
        grow += 1
        if grow > LAMBDA_GROWTH_LIMIT:
            raise BracketFailure(f"budget stays above -y as lam -> -inf (alpha={alpha:g}, y={y:g})")
    s = find_root_continuous(gap, Bracket(s_lo, s_hi, g_lo, g_hi), tol)
    lam = -math.exp(s)
    Y = inverse_map(U, alpha, lam * rho)
    phi_val = _phi_value(U, alpha, Y, w)
    diag = {"lambda_bracket": (-math.exp(s_lo), -math.exp(s_hi))}
    return InnerSolution(alpha, lam, phi_val, y, U, M, diag)


def phi(U: Utility, M: Market, alpha: float, y: float) -> float:
    """Value of the inner problem; phi(0) = 1 by convention."""
    if alpha == 0:
        return 1.0
    return solve_inner(U, M, alpha, y).phi


def phi_lower_bound(U: Utility, M: Market, alpha: float, y: float) -> float:
    """exp(alpha u'(0) y - E[rho ln rho]), a lower bound on phi(alpha)."""
    return math.exp(alpha * U.du0 * y - entropy(M))


def _refinement_report(inner: InnerSolution) -> dict:
    out = {"budget_residual": abs(inner.residuals()["budget"]),
           "foc_residual": inner.residuals()["foc"]}
    if isinstance(inner.market, LognormalKernel):
        rho, w = inner.market.support(refined=True)
        Y = inner.payoff(rho)
        out["phi_refined"] = _phi_value(inner.utility, inner.alpha, Y, w)
        out["budget_refined"] = abs(float(np.dot(w, rho * Y)) + inner.y)
    return out


# ---------------------------------------------------------------------------
# outer problem


def solve_outer(U: Utility, M: Market, y: float, rtol: float = OUTER_RTOL) -> tuple[float, InnerSolution]:
    """The unique positive root a* of phi(a) = 1 and the inner solution there.

    The root lies in (0, E[rho ln rho]/(y u'(0))]: phi is at least 1 at the
    upper end and below 1 for small a. The lower end starts at half the upper
    one and is halved until phi < 1 is observed.
    """
    y = float(y)
    yh, _ = threshold(U, M)
    if not y > 0:
        raise DomainError("solve_outer needs a positive surplus")
    if not y < yh:
        raise Infeasible(y, yh)
    if math.isfinite(yh) and y > NEAR_THRESHOLD * yh:
        warnings.warn(f"y={y:g} is within 2% of y_hat={yh:g}; V(y) is ill-conditioned here",
                      ConditioningWarning, stacklevel=2)
    a_max = entropy(M) / (y * U.du0)
    top = solve_inner(U, M, a_max, y)
    if top.phi <= 1.0 + 1e-12:
        if top.phi < 1.0 - 1e-9:
            raise NoBracket(f"phi({a_max:g}) = {top.phi!r} < 1 at the upper bound")
        top.diagnostics.update(outer_bracket=(a_max, a_max), outer="upper bound binds")
        return a_max, top

    lo = 0.5 * a_max
    for halvings in range(OUTER_HALVINGS + 1):
        low = solve_inner(U, M, lo, y)
        if low.phi < 1.0:
            break
        lo *= 0.5
    else:
        raise NoBracket(f"phi >= 1 down to alpha={lo:g}; small-alpha side not observed "
                        f"(relative distance to y_hat {(yh - y) / yh:.3g})")

    cache: dict[float, InnerSolution] = {lo: low, a_max: top}

    def excess(a: float) -> float:
        if a not in cache:
            cache[a] = solve_inner(U, M, a, y)
        return cache[a].phi - 1.0

    a_star = find_root_continuous(
        excess, Bracket(lo, a_max, low.phi - 1.0, top.phi - 1.0), rtol * a_max
    )
    inner = cache.get(a_star) or solve_inner(U, M, a_star, y)
    inner.diagnostics.update(outer_bracket=(lo, a_max), halvings=halvings,
                             outer_evaluations=len(cache))
    return a_star, inner


# ---------------------------------------------------------------------------
# full pipeline


@dataclass(frozen=True, eq=False)
class PortfolioSolution:
    feasibility: Feasibility
    y: float
    y_hat: float
    alpha_star: float
    lambda_star: float | None
    value: float
    endowment: float
    benchmark: float
    inner: InnerSolution | None = None
    diagnostics: dict = field(default_factory=dict)

    def relative_payoff(self, rho):
        """Y*(rho) = X*(rho) - benchmark."""
        rho = np.asarray(rho, dtype=float)
        if self.feasibility is Feasibility.SOLVED:
            return self.inner.payoff(rho)
        if self.feasibility is Feasibility.RISKLESS:
            return np.full_like(rho, -self.y) if rho.ndim else -self.y
        raise Infeasible(self.y, self.y_hat)

    def payoff(self, rho):
        """X*(rho); the riskless case pays the endowment in every state."""
        return self.relative_payoff(rho) + self.benchmark

    def closed_form(self) -> str | None:
        if self.feasibility is Feasibility.RISKLESS:
            return f"X(rho) = {self.endowment:.12g}"
        if self.feasibility is not Feasibility.SOLVED:
            return None
        U = self.inner.utility
        if isinstance(U, Linear):
            slope = self.y / entropy(self.inner.market)
            return f"X(rho) = {self.endowment + self.y:.12g} - {slope:.12g} ln(rho)"
        if isinstance(U, CARA):
            b, a, lam = U.beta, self.alpha_star, self.lambda_star
            return (f"X(rho) = {self.benchmark:.12g} + (1/{b:.12g}) [W(z) - ln z + ln {a:.12g}], "
                    f"z = {-lam / b:.12g} e^{a:.12g} rho")
        return None


def solve_portfolio(spec: ProblemSpec, rtol: float = OUTER_RTOL) -> PortfolioSolution:
    U, M = spec.utility, spec.market
    y = spec.surplus
    common = dict(y=y, endowment=spec.endowment, benchmark=spec.benchmark)
    if y <= 0:
        return PortfolioSolution(Feasibility.RISKLESS, y_hat=y_hat(U, M), alpha_star=INF,
                                 lambda_star=None, value=0.0, **common)
    yh, ydiag = threshold(U, M)
    if not y < yh:
        return PortfolioSolution(Feasibility.INFEASIBLE, y_hat=yh, alpha_star=0.0,
                                 lambda_star=None, value=INF, diagnostics={"y_hat": ydiag},
                                 **common)
    a_star, inner = solve_outer(U, M, y, rtol)
    diag = {"y_hat": ydiag, **inner.diagnostics, **_refinement_report(inner)}
    return PortfolioSolution(Feasibility.SOLVED, y_hat=yh, alpha_star=a_star,
                             lambda_star=inner.lam, value=1.0 / a_star, inner=inner,
                             diagnostics=diag, **common)


@dataclass(frozen=True)
class CurvePoint:
    y: float
    value: float
    alpha_star: float
    feasibility: Feasibility


def risk_curve(U: Utility, M: Market, ys: Sequence[float], rtol: float = OUTER_RTOL) -> list[CurvePoint]:
    """V(y) and a*(y) on a grid, in ascending y; points at or beyond y_hat are Infeasible."""
    yh = y_hat(U, M)
    out = []
    for y in sorted(float(v) for v in ys):
        if y <= 0:
            out.append(CurvePoint(y, 0.0, INF, Feasibility.RISKLESS))
        elif not y < yh:
            out.append(CurvePoint(y, INF, 0.0, Feasibility.INFEASIBLE))
        else:
            try:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", ConditioningWarning)
                    a, _ = solve_outer(U, M, y, rtol)
            except NoBracket:
                if not y > NEAR_THRESHOLD * yh:
                    raise
                # V beyond what the quadrature resolves; reported as at the threshold
                out.append(CurvePoint(y, INF, 0.0, Feasibility.INFEASIBLE))
                continue
            out.append(CurvePoint(y, 1.0 / a, a, Feasibility.SOLVED))
    return out


def utility_outcome_law(inner: InnerSolution) -> OutcomeDistribution:
    """The law of u(Y_alpha(rho)) built on the kernel's own representation."""
    U, M = inner.utility, inner.market
    if isinstance(M, DiscreteKernel):
        vals = U.u(inner.payoff(M.values))
        return FiniteDiscrete.from_atoms(zip(np.atleast_1d(vals), M.probs))
    lam, alpha = inner.lam, inner.alpha
    g = lambda z: U.u(inverse_map(U, alpha, lam * M.rho_of_z(z)))
    # u(Y) falls at most linearly in z for the supported utilities
    return NormalMap(g, INF, M.nodes, "u(Y*)")


def payoff_grid(M: Market, points: int = 41) -> np.ndarray:
    """Log-spaced kernel values: mu +- 3 sigma for lognormal, support hull for discrete."""
    if isinstance(M, LognormalKernel):
        lo, hi = M.mu - 3 * M.sigma, M.mu + 3 * M.sigma
    else:
        lo, hi = math.log(M.values[0]), math.log(M.values[-1])
    return np.exp(np.linspace(lo, hi, points))
