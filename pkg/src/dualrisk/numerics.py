"""Numerical kernel: extended reals, bracketed root finding, normal quadrature, Lambert W.

Extended reals are plain Python floats where ``math.inf`` stands for +inf.
Every routine here refuses to let a NaN escape: either it is mapped to a
well-defined extended value or a :class:`~dualrisk.errors.NonFinite` is raised.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from numpy.polynomial.hermite_e import hermegauss

from .errors import DomainError, InvalidBracket, NonConvergent, NonFinite, NoSignChange

ExtReal = float

INF: ExtReal = math.inf
OVERFLOW_LOG: float = 700.0
DEFAULT_TOL: float = 1e-10
DEFAULT_NODES: int = 64


# ---------------------------------------------------------------------------
# extended-real helpers


def ext_exp(log_value, threshold: float = OVERFLOW_LOG):
    """exp() that returns +inf once the exponent passes ``threshold``.

    Works on scalars and arrays. NaN exponents raise NonFinite.
    """
    arr = np.asarray(log_value, dtype=float)
    if np.isnan(arr).any():
        raise NonFinite("NaN exponent")
    with np.errstate(over="ignore"):
        out = np.where(arr > threshold, np.inf, np.exp(np.minimum(arr, threshold)))
    if out.ndim == 0:
        return float(out)
    return out


def reciprocal(x: ExtReal) -> ExtReal:
    """1/x on [0, +inf] with 0 -> +inf and +inf -> 0."""
    if x < 0 or math.isnan(x):
        raise DomainError(f"reciprocal defined on [0, inf], got {x}")
    if x == 0:
        return INF
    if math.isinf(x):
        return 0.0
    return 1.0 / x


def ext_add(a: ExtReal, b: ExtReal) -> ExtReal:
    if math.isinf(a) or math.isinf(b):
        if (a == -INF and b == INF) or (a == INF and b == -INF):
            raise NonFinite("inf - inf")
        return INF if INF in (a, b) else -INF
    return a + b


def log_sum_exp(log_terms: np.ndarray) -> float:
    """log(sum(exp(log_terms))) with -inf terms ignored."""
    log_terms = np.asarray(log_terms, dtype=float)
    if log_terms.size == 0:
        return -INF
    top = np.max(log_terms)
    if top == -INF:
        return -INF
    if top == INF:
        return INF
    return float(top + np.log(np.sum(np.exp(log_terms - top))))


# ---------------------------------------------------------------------------
# root finding


@dataclass(frozen=True)
class Bracket:
    lo: float
    hi: float
    f_lo: ExtReal | None = None
    f_hi: ExtReal | None = None

    def __post_init__(self):
        if not (self.lo < self.hi):
            raise InvalidBracket(f"need lo < hi, got [{self.lo}, {self.hi}]")

    @property
    def width(self) -> float:
        return self.hi - self.lo


def bisect_monotone(
    predicate: Callable[[float], bool], bracket: Bracket, tol: float = DEFAULT_TOL
) -> tuple[float, float]:
    """Shrink ``bracket`` around the true->false switch of ``predicate``.

    Returns the final ``(lo, hi)`` with ``predicate(lo)`` true and
    ``predicate(hi)`` false and ``hi - lo <= tol``.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    lo, hi = bracket.lo, bracket.hi
    if not predicate(lo):
        raise InvalidBracket(f"predicate false at lo={lo}")
    if predicate(hi):
        raise InvalidBracket(f"predicate true at hi={hi}")
    while hi - lo > tol:
        mid = lo + 0.5 * (hi - lo)
        if mid <= lo or mid >= hi:
            break
        if predicate(mid):
            lo = mid
        else:
            hi = mid
    return lo, hi


def find_root_monotone(
    predicate: Callable[[float], bool], bracket: Bracket, tol: float = DEFAULT_TOL
) -> float:
    """Locate where a monotone predicate switches from true to false.

    Pure bisection, so the predicate may jump (e.g. from a value below 1 straight
    to +inf). The returned midpoint lies within ``tol / 2`` of the switch.
    """
    lo, hi = bisect_monotone(predicate, bracket, tol)
    return lo + 0.5 * (hi - lo)


def _sign(v: float) -> int:
    return int(v > 0) - int(v < 0)


def find_root_continuous(
    f: Callable[[float], ExtReal],
    bracket: Bracket,
    tol: float = DEFAULT_TOL,
    maxiter: int = 500,
) -> float:
    """Root of a continuous monotone function inside ``bracket``.

    Illinois-modified regula falsi with a bisection safeguard: a step is
    replaced by bisection whenever the secant point is unusable (infinite end
    values, point outside the bracket) or the bracket failed to halve in the
    previous three steps. Terminates when the bracket is narrower than ``tol``.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    a, b = bracket.lo, bracket.hi
    fa = f(a) if bracket.f_lo is None else bracket.f_lo
    fb = f(b) if bracket.f_hi is None else bracket.f_hi
    if math.isnan(fa) or math.isnan(fb):
        raise NonFinite("NaN at bracket end")
    if fa == 0:
        return a
    if fb == 0:
        return b
    if _sign(fa) == _sign(fb):
        raise NoSignChange(f"f({a})={fa} and f({b})={fb} have the same sign")

    ga, gb = fa, fb  # Illinois-weighted copies used for the secant point
    side = 0
    width_mark = b - a
    since_mark = 0
    for _ in range(maxiter):
        if b - a <= tol:
            break
        c = None
        if since_mark < 3 and math.isfinite(ga) and math.isfinite(gb) and ga != gb:
            c = (a * gb - b * ga) / (gb - ga)
            # keep the secant point strictly inside and off the ends
            guard = 0.01 * (b - a)
            if not (a + guard < c < b - guard):
                c = min(max(c, a + guard), b - guard)
        if c is None:
            c = a + 0.5 * (b - a)
            width_mark = b - a
            since_mark = 0
        fc = f(c)
        if math.isnan(fc):
            raise NonFinite(f"f({c}) is NaN")
        if fc == 0:
            return c
        if _sign(fc) == _sign(fa):
            a, fa, ga = c, fc, fc
            if side == -1:
                gb *= 0.5
            side = -1
        else:
            b, fb, gb = c, fc, fc
            if side == 1:
                ga *= 0.5
            side = 1
        since_mark += 1
        if b - a <= 0.5 * width_mark:
            width_mark = b - a
            since_mark = 0
    if b - a > tol:
        raise NonFinite(f"no convergence within {maxiter} iterations, bracket [{a}, {b}]")
    if math.isinf(fa) or math.isinf(fb):
        raise NonFinite(f"bracket collapsed onto a jump to an infinite value near {0.5 * (a + b)}")
    return a + 0.5 * (b - a)


# ---------------------------------------------------------------------------
# Lambert W (principal branch on [0, inf))


def _halley_w(z: np.ndarray, w: np.ndarray, maxiter: int = 60) -> np.ndarray:
    for _ in range(maxiter):
        ew = np.exp(w)
        r = w * ew - z
        wp1 = w + 1.0
        step = r / (ew * wp1 - (w + 2.0) * r / (2.0 * wp1))
        w = w - step
        if np.all(np.abs(step) <= 4e-16 * (1.0 + np.abs(w))):
            break
    return w


def lambert_w(z):
    """Principal branch W(z) for real z >= 0, i.e. the w >= 0 with w e^w = z.

    Accepts scalars or arrays. Uses Halley's iteration started from
    ``log1p(z)`` for small arguments and ``log z - log log z`` for large ones.
    """
    arr = np.asarray(z, dtype=float)
    if np.isnan(arr).any() or (arr < 0).any():
        raise DomainError("lambert_w is defined here only for z >= 0")
    out = np.empty_like(arr)
    inf = np.isinf(arr)
    out[inf] = np.inf
    fin = ~inf
    zf = arr[fin]
    if zf.size:
        big = zf > 3.0
        w0 = np.log1p(zf)
        lz = np.log(np.where(big, zf, 3.0))
        w0 = np.where(big, lz - np.log(lz), w0)
        w = _halley_w(zf, w0)
        w[zf == 0] = 0.0
        out[fin] = w
    if out.ndim == 0:
        return float(out)
    return out


def lambert_w_exp(log_z):
    """W(e^L) computed from L without forming e^L.

    For large L Newton is run on ``w + log w = L``, which never overflows;
    for moderate L this defers to :func:`lambert_w`.
    """
    L = np.asarray(log_z, dtype=float)
    if np.isnan(L).any():
        raise DomainError("NaN argument")
    out = np.empty_like(L)
    small = L <= 500.0
    if small.any():
        out[small] = lambert_w(np.exp(L[small]))
    if (~small).any():
        Lb = L[~small]
        w = Lb - np.log(Lb)
        for _ in range(50):
            step = (w + np.log(w) - Lb) / (1.0 + 1.0 / w)
            w = w - step
            if np.all(np.abs(step) <= 4e-16 * w):
                break
        out[~small] = w
    if out.ndim == 0:
        return float(out)
    return out


# ---------------------------------------------------------------------------
# quadrature in standard-normal coordinates


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Nodes and weights approximating E[g(Z)] for Z ~ N(0, 1)."""

    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        if self.nodes.shape != self.weights.shape or self.nodes.ndim != 1:
            raise DomainError("nodes and weights must be 1-D arrays of equal length")
        if self.nodes.size < 2:
            raise DomainError("a rule needs at least two nodes")
        if abs(float(np.sum(self.weights)) - 1.0) > 1e-12:
            raise DomainError("weights must sum to 1")
        if not np.allclose(np.sort(self.nodes), -np.sort(self.nodes)[::-1], atol=1e-12):
            raise DomainError("nodes must be symmetric about 0")

    @property
    def size(self) -> int:
        return int(self.nodes.size)

    def refined(self) -> "QuadratureRule":
        return gauss_hermite_rule(2 * self.size)


@lru_cache(maxsize=None)
def gauss_hermite_rule(n: int = DEFAULT_NODES) -> QuadratureRule:
    """Probabilists' Gauss-Hermite rule with weights normalized to sum to 1."""
    if n < 2:
        raise ValueError("node count must be >= 2")
    x, w = hermegauss(n)
    w = w / w.sum()
    # symmetrize exactly; hermegauss is symmetric to rounding
    x = 0.5 * (x - x[::-1])
    w = 0.5 * (w + w[::-1])
    x.setflags(write=False)
    w.setflags(write=False)
    return QuadratureRule(x, w)


def _weighted_sum(values: np.ndarray, weights: np.ndarray) -> ExtReal:
    if np.isnan(values).any():
        raise NonFinite("integrand is NaN at a node")
    if np.isposinf(values).any():
        return INF
    return float(np.dot(weights, values))


def gauss_expectation(
    g: Callable[[np.ndarray], np.ndarray],
    rule: QuadratureRule | None = None,
    rel_tol: float | None = None,
) -> ExtReal:
    """sum_i w_i g(z_i) for the given rule; +inf if any node value is +inf.

    With ``rel_tol`` set, the doubled rule is evaluated as well and
    NonConvergent is raised if the two disagree by more than ``rel_tol``
    relative to the larger magnitude (absolute below 1).
    """
    rule = rule or gauss_hermite_rule()
    base = _weighted_sum(np.asarray(g(rule.nodes), dtype=float), rule.weights)
    if rel_tol is None:
        return base
    fine_rule = rule.refined()
    fine = _weighted_sum(np.asarray(g(fine_rule.nodes), dtype=float), fine_rule.weights)
    if math.isinf(base) or math.isinf(fine):
        if base == fine:
            return base
        raise NonConvergent(f"refinement disagrees: {base} vs {fine}")
    scale = max(1.0, abs(base), abs(fine))
    if abs(base - fine) > rel_tol * scale:
        raise NonConvergent(f"refinement disagrees: {base!r} vs {fine!r}")
    return base
