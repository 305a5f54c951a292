"""Concave utilities with u(0) = 0 and the inverse I_a of t -> -a u'(t) exp(-a u(t)).

``forward_map(U, a, t)`` is the derivative of t -> exp(-a u(t)); it is negative
and strictly increasing, so its inverse ``inverse_map(U, a, x)`` is defined for
x < 0. Linear and CARA utilities use closed forms (the CARA one through the
Lambert W function); anything else goes through :func:`newton_inverse_map`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .errors import ConvergenceError, DomainError, Unsupported
from .numerics import lambert_w_exp


@dataclass(frozen=True)
class Linear:
    """Risk-neutral utility u(x) = x."""

    def u(self, x):
        return np.asarray(x, dtype=float) + 0.0

    def du(self, x):
        return np.ones_like(np.asarray(x, dtype=float))

    def log_du(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    def inv_du(self, m):
        raise Unsupported("a linear utility has a constant marginal and no inverse")

    @property
    def du0(self) -> float:
        return 1.0


@dataclass(frozen=True)
class CARA:
    """u(x) = 1 - exp(-beta x)."""

    beta: float

    def __post_init__(self):
        if not self.beta > 0:
            raise DomainError("CARA needs beta > 0")

    def u(self, x):
        return -np.expm1(-self.beta * np.asarray(x, dtype=float))

    def du(self, x):
        return self.beta * np.exp(-self.beta * np.asarray(x, dtype=float))

    def log_du(self, x):
        return math.log(self.beta) - self.beta * np.asarray(x, dtype=float)

    def inv_du(self, m):
        m = np.asarray(m, dtype=float)
        if (m <= 0).any():
            raise DomainError("marginal utility must be positive")
        return -np.log(m / self.beta) / self.beta

    @property
    def du0(self) -> float:
        return self.beta


@dataclass(frozen=True, eq=False)
class GenericConcave:
    """User-supplied concave utility; callables must be vectorized and re-entrant.

    Concavity is only spot-checked: u' must be positive and non-increasing on
    ``check_points`` points of ``check_range``.
    """

    u_fn: Callable[[np.ndarray], np.ndarray]
    du_fn: Callable[[np.ndarray], np.ndarray]
    inv_du_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None
    check_range: tuple[float, float] = (-10.0, 10.0)
    check_points: int = 1000

    def __post_init__(self):
        if abs(float(self.u_fn(np.array(0.0)))) > 1e-12:
            raise DomainError("utility must satisfy u(0) = 0")
        grid = np.linspace(*self.check_range, self.check_points)
        d = np.asarray(self.du_fn(grid), dtype=float)
        if not np.all(np.isfinite(d)) or (d <= 0).any():
            raise DomainError("u' must be finite and positive on the check grid")
        if (np.diff(d) > 1e-12 * np.maximum(1.0, np.abs(d[:-1]))).any():
            raise DomainError("u' must be non-increasing (u concave) on the check grid")

    def u(self, x):
        return np.asarray(self.u_fn(np.asarray(x, dtype=float)), dtype=float)

    def du(self, x):
        return np.asarray(self.du_fn(np.asarray(x, dtype=float)), dtype=float)

    def log_du(self, x):
        return np.log(self.du(x))

    def inv_du(self, m):
        if self.inv_du_fn is None:
            raise Unsupported("no inverse marginal supplied")
        m = np.asarray(m, dtype=float)
        if (m <= 0).any():
            raise DomainError("marginal utility must be positive")
        return np.asarray(self.inv_du_fn(m), dtype=float)

    @property
    def du0(self) -> float:
        return float(self.du(np.array(0.0)))


Utility = Union[Linear, CARA, GenericConcave]


def eval_u(U: Utility, x):
    return U.u(x)


def eval_du(U: Utility, x):
    return U.du(x)


def inv_marginal(U: Utility, m):
    return U.inv_du(m)


def log_neg_forward(U: Utility, alpha: float, t):
    """log(-forward_map(U, alpha, t)) = log a + log u'(t) - a u(t)."""
    return math.log(alpha) + U.log_du(t) - alpha * U.u(t)


def forward_map(U: Utility, alpha: float, t):
    """-alpha u'(t) exp(-alpha u(t)); negative and strictly increasing in t."""
    if not alpha > 0:
        raise DomainError("alpha must be positive")
    with np.errstate(over="ignore"):
        out = -np.exp(log_neg_forward(U, alpha, t))
    return out if np.ndim(out) else float(out)


def _check_x(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if np.isnan(x).any() or (x >= 0).any():
        raise DomainError("the inverse map is defined on (-inf, 0)")
    return x


def inverse_map(U: Utility, alpha: float, x):
    """I_alpha(x): the t with forward_map(U, alpha, t) = x, for x < 0."""
    if not alpha > 0:
        raise DomainError("alpha must be positive")
    x = _check_x(x)
    if isinstance(U, Linear):
        out = -np.log(-x / alpha) / alpha
    elif isinstance(U, CARA):
        # W argument (-x/beta) e^alpha is formed in log space
        log_z = np.log(-x) - math.log(U.beta) + alpha
        out = (math.log(alpha) - log_z + lambert_w_exp(log_z)) / U.beta
    else:
        out = newton_inverse_map(U, alpha, x)
    return out if np.ndim(out) else float(out)


def _fd_log_du(U: Utility, t: np.ndarray) -> np.ndarray:
    h = 1e-6 * np.maximum(1.0, np.abs(t))
    return (U.log_du(t + h) - U.log_du(t - h)) / (2 * h)


def newton_inverse_map(
    U: Utility,
    alpha: float,
    x,
    maxiter: int = 200,
    d_log_du: Callable[[np.ndarray], np.ndarray] | None = None,
):
    """I_alpha(x) by safeguarded Newton on h(t) = log(-forward(t)) - log(-x).

    h is strictly decreasing. A bracket [lo, hi] with h(lo) > 0 > h(hi) is grown
    around the start point inv_du(-x/alpha) (or 0 when unavailable); Newton
    steps leaving the bracket are replaced by bisection. The derivative of
    log u' defaults to a central difference.
    """
    if not alpha > 0:
        raise DomainError("alpha must be positive")
    x = _check_x(x)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    target = np.log(-x)
    dld = d_log_du or (lambda t: _fd_log_du(U, t))
    h = lambda t: log_neg_forward(U, alpha, t) - target

    try:
        t = np.asarray(U.inv_du(-x / alpha), dtype=float)
    except (Unsupported, DomainError):
        t = np.zeros_like(x)
    t = np.where(np.isfinite(t), t, 0.0)

    lo, hi = t.copy(), t.copy()
    step = np.ones_like(t)
    for _ in range(200):
        bad = h(lo) <= 0
        if not bad.any():
            break
        lo = np.where(bad, lo - step, lo)
        step = np.where(bad, 2 * step, step)
    step = np.ones_like(t)
    for _ in range(200):
        bad = h(hi) >= 0
        if not bad.any():
            break
        hi = np.where(bad, hi + step, hi)
        step = np.where(bad, 2 * step, step)
    if (h(lo) <= 0).any() or (h(hi) >= 0).any():
        raise ConvergenceError("could not bracket the inverse map")

    t = np.clip(t, lo, hi)
    done = np.zeros_like(t, dtype=bool)
    for _ in range(maxiter):
        ht = h(t)
        exact = ht == 0
        lo = np.where(ht > 0, t, lo)
        hi = np.where(ht < 0, t, hi)
        dh = dld(t) - alpha * U.du(t)
        with np.errstate(divide="ignore", invalid="ignore"):
            newton = t - ht / dh
        ok = np.isfinite(newton) & (newton > lo) & (newton < hi)
        new = np.where(ok, newton, 0.5 * (lo + hi))
        new = np.where(exact, t, new)
        scale = np.maximum(1.0, np.abs(new))
        done = exact | (np.abs(new - t) <= 1e-15 * scale) | (hi - lo <= 4e-16 * scale)
        t = new
        if done.all():
            break
    if not done.all():
        raise ConvergenceError(f"inverse map did not converge in {maxiter} iterations")
    return float(t[0]) if scalar else t
