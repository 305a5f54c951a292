"""Outcome distributions, the exponential moment E[exp(-a X)], and category tags.

Three representations are supported:

* :class:`FiniteDiscrete`  finitely many atoms, stored with log-probabilities so
  that truncations of heavy-loss laws keep atoms whose mass underflows a double;
* :class:`ExpTailDiscrete` a lattice loss tail ``P(X = offset - step*n) = c n^-p e^-rn``
  for ``n >= 1`` plus explicit head atoms;
* :class:`NormalMap`       ``X = g(Z)`` for a standard normal ``Z``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Sequence, Union

import mpmath
import numpy as np
from scipy import integrate, optimize

from .errors import DomainError, NonConvergent, UnsupportedRepresentation
from .numerics import (
    DEFAULT_NODES,
    INF,
    ExtReal,
    ext_exp,
    gauss_hermite_rule,
    log_sum_exp,
)

PROB_TOL = 1e-9


class Category(str, Enum):
    A = "A"  # moderate risk, 0 < index < inf
    B = "B"  # no loss, index 0
    C = "C"  # expected loss dominates, index inf
    D = "D"  # loss without exponential moments, index inf


@dataclass(frozen=True)
class MomentSummary:
    mean_pos: ExtReal
    mean_neg: ExtReal
    mgf_radius: ExtReal


# ---------------------------------------------------------------------------
# finite discrete


def _canonical(values: np.ndarray, logp: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    keep = logp > -INF
    values, logp = values[keep], logp[keep]
    order = np.argsort(values, kind="stable")
    values, logp = values[order], logp[order]
    uniq, start = np.unique(values, return_index=True)
    if uniq.size != values.size:
        merged = np.array([log_sum_exp(seg) for seg in np.split(logp, start[1:])])
        values, logp = uniq, merged
    values.setflags(write=False)
    logp.setflags(write=False)
    return values, logp


@dataclass(frozen=True, eq=False)
class FiniteDiscrete:
    """Law with finitely many atoms; ``values`` sorted and distinct."""

    values: np.ndarray
    logp: np.ndarray

    def __post_init__(self):
        if self.values.size == 0:
            raise DomainError("a discrete law needs at least one atom")
        if not np.all(np.isfinite(self.values)):
            raise DomainError("atom values must be finite")

    @classmethod
    def from_log_atoms(
        cls, values: Iterable[float], logp: Iterable[float], renormalize: bool = True
    ) -> "FiniteDiscrete":
        v = np.asarray(list(values), dtype=float)
        lp = np.asarray(list(logp), dtype=float)
        if v.shape != lp.shape:
            raise DomainError("values and log-probabilities differ in length")
        if np.isnan(lp).any() or (lp > 0).any():
            raise DomainError("log-probabilities must be <= 0")
        v, lp = _canonical(v, lp)
        if v.size == 0:
            raise DomainError("a discrete law needs at least one atom of positive mass")
        total = log_sum_exp(lp)
        if abs(math.expm1(total)) > PROB_TOL:
            raise DomainError(f"probabilities sum to {math.exp(total):.12g}, not 1")
        if renormalize:
            lp = lp - total
            lp.setflags(write=False)
        return cls(v, lp)

    @classmethod
    def from_atoms(cls, atoms: Iterable[Sequence[float]]) -> "FiniteDiscrete":
        """Build from ``[(value, prob), ...]``; probabilities must sum to 1 within 1e-9."""
        atoms = [tuple(a) for a in atoms]
        if not atoms:
            raise DomainError("a discrete law needs at least one atom")
        v = [float(a[0]) for a in atoms]
        p = np.asarray([float(a[1]) for a in atoms])
        if np.isnan(p).any() or (p < 0).any() or (p > 1 + PROB_TOL).any():
            raise DomainError("probabilities must lie in [0, 1]")
        with np.errstate(divide="ignore"):
            lp = np.log(np.minimum(p, 1.0))
        return cls.from_log_atoms(v, lp)

    @property
    def probs(self) -> np.ndarray:
        return np.exp(self.logp)

    @property
    def atoms(self) -> list[tuple[float, float]]:
        return list(zip(self.values.tolist(), self.probs.tolist()))

    def __len__(self) -> int:
        return int(self.values.size)

    def __repr__(self) -> str:
        body = ", ".join(f"{v:g}: {p:.6g}" for v, p in self.atoms[:8])
        more = ", ..." if len(self) > 8 else ""
        return f"FiniteDiscrete({{{body}{more}}})"


# ---------------------------------------------------------------------------
# exponential-tail lattice


def _shifted_series(q: float, a: float, start: int, rel: float = 1e-17,
                    max_terms: int = 1 << 17) -> ExtReal:
    """sum_{n >= start} n^-q exp(-a (n - start)) for a >= 0.

    Direct summation in growing chunks until the terms are negligible and
    decreasing; past ``max_terms`` the remainder is replaced by the integral
    from ``N + 1/2`` (midpoint rule), which is accurate for these smooth tails.
    """
    if a < 0 or (a == 0 and q <= 1):
        return INF
    total = 0.0
    n0 = start
    chunk = 1024
    while True:
        n = np.arange(n0, n0 + chunk, dtype=float)
        terms = np.exp(-q * np.log(n) - a * (n - start))
        total += math.fsum(terms)
        last_n = n0 + chunk - 1
        decreasing = (-q / last_n - a) < 0
        if decreasing and terms[-1] <= rel * total:
            return total
        n0 += chunk
        if n0 - start >= max_terms:
            break
        chunk = min(2 * chunk, 1 << 18)
    lo = n0 - 0.5
    if a == 0:
        return total + lo ** (1.0 - q) / (q - 1.0)
    # int_lo^inf t^-q e^{-a(t - start)} dt = e^{a start} a^{q-1} Gamma(1 - q, a lo)
    upper = mpmath.gammainc(1.0 - q, a * lo)
    log_tail = a * start + (q - 1.0) * math.log(a) + float(mpmath.log(upper))
    return total + math.exp(log_tail)


def _series(q: float, a: float) -> ExtReal:
    """sum_{n >= 1} n^-q e^{-a n}."""
    s = _shifted_series(q, a, 1)
    return s if math.isinf(s) else s * math.exp(-a)


@dataclass(frozen=True, eq=False)
class ExpTailDiscrete:
    """Head atoms plus the loss tail ``P(X = offset - step*n) = c n^-p e^-rn``, n >= 1.

    ``r = 0`` is allowed (polynomial tail, needs ``p > 1``); such laws have no
    exponential moment on the loss side.
    """

    r: float
    p: float
    c: float
    head: FiniteDiscrete | None
    head_mass: float
    step: float = 1.0
    offset: float = 0.0

    @classmethod
    def build(
        cls,
        r: float,
        p: float,
        c: float,
        head: Iterable[Sequence] = (),
        step: float = 1.0,
        offset: float = 0.0,
    ) -> "ExpTailDiscrete":
        """Validate and normalize. One head probability may be ``None`` or ``"rest"``."""
        if r < 0 or p < 0 or c <= 0 or step <= 0:
            raise DomainError("need r >= 0, p >= 0, c > 0, step > 0")
        if r == 0 and p <= 1:
            raise DomainError("r = 0 needs p > 1 for a finite tail mass")
        tail_mass = c * _series(p, r)
        head = [tuple(h) for h in head]
        rest = [i for i, h in enumerate(head) if h[1] is None or h[1] == "rest"]
        if len(rest) > 1:
            raise DomainError("at most one head atom may take the remaining mass")
        fixed = math.fsum(float(h[1]) for i, h in enumerate(head) if i not in rest)
        if rest:
            remaining = 1.0 - tail_mass - fixed
            if remaining < -PROB_TOL:
                raise DomainError("tail and head masses exceed 1")
            head[rest[0]] = (head[rest[0]][0], max(remaining, 0.0))
        head_mass = math.fsum(float(h[1]) for h in head)
        total = head_mass + tail_mass
        if abs(total - 1.0) > PROB_TOL:
            raise DomainError(f"head + tail mass is {total:.12g}, not 1")
        target = 1.0 - tail_mass
        if target < 0:
            raise DomainError("tail mass exceeds 1")
        head_law = None
        if head and head_mass > 0:
            vals = [float(h[0]) for h in head]
            probs = np.array([float(h[1]) for h in head]) / head_mass
            head_law = FiniteDiscrete.from_atoms(zip(vals, probs))
        return cls(float(r), float(p), float(c), head_law, target if head_law else 0.0,
                   float(step), float(offset))

    @property
    def radius(self) -> float:
        return self.r / self.step

    def tail_log_prob(self, n: np.ndarray) -> np.ndarray:
        n = np.asarray(n, dtype=float)
        return math.log(self.c) - self.p * np.log(n) - self.r * n

    def _head_terms(self) -> tuple[np.ndarray, np.ndarray]:
        if self.head is None:
            return np.empty(0), np.empty(0)
        return self.head.values, self.head.logp + math.log(self.head_mass)


def heavy_tail_law() -> ExpTailDiscrete:
    """P(X = -n) = n^-2 e^{-3n-3} for n >= 1 and the remaining mass at +3."""
    return ExpTailDiscrete.build(r=3.0, p=2.0, c=math.exp(-3.0), head=[(3.0, "rest")])


# ---------------------------------------------------------------------------
# function of a standard normal


@dataclass(frozen=True, eq=False)
class NormalMap:
    """X = g(Z), Z standard normal; ``g`` must accept numpy arrays.

    ``mgf_radius`` declares sup{e : E[exp(e X^-)] < inf}. The default +inf is
    right for maps whose loss side grows at most linearly in |z|.
    """

    g: Callable[[np.ndarray], np.ndarray]
    mgf_radius: float = INF
    nodes: int = DEFAULT_NODES
    label: str = "custom"
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def node_values(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        if n not in self._cache:
            rule = gauss_hermite_rule(n)
            vals = np.asarray(self.g(rule.nodes), dtype=float)
            if np.isnan(vals).any():
                raise DomainError("map returned NaN at a quadrature node")
            self._cache[n] = (vals, rule.weights)
        return self._cache[n]


def affine_map(a: float, b: float, nodes: int = DEFAULT_NODES) -> NormalMap:
    return NormalMap(lambda z: a + b * z, INF, nodes, f"affine(a={a:g}, b={b:g})")


def affine_exp_map(a: float, b: float, c: float, nodes: int = DEFAULT_NODES) -> NormalMap:
    """X = a + b exp(c Z). A negative ``b`` gives a lognormal loss, radius 0."""
    radius = 0.0 if (b < 0 and c != 0) else INF
    return NormalMap(lambda z: a + b * np.exp(c * z), radius, nodes,
                     f"affine_exp(a={a:g}, b={b:g}, c={c:g})")


OutcomeDistribution = Union[FiniteDiscrete, ExpTailDiscrete, NormalMap]


# ---------------------------------------------------------------------------
# exponential moment


def _log_mgf_discrete(values: np.ndarray, logp: np.ndarray, alpha: float) -> float:
    return log_sum_exp(logp - alpha * values)


def mgf_neg(X: OutcomeDistribution, alpha: float) -> ExtReal:
    """E[exp(-alpha X)] in [0, +inf]; exactly 1 at alpha = 0."""
    if alpha < 0 or math.isnan(alpha):
        raise DomainError("alpha must be >= 0")
    if alpha == 0:
        return 1.0
    if isinstance(X, FiniteDiscrete):
        return ext_exp(_log_mgf_discrete(X.values, X.logp, alpha))
    if isinstance(X, ExpTailDiscrete):
        hv, hlp = X._head_terms()
        head = ext_exp(_log_mgf_discrete(hv, hlp, alpha)) if hv.size else 0.0
        s = _series(X.p, X.r - alpha * X.step)
        if math.isinf(s):
            return INF
        log_tail = math.log(X.c) - alpha * X.offset + math.log(s) if s > 0 else -INF
        return head + ext_exp(log_tail)
    if isinstance(X, NormalMap):
        return _mgf_normal_map(X, alpha)
    raise UnsupportedRepresentation(f"unknown outcome type {type(X).__name__}")


def _mgf_normal_map(X: NormalMap, alpha: float, rel_tol: float = 1e-8) -> ExtReal:
    if alpha > X.mgf_radius:
        return INF
    logs = []
    for n in (X.nodes, 2 * X.nodes):
        vals, w = X.node_values(n)
        logs.append(log_sum_exp(np.log(w) - alpha * vals))
    base, fine = logs
    if abs(base - fine) <= rel_tol * max(1.0, abs(base)):
        return ext_exp(base)
    # rules disagree: still usable when both put the value clearly on one side of 1
    if base > 1e-6 and fine > 1e-6:
        return ext_exp(fine)
    raise NonConvergent(
        f"E[exp(-{alpha:g} X)] unresolved by quadrature: log-values {base:.6g} vs {fine:.6g}"
    )


# ---------------------------------------------------------------------------
# moments and category


def _normal_integral(h: Callable[[np.ndarray], np.ndarray], breaks: Sequence[float]) -> float:
    pdf = lambda z: math.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)
    # normal mass beyond |z| = 40 is below 1e-300
    edges = [-40.0, *breaks, 40.0]
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, _ = integrate.quad(lambda z: float(h(np.array(z))) * pdf(z), lo, hi,
                                limit=200, epsabs=1e-14, epsrel=1e-12)
        total += val
    return total


def _sign_changes(g: Callable, lo: float = -12.0, hi: float = 12.0, n: int = 4801) -> list[float]:
    z = np.linspace(lo, hi, n)
    v = np.asarray(g(z), dtype=float)
    roots = []
    for i in np.nonzero(np.sign(v[:-1]) * np.sign(v[1:]) < 0)[0]:
        roots.append(optimize.brentq(lambda t: float(g(np.array(t))), z[i], z[i + 1], xtol=1e-14))
    return roots


def moments(X: OutcomeDistribution) -> MomentSummary:
    """E[X+], E[X-] and the loss-side exponential-moment radius."""
    if isinstance(X, FiniteDiscrete):
        p = X.probs
        pos = math.fsum(p * np.maximum(X.values, 0.0))
        neg = math.fsum(p * np.maximum(-X.values, 0.0))
        return MomentSummary(pos, neg, INF)
    if isinstance(X, ExpTailDiscrete):
        pos = neg = 0.0
        if X.head is not None:
            hp = X.head.probs * X.head_mass
            pos = math.fsum(hp * np.maximum(X.head.values, 0.0))
            neg = math.fsum(hp * np.maximum(-X.head.values, 0.0))
        # tail atoms with non-negative value: n <= offset/step
        n0 = int(math.floor(X.offset / X.step)) if X.offset > 0 else 0
        upper = 0.0
        if n0 > 0:
            n = np.arange(1, n0 + 1, dtype=float)
            q = np.exp(X.tail_log_prob(n))
            upper = math.fsum((X.offset - X.step * n) * q)
        first = X.c * _series(X.p - 1.0, X.r)
        if math.isinf(first):
            tail_neg = INF
        else:
            signed = X.step * first - X.offset * X.c * _series(X.p, X.r)
            tail_neg = signed + upper
        return MomentSummary(pos + upper, neg + tail_neg, X.radius)
    if isinstance(X, NormalMap):
        breaks = _sign_changes(X.g)
        pos = _normal_integral(lambda z: np.maximum(X.g(z), 0.0), breaks)
        neg = _normal_integral(lambda z: np.maximum(-X.g(z), 0.0), breaks)
        return MomentSummary(pos, neg, X.mgf_radius)
    raise UnsupportedRepresentation(f"unknown outcome type {type(X).__name__}")


def classify(X: OutcomeDistribution, summary: MomentSummary | None = None) -> Category:
    m = summary or moments(X)
    if m.mean_neg == 0:
        return Category.B
    if m.mean_neg >= m.mean_pos:
        return Category.C
    if m.mgf_radius > 0:
        return Category.A
    return Category.D


# ---------------------------------------------------------------------------
# transformations


def scale(X: OutcomeDistribution, k: float) -> OutcomeDistribution:
    """The law of k X for k > 0."""
    if not k > 0:
        raise DomainError("scale factor must be positive")
    if isinstance(X, FiniteDiscrete):
        return FiniteDiscrete.from_log_atoms(X.values * k, X.logp, renormalize=False)
    if isinstance(X, ExpTailDiscrete):
        head = None if X.head is None else scale(X.head, k)
        return ExpTailDiscrete(X.r, X.p, X.c, head, X.head_mass, X.step * k, X.offset * k)
    if isinstance(X, NormalMap):
        g = X.g
        return NormalMap(lambda z: k * g(z), X.mgf_radius / k, X.nodes, f"{k:g}*{X.label}")
    raise UnsupportedRepresentation(f"cannot scale {type(X).__name__}")


def shift(X: OutcomeDistribution, c: float) -> OutcomeDistribution:
    """The law of X + c."""
    if isinstance(X, FiniteDiscrete):
        return FiniteDiscrete.from_log_atoms(X.values + c, X.logp, renormalize=False)
    if isinstance(X, ExpTailDiscrete):
        head = None if X.head is None else shift(X.head, c)
        return ExpTailDiscrete(X.r, X.p, X.c, head, X.head_mass, X.step, X.offset + c)
    if isinstance(X, NormalMap):
        g = X.g
        return NormalMap(lambda z: g(z) + c, X.mgf_radius, X.nodes, f"{X.label}+{c:g}")
    raise UnsupportedRepresentation(f"cannot shift {type(X).__name__}")


def truncate(X: OutcomeDistribution, n: float) -> OutcomeDistribution:
    """The law of min(max(X, -n), n)."""
    if not n > 0:
        raise DomainError("truncation level must be positive")
    if isinstance(X, FiniteDiscrete):
        return FiniteDiscrete.from_log_atoms(np.clip(X.values, -n, n), X.logp, renormalize=False)
    if isinstance(X, ExpTailDiscrete):
        hv, hlp = X._head_terms()
        n_max = int(math.floor((X.offset + n) / X.step))
        vals = [np.clip(hv, -n, n)]
        logs = [hlp]
        if n_max >= 1:
            k = np.arange(1, n_max + 1, dtype=float)
            vals.append(np.clip(X.offset - X.step * k, -n, n))
            logs.append(X.tail_log_prob(k))
        # atoms beyond the clamp fold onto -n
        first = max(n_max + 1, 1)
        rest = _shifted_series(X.p, X.r, first)
        vals.append(np.array([-float(n)]))
        logs.append(np.array([math.log(X.c) - X.r * first + math.log(rest)]))
        return FiniteDiscrete.from_log_atoms(np.concatenate(vals), np.concatenate(logs))
    if isinstance(X, NormalMap):
        g = X.g
        return NormalMap(lambda z: np.clip(g(z), -n, n), INF, X.nodes, f"clip({X.label}, {n:g})")
    raise UnsupportedRepresentation(f"cannot truncate {type(X).__name__}")


def independent_sum(X: OutcomeDistribution, Y: OutcomeDistribution) -> FiniteDiscrete:
    """Exact convolution of two independent finite discrete laws."""
    if not (isinstance(X, FiniteDiscrete) and isinstance(Y, FiniteDiscrete)):
        raise UnsupportedRepresentation("independent_sum needs two FiniteDiscrete laws")
    v = (X.values[:, None] + Y.values[None, :]).ravel()
    lp = (X.logp[:, None] + Y.logp[None, :]).ravel()
    return FiniteDiscrete.from_log_atoms(v, lp)


def mean_preserving_spread(X: FiniteDiscrete, index: int, eps: float) -> FiniteDiscrete:
    """Replace atom ``index`` (value v) by v - eps and v + eps, each with half its mass."""
    if not isinstance(X, FiniteDiscrete):
        raise UnsupportedRepresentation("mean_preserving_spread needs a FiniteDiscrete law")
    if not 0 <= index < len(X):
        raise DomainError(f"atom index {index} out of range")
    if not eps > 0:
        raise DomainError("spread must be positive")
    v0, lp0 = X.values[index], X.logp[index]
    v = np.concatenate([np.delete(X.values, index), [v0 - eps, v0 + eps]])
    lp = np.concatenate([np.delete(X.logp, index), [lp0 - math.log(2), lp0 - math.log(2)]])
    return FiniteDiscrete.from_log_atoms(v, lp)


def comonotone_combination(X: FiniteDiscrete, Y: FiniteDiscrete, k: float) -> FiniteDiscrete:
    """Law of k X + (1 - k) Y with X, Y coupled through a common uniform (quantile coupling)."""
    if not (isinstance(X, FiniteDiscrete) and isinstance(Y, FiniteDiscrete)):
        raise UnsupportedRepresentation("comonotone_combination needs FiniteDiscrete laws")
    if not 0 <= k <= 1:
        raise DomainError("k must lie in [0, 1]")
    cx = np.cumsum(X.probs)
    cy = np.cumsum(Y.probs)
    cx[-1] = cy[-1] = 1.0
    cuts = np.unique(np.concatenate([[0.0], cx, cy]))
    lengths = np.diff(cuts)
    mids = 0.5 * (cuts[:-1] + cuts[1:])
    xi = np.minimum(np.searchsorted(cx, mids), len(X) - 1)
    yi = np.minimum(np.searchsorted(cy, mids), len(Y) - 1)
    vals = k * X.values[xi] + (1 - k) * Y.values[yi]
    keep = lengths > 0
    return FiniteDiscrete.from_atoms(zip(vals[keep], lengths[keep]))
