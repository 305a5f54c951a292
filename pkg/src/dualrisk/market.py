"""Pricing kernels rho > 0 with E[rho] = 1 and the scalars derived from them."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence, Union

import numpy as np

from .errors import DomainError, NonConvergent
from .numerics import DEFAULT_NODES, ExtReal, QuadratureRule, gauss_hermite_rule

KERNEL_TOL = 1e-9
REFINE_TOL = 1e-8


@dataclass(frozen=True)
class LognormalKernel:
    """ln rho ~ N(mu, sigma2) with mu = -sigma2/2 so that E[rho] = 1."""

    sigma2: float
    nodes: int = DEFAULT_NODES

    def __post_init__(self):
        if not self.sigma2 > 0:
            raise DomainError("sigma2 must be positive")
        if self.nodes < 2:
            raise DomainError("need at least two quadrature nodes")

    @property
    def mu(self) -> float:
        return -0.5 * self.sigma2

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)

    def rule(self, refined: bool = False) -> QuadratureRule:
        return gauss_hermite_rule(2 * self.nodes if refined else self.nodes)

    def rho_of_z(self, z):
        return np.exp(self.mu + self.sigma * np.asarray(z, dtype=float))

    def support(self, refined: bool = False) -> tuple[np.ndarray, np.ndarray]:
        r = self.rule(refined)
        return self.rho_of_z(r.nodes), r.weights

    @property
    def is_degenerate(self) -> bool:
        return False


@dataclass(frozen=True, eq=False)
class DiscreteKernel:
    """Finitely many states; rejects any kernel with sum p v != 1 (no renormalization)."""

    values: np.ndarray
    probs: np.ndarray

    @classmethod
    def from_atoms(cls, atoms: Iterable[Sequence[float]]) -> "DiscreteKernel":
        atoms = [tuple(a) for a in atoms]
        if not atoms:
            raise DomainError("a discrete kernel needs at least one state")
        v = np.array([float(a[0]) for a in atoms])
        p = np.array([float(a[1]) for a in atoms])
        if not np.all(np.isfinite(v)) or (v <= 0).any():
            raise DomainError("kernel values must be positive")
        if (p < 0).any() or abs(math.fsum(p) - 1.0) > KERNEL_TOL:
            raise DomainError("state probabilities must be non-negative and sum to 1")
        if abs(math.fsum(p * v) - 1.0) > KERNEL_TOL:
            raise DomainError(f"E[rho] = {math.fsum(p * v):.12g}; a pricing kernel needs mean 1")
        keep = p > 0
        v, p = v[keep], p[keep]
        order = np.argsort(v, kind="stable")
        v, p = v[order], p[order]
        v.setflags(write=False)
        p.setflags(write=False)
        return cls(v, p)

    def support(self, refined: bool = False) -> tuple[np.ndarray, np.ndarray]:
        return self.values, self.probs

    @property
    def is_degenerate(self) -> bool:
        return bool(np.all(self.values == self.values[0]))

    @property
    def atoms(self) -> list[tuple[float, float]]:
        return list(zip(self.values.tolist(), self.probs.tolist()))


Market = Union[LognormalKernel, DiscreteKernel]


def entropy(M: Market) -> float:
    """E[rho ln rho]."""
    if isinstance(M, LognormalKernel):
        return 0.5 * M.sigma2
    return math.fsum(M.probs * M.values * np.log(M.values))


def log_mean(M: Market) -> float:
    """E[ln rho]."""
    if isinstance(M, LognormalKernel):
        return M.mu
    return math.fsum(M.probs * np.log(M.values))


def ess_inf(M: Market) -> float:
    if isinstance(M, LognormalKernel):
        return 0.0
    return float(M.values[0])


def kernel_expectation(
    M: Market,
    h: Callable[[np.ndarray], np.ndarray],
    weighted: bool = False,
    check: bool = True,
) -> ExtReal:
    """E[h(rho)], or E[rho h(rho)] with ``weighted``.

    Exact for discrete kernels. For the lognormal kernel the doubled rule is
    evaluated too when ``check`` is set, raising NonConvergent on disagreement.
    """

    def once(refined: bool) -> float:
        rho, w = M.support(refined)
        vals = np.asarray(h(rho), dtype=float)
        if weighted:
            vals = rho * vals
        if np.isnan(vals).any():
            raise NonConvergent("integrand is NaN")
        if np.isposinf(vals).any():
            return math.inf
        return float(np.dot(w, vals))

    base = once(False)
    if check and isinstance(M, LognormalKernel):
        fine = once(True)
        if base != fine and not abs(base - fine) <= REFINE_TOL * max(1.0, abs(base)):
            raise NonConvergent(f"quadrature refinement disagrees: {base!r} vs {fine!r}")
    return base
