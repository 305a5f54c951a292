"""Invariant suites behind ``dualrisk check``: index properties, round trips, closed forms."""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .index import check_properties, duality_index, index_value
from .market import DiscreteKernel, LognormalKernel, entropy
from .numerics import DEFAULT_TOL, lambert_w
from .outcomes import Category, FiniteDiscrete, classify, heavy_tail_law
from .solver import (
    ConditioningWarning,
    phi,
    phi_lower_bound,
    solve_outer,
    utility_outcome_law,
    y_hat,
)
from .utility import CARA, Linear, forward_map, inverse_map, newton_inverse_map

FAULTS = ("homogeneity",)


@dataclass
class SuiteResult:
    name: str
    checks: int = 0
    failures: list[str] = field(default_factory=list)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return not self.failures

    def expect(self, ok: bool, what: str) -> None:
        self.checks += 1
        if not ok:
            self.failures.append(what)


def random_gamble(rng: np.random.Generator, max_atoms: int = 6) -> FiniteDiscrete:
    """A finite-discrete category-A law: 2..max_atoms atoms, positive mean, some loss."""
    while True:
        n = int(rng.integers(2, max_atoms + 1))
        values = np.round(rng.uniform(-3.0, 5.0, n), 3)
        probs = rng.dirichlet(np.ones(n))
        if np.unique(values).size < n or probs.min() < 1e-3:
            continue
        X = FiniteDiscrete.from_atoms(zip(values, probs))
        if classify(X) is Category.A:
            return X


def gamble_corpus(seed: int, size: int = 100) -> list[FiniteDiscrete]:
    rng = np.random.default_rng(seed)
    return [random_gamble(rng) for _ in range(size)]


def suite_index_properties(seed: int, size: int = 100, tol: float = DEFAULT_TOL,
                           fault: str | None = None) -> SuiteResult:
    res = SuiteResult("index_properties")
    corpus = gamble_corpus(seed, size + 1)
    rng = np.random.default_rng(seed + 1)
    bump = 1e-3 if fault == "homogeneity" else 0.0
    for i in range(size):
        rep = check_properties(corpus[i], corpus[i + 1], tol=tol, rng=rng, _homogeneity_fault=bump)
        for c in rep.checks:
            res.expect(c.passed, f"law {i}: {c.name}: lhs={c.lhs:.12g} rhs={c.rhs:.12g}")
    return res


def suite_round_trips(tol: float = DEFAULT_TOL) -> SuiteResult:
    res = SuiteResult("round_trips")
    xs = -np.logspace(-3, 3, 30)
    for U in (Linear(), CARA(0.5), CARA(1.0), CARA(3.0)):
        for a in (0.25, 1.0, 4.0):
            t = inverse_map(U, a, xs)
            back = forward_map(U, a, t)
            err = float(np.max(np.abs(back / xs - 1.0)))
            res.expect(err < 1e-10, f"{U!r} alpha={a:g}: forward(inverse(x)) rel err {err:.3g}")
            if isinstance(U, CARA):
                diff = float(np.max(np.abs(t - newton_inverse_map(U, a, xs))))
                res.expect(diff < 1e-8, f"{U!r} alpha={a:g}: closed form vs Newton {diff:.3g}")
    z = np.linspace(0.0, 100.0, 201)
    w = lambert_w(z)
    err = float(np.max(np.abs(w * np.exp(w) - z)))
    res.expect(err < 1e-10, f"W(z) e^W(z) - z reaches {err:.3g}")

    # u(Y*) pushed through the kernel has index 1/alpha*
    cases = [(Linear(), LognormalKernel(1.0), 0.25), (CARA(1.0), LognormalKernel(1.0), 0.25),
             (CARA(2.0), LognormalKernel(0.5), 0.05),
             (CARA(1.0), DiscreteKernel.from_atoms([(0.5, 0.5), (1.5, 0.5)]), 0.05)]
    for U, M, y in cases:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ConditioningWarning)
            a, inner = solve_outer(U, M, y)
        r = index_value(utility_outcome_law(inner), tol)
        rel = abs(r * a - 1.0)
        res.expect(rel < 1e-5, f"{U!r} {M!r} y={y:g}: index(u(Y*)) * alpha* - 1 = {rel:.3g}")
    return res


def suite_closed_forms(tol: float = DEFAULT_TOL) -> SuiteResult:
    res = SuiteResult("closed_forms")
    heavy = duality_index(heavy_tail_law(), tol)
    res.expect(abs(heavy.alpha_hat - 3.0) < 1e-6, f"heavy-tail example alpha_hat {heavy.alpha_hat:.12g}")
    res.expect(heavy.boundary_status == "lt_one", f"heavy-tail boundary value {heavy.boundary_value!r}")

    golden = FiniteDiscrete.from_atoms([(2.0, 0.5), (-1.0, 0.5)])
    want = 1.0 / math.log((1 + math.sqrt(5)) / 2)
    got = index_value(golden, tol)
    res.expect(abs(got - want) < 1e-8, f"two-atom index {got:.12g} vs {want:.12g}")

    for s2 in (0.5, 1.0, 2.0):
        M = LognormalKernel(s2)
        H = entropy(M)
        for y in (0.1, 0.25, 0.5):
            a, _ = solve_outer(Linear(), M, y)
            res.expect(abs(a - H / y) < 1e-6 * (H / y), f"linear sigma2={s2:g} y={y:g}: alpha* {a:.12g}")
            for al in np.linspace(0.2, 3.0, 5):
                p = phi(Linear(), M, al, y)
                res.expect(abs(p - math.exp(al * y - H)) < 1e-8, f"linear phi({al:g}) = {p:.12g}")
        for beta in (0.5, 1.0, 4.0):
            yh = y_hat(CARA(beta), M)
            res.expect(abs(yh - s2 / (2 * beta)) < 1e-8, f"CARA beta={beta:g} threshold {yh:.12g}")
            for al in (0.5, 2.0):
                y = 0.5 * yh
                p, lb = phi(CARA(beta), M, al, y), phi_lower_bound(CARA(beta), M, al, y)
                res.expect(p >= lb * (1 - 1e-10), f"CARA beta={beta:g} phi below lower bound")
    return res


SUITES: dict[str, Callable[..., SuiteResult]] = {
    "index_properties": suite_index_properties,
    "round_trips": suite_round_trips,
    "closed_forms": suite_closed_forms,
}


def run_checks(seed: int = 0, tol: float = DEFAULT_TOL, fault: str | None = None,
               size: int = 100) -> list[SuiteResult]:
    if fault is not None and fault not in FAULTS:
        raise ValueError(f"unknown fault {fault!r}")
    out = []
    for name, fn in SUITES.items():
        t0 = time.perf_counter()
        if name == "index_properties":
            r = fn(seed, size, tol, fault)
        else:
            r = fn(tol)
        r.seconds = time.perf_counter() - t0
        out.append(r)
    return out
