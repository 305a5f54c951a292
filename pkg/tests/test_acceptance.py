"""Acceptance criteria; each test records one PASS/FAIL line for the terminal summary."""

from __future__ import annotations

import math
import time

import numpy as np
from dualrisk.checks import gamble_corpus, suite_index_properties
from dualrisk.index import duality_index, index_value
from dualrisk.market import DiscreteKernel, LognormalKernel, entropy
from dualrisk.numerics import lambert_w
from dualrisk.outcomes import Category, FiniteDiscrete, classify, heavy_tail_law, truncate
from dualrisk.solver import (
    Feasibility,
    ProblemSpec,
    phi,
    phi_lower_bound,
    risk_curve,
    solve_outer,
    solve_portfolio,
    utility_outcome_law,
    y_hat,
)
from dualrisk.utility import CARA, Linear, inverse_map, newton_inverse_map


def test_c1_heavy_tail_example(criterion):
    t0 = time.perf_counter()
    res = duality_index(heavy_tail_law())
    dt = time.perf_counter() - t0
    ok = abs(res.alpha_hat - 3.0) < 1e-6 and res.boundary_value < 1.0 and dt < 1.0
    criterion(1, ok, f"alpha_hat={res.alpha_hat:.12g} E[exp(-3X)]={res.boundary_value:.6g} t={dt:.3f}s")
    assert ok


def test_c2_risk_neutral_closed_form(criterion):
    t0 = time.perf_counter()
    M = LognormalKernel(1.0)
    sol = solve_portfolio(ProblemSpec(Linear(), M, 0.0, 0.25))
    dt = time.perf_counter() - t0
    H = entropy(M)
    rho, _ = M.support()
    err = float(np.max(np.abs(sol.relative_payoff(rho) + np.log(rho) * 0.25 / H)))
    ok = (abs(sol.alpha_star - 2.0) < 1e-6 and abs(sol.value - 0.25 / H) < 1e-6
          and abs(sol.value - 0.5) < 1e-6 and err < 1e-6 and dt < 1.0)
    criterion(2, ok, f"alpha*={sol.alpha_star:.12g} V={sol.value:.12g} payoff err={err:.2g} t={dt:.3f}s")
    assert ok


def test_c3_cara_threshold_and_curve(criterion):
    U, M = CARA(1.0), LognormalKernel(1.0)
    yh = y_hat(U, M)
    infeasible = solve_portfolio(ProblemSpec(U, M, 0.0, 0.6)).feasibility is Feasibility.INFEASIBLE
    t0 = time.perf_counter()
    ys = np.linspace(0.05, 0.45, 9)
    V = np.array([p.value for p in risk_curve(U, M, ys)])
    dt = time.perf_counter() - t0
    increasing = bool(np.all(np.diff(V) > 0))
    convex = bool(np.all(np.diff(V, 2) > 0))
    ratio = V[-1] / V[4]
    ok = abs(yh - 0.5) < 1e-8 and infeasible and increasing and convex and ratio > 2 and dt < 10
    criterion(3, ok, f"y_hat={yh:.12g} infeasible(0.6)={infeasible} increasing={increasing} "
                     f"convex={convex} V(.45)/V(.25)={ratio:.4g} t={dt:.2f}s")
    assert ok


def test_c4_lambert_inverse_map(criterion):
    xs = -np.logspace(-3, 3, 30)
    worst = 0.0
    for a in (0.25, 1.0, 4.0):
        worst = max(worst, float(np.max(np.abs(inverse_map(CARA(1.0), a, xs)
                                                - newton_inverse_map(CARA(1.0), a, xs)))))
    z = np.linspace(0.0, 100.0, 1001)
    w = lambert_w(z)
    w_err = float(np.max(np.abs(w * np.exp(w) - z)))
    ok = worst < 1e-8 and w_err < 1e-10
    criterion(4, ok, f"closed form vs Newton {worst:.2g}; |W e^W - z| {w_err:.2g}")
    assert ok


SOLVE_CORPUS = [
    (Linear(), LognormalKernel(1.0), 0.25),
    (Linear(), LognormalKernel(0.3), 0.1),
    (Linear(), DiscreteKernel.from_atoms([(0.5, 0.5), (1.5, 0.5)]), 3.0),
    (CARA(1.0), LognormalKernel(1.0), 0.05),
    (CARA(1.0), LognormalKernel(1.0), 0.25),
    (CARA(1.0), LognormalKernel(1.0), 0.45),
    (CARA(0.5), LognormalKernel(2.0), 1.0),
    (CARA(3.0), LognormalKernel(0.5), 0.05),
    (CARA(1.0), DiscreteKernel.from_atoms([(0.5, 0.5), (1.5, 0.5)]), 0.06),
    (CARA(2.0), DiscreteKernel.from_atoms([(0.5, 0.3), (1.0, 0.4), (1.5, 0.3)]), 0.02),
]


def test_c5_index_solver_consistency(criterion):
    worst = 0.0
    for U, M, y in SOLVE_CORPUS:
        a, inner = solve_outer(U, M, y)
        worst = max(worst, abs(index_value(utility_outcome_law(inner), 1e-12) * a - 1.0))
    ok = worst < 1e-5
    criterion(5, ok, f"{len(SOLVE_CORPUS)} solved cases, worst |R(u(Y*)) alpha* - 1| = {worst:.2g}")
    assert ok


def test_c6_property_suite(criterion):
    t0 = time.perf_counter()
    corpus = gamble_corpus(seed=2024, size=101)
    all_a = all(classify(X) is Category.A for X in corpus)
    res = suite_index_properties(seed=2024, size=100)
    dt = time.perf_counter() - t0
    ok = all_a and res.passed and res.checks >= 600 and dt < 30
    criterion(6, ok, f"100 laws, {res.checks} checks, {len(res.failures)} violations, t={dt:.2f}s")
    assert ok, res.failures[:5]


def test_c7_phi_structure(criterion):
    y = 0.25
    lin_err = 0.0
    for M in (LognormalKernel(1.0), DiscreteKernel.from_atoms([(0.5, 0.5), (1.5, 0.5)])):
        H = entropy(M)
        for a in np.linspace(0.05, 4.0, 20):
            lin_err = max(lin_err, abs(phi(Linear(), M, a, y) - math.exp(a * y - H)))
    M = LognormalKernel(1.0)
    near0 = phi(Linear(), M, 1e-12, y)
    jump = abs(near0 - math.exp(-entropy(M))) < 1e-8 and near0 < 1 and phi(Linear(), M, 0.0, y) == 1.0
    lb_ok, n_eval = True, 0
    for U, M, y, in SOLVE_CORPUS:
        for a in np.geomspace(1e-3, entropy(M) / (y * U.du0), 12):
            n_eval += 1
            lb_ok &= phi(U, M, a, y) >= phi_lower_bound(U, M, a, y) * (1 - 1e-12)
    ok = lin_err < 1e-8 and jump and lb_ok
    criterion(7, ok, f"linear phi err {lin_err:.2g}; phi(0+)={near0:.10g} vs phi(0)=1; "
                     f"lower bound held at {n_eval} evaluations: {lb_ok}")
    assert ok


def test_c8_truncation_continuity(criterion):
    gaps = {n: abs(index_value(truncate(heavy_tail_law(), n)) - 1.0 / 3.0) for n in (50, 100, 200, 1000)}
    ok = all(g < 1e-3 for g in gaps.values())
    criterion(8, ok, "|R(X_n) - 1/3|: " + ", ".join(f"n={n} {g:.4g}" for n, g in gaps.items()))
    assert ok


def test_c9_brute_force_budget_plane(criterion):
    t0 = time.perf_counter()
    M = DiscreteKernel.from_atoms([(0.5, 0.3), (1.0, 0.4), (1.5, 0.3)])
    rho, p = M.values, M.probs
    y = 0.1
    a_star, _ = solve_outer(Linear(), M, y)
    V = 1.0 / a_star

    def index_at(y1: float, y2: float) -> float:
        # third state pays whatever keeps E[rho Y] = -y
        y3 = (-y - p[0] * rho[0] * y1 - p[1] * rho[1] * y2) / (p[2] * rho[2])
        return index_value(FiniteDiscrete.from_atoms(zip((y1, y2, y3), p)), 1e-10)

    best, arg = math.inf, None
    for y1 in np.linspace(-1.0, 3.0, 121):
        for y2 in np.linspace(-2.0, 2.0, 121):
            r = index_at(y1, y2)
            if r < best:
                best, arg = r, (y1, y2)
    h = 4.0 / 120
    for y1 in np.linspace(arg[0] - h, arg[0] + h, 41):
        for y2 in np.linspace(arg[1] - h, arg[1] + h, 41):
            best = min(best, index_at(y1, y2))
    dt = time.perf_counter() - t0
    ok = best >= V - 1e-4 and dt < 60
    criterion(9, ok, f"solver V={V:.8g}, best grid index={best:.8g} (gap {best - V:.2g}), t={dt:.1f}s")
    assert ok
