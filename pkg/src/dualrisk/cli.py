"""Command-line entry point: ``dualrisk {index,solve,curve,check}``.

Input files are JSON.

Distribution::

    {"type": "discrete", "atoms": [[v, p], ...]}
    {"type": "exp_tail", "r": r, "p": p, "c": c, "head": [[v, p | "rest"], ...],
     "step": 1, "offset": 0}
    {"type": "normal_map", "map": "affine", "params": {"a": a, "b": b}}
    {"type": "normal_map", "map": "affine_exp", "params": {"a": a, "b": b, "c": c}}

``exp_tail`` puts mass c n^-p e^(-r n) on offset - step*n for n = 1, 2, ...;
``affine`` is a + b Z and ``affine_exp`` is a + b e^(c Z) for Z standard normal.

Utility::

    {"kind": "linear"}
    {"kind": "cara", "beta": beta}

Market::

    {"kernel": "lognormal", "sigma2": s2}
    {"kernel": "discrete", "atoms": [[rho, p], ...]}

Exit codes: 0 success, 1 check failure, 2 input error, 3 infeasible target.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .checks import FAULTS, run_checks
from .errors import DualRiskError, Infeasible, SchemaError
from .index import duality_index
from .numerics import DEFAULT_NODES, DEFAULT_TOL
from .outcomes import classify
from .schemas import (
    CheckReport,
    CurveRow,
    IndexReport,
    PayoffRow,
    SolveReport,
    SuiteRecord,
    fmt,
    load_distribution,
    load_market,
    load_utility,
)
from .solver import OUTER_RTOL, ConditioningWarning, Feasibility, ProblemSpec, payoff_grid, risk_curve, solve_portfolio

EXIT_OK, EXIT_CHECK, EXIT_INPUT, EXIT_INFEASIBLE = 0, 1, 2, 3


@dataclass(frozen=True)
class RunConfig:
    command: str
    tol: Optional[float] = None
    nodes: int = DEFAULT_NODES
    format: str = "json"
    out: Optional[str] = None
    seed: int = 0

    def __post_init__(self):
        if self.tol is not None and not self.tol > 0:
            raise SchemaError("--tol must be positive")
        if self.nodes < 8 or self.nodes % 2:
            raise SchemaError("--nodes must be even and at least 8")

    @property
    def index_tol(self) -> float:
        return DEFAULT_TOL if self.tol is None else self.tol

    @property
    def solver_rtol(self) -> float:
        return OUTER_RTOL if self.tol is None else self.tol


# --- rendering ---------------------------------------------------------------


def _csv_text(header: Sequence[str], rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(["" if row[h] is None else row[h] for h in header])
    return buf.getvalue()


def _json_text(model) -> str:
    return json.dumps(model.model_dump(), indent=2) + "\n"


def _emit(text: str, cfg: RunConfig) -> None:
    if cfg.out:
        with open(cfg.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# --- commands ----------------------------------------------------------------


def cmd_index(args, cfg: RunConfig) -> int:
    X = load_distribution(args.dist, cfg.nodes)
    res = duality_index(X, cfg.index_tol)
    report = IndexReport(
        category=classify(X).value,
        alpha_hat=fmt(res.alpha_hat),
        index=fmt(res.index),
        boundary_value=fmt(res.boundary_value),
        boundary_status=res.boundary_status,
    )
    if cfg.format == "csv":
        _emit(_csv_text(list(IndexReport.model_fields), [report.model_dump()]), cfg)
    else:
        _emit(_json_text(report), cfg)
    return EXIT_OK


def cmd_solve(args, cfg: RunConfig) -> int:
    U = load_utility(args.utility)
    M = load_market(args.market, cfg.nodes)
    spec = ProblemSpec(U, M, args.endowment, args.benchmark)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConditioningWarning)
        sol = solve_portfolio(spec, cfg.solver_rtol)

    rows = []
    if sol.feasibility is not Feasibility.INFEASIBLE:
        rho = payoff_grid(M)
        Y = np.broadcast_to(sol.relative_payoff(rho), rho.shape)
        rows = [PayoffRow(rho=fmt(r), X=fmt(y + sol.benchmark), Y=fmt(y)) for r, y in zip(rho, Y)]
    report = SolveReport(
        feasibility=sol.feasibility.value,
        endowment=fmt(sol.endowment),
        benchmark=fmt(sol.benchmark),
        y=fmt(sol.y),
        y_hat=fmt(sol.y_hat),
        V=fmt(sol.value),
        alpha_star=fmt(sol.alpha_star),
        lambda_star=fmt(sol.lambda_star),
        closed_form=sol.closed_form(),
        payoff=rows,
    )
    if cfg.format == "csv":
        _emit(_csv_text(["rho", "X", "Y"], [r.model_dump() for r in rows]), cfg)
    else:
        _emit(_json_text(report), cfg)
    if sol.feasibility is Feasibility.INFEASIBLE:
        print(f"dualrisk: {Infeasible(sol.y, sol.y_hat)}", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_curve(args, cfg: RunConfig) -> int:
    if not (0 < args.y_min < args.y_max) or not all(map(math.isfinite, (args.y_min, args.y_max))):
        raise SchemaError("curve needs 0 < --y-min < --y-max")
    if args.steps < 2:
        raise SchemaError("--steps must be at least 2")
    U = load_utility(args.utility)
    M = load_market(args.market, cfg.nodes)
    ys = np.linspace(args.y_min, args.y_max, args.steps)
    rows = [
        CurveRow(y=fmt(p.y), V=fmt(p.value), alpha_star=fmt(p.alpha_star), feasibility=p.feasibility.value)
        for p in risk_curve(U, M, ys, cfg.solver_rtol)
    ]
    if cfg.format == "json":
        text = json.dumps([r.model_dump() for r in rows], indent=2) + "\n"
    else:
        text = _csv_text(list(CurveRow.model_fields), [r.model_dump() for r in rows])
    _emit(text, cfg)
    return EXIT_OK


def cmd_check(args, cfg: RunConfig) -> int:
    results = run_checks(cfg.seed, cfg.index_tol, args.inject_fault)
    for r in results:
        print(f"{r.name}: {'pass' if r.passed else 'FAIL'} ({r.checks} checks, {r.seconds:.2f} s)",
              file=sys.stderr)
    report = CheckReport(
        seed=cfg.seed,
        passed=all(r.passed for r in results),
        suites=[SuiteRecord(name=r.name, passed=r.passed, checks=r.checks, failures=r.failures)
                for r in results],
    )
    if cfg.format == "csv":
        rows = [{"suite": s.name, "passed": s.passed, "checks": s.checks, "failures": len(s.failures)}
                for s in report.suites]
        _emit(_csv_text(["suite", "passed", "checks", "failures"], rows), cfg)
    else:
        _emit(_json_text(report), cfg)
    return EXIT_OK if report.passed else EXIT_CHECK


# --- argument parsing ----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=None,
                        help="root tolerance (index bisection and outer solve)")
    common.add_argument("--nodes", type=int, default=DEFAULT_NODES,
                        help="Gauss-Hermite nodes for normal models (even, >= 8)")
    common.add_argument("--format", choices=("json", "csv"), default=None)
    common.add_argument("--out", default=None, help="write to this file instead of stdout")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized corpora")

    parser = argparse.ArgumentParser(prog="dualrisk", description="Duality risk index and portfolio solver.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("index", parents=[common], help="index of a distribution file")
    p.add_argument("dist")
    p.set_defaults(func=cmd_index, default_format="json")

    for name, helptext in (("solve", "optimal payoff for a target surplus"),
                           ("curve", "risk level V(y) over a surplus range")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("utility")
        p.add_argument("market")
        if name == "solve":
            p.add_argument("--endowment", "-x", type=float, default=0.0)
            p.add_argument("--benchmark", "-l", type=float, required=True)
            p.set_defaults(func=cmd_solve, default_format="json")
        else:
            p.add_argument("--y-min", type=float, required=True)
            p.add_argument("--y-max", type=float, required=True)
            p.add_argument("--steps", type=int, default=9)
            p.set_defaults(func=cmd_curve, default_format="csv")

    p = sub.add_parser("check", parents=[common], help="run the invariant suites")
    p.add_argument("--inject-fault", choices=FAULTS, default=None, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_check, default_format="json")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig(args.command, args.tol, args.nodes, args.format or args.default_format,
                        args.out, args.seed)
        return args.func(args, cfg)
    except SchemaError as exc:
        print(f"dualrisk: input error:\n{exc}", file=sys.stderr)
        return EXIT_INPUT
    except DualRiskError as exc:
        print(f"dualrisk: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
