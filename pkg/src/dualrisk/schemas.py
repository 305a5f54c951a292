"""File schemas (pydantic) for distributions, utilities and markets, plus result records.

Numbers in emitted results carry 12 significant digits; infinities are the
strings ``"inf"`` / ``"-inf"``.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Annotated, Any, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, ValidationError, model_validator

from .errors import DualRiskError, SchemaError
from .market import DiscreteKernel, LognormalKernel, Market
from .numerics import DEFAULT_NODES
from .outcomes import (
    ExpTailDiscrete,
    FiniteDiscrete,
    OutcomeDistribution,
    affine_exp_map,
    affine_map,
)
from .utility import CARA, Linear, Utility


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


# --- distributions ---------------------------------------------------------


class DiscreteSpec(_Strict):
    type: Literal["discrete"]
    atoms: list[tuple[float, float]] = Field(min_length=1)


class ExpTailSpec(_Strict):
    type: Literal["exp_tail"]
    r: float = Field(ge=0)
    p: float = Field(ge=0)
    c: float = Field(gt=0)
    head: list[tuple[float, Union[float, Literal["rest"]]]] = []
    step: float = Field(1.0, gt=0)
    offset: float = 0.0


_MAP_PARAMS = {"affine": {"a", "b"}, "affine_exp": {"a", "b", "c"}}


class NormalMapSpec(_Strict):
    type: Literal["normal_map"]
    map: Literal["affine", "affine_exp"]
    params: dict[str, float]

    @model_validator(mode="after")
    def _params_match(self):
        need = _MAP_PARAMS[self.map]
        if set(self.params) != need:
            raise ValueError(f"map {self.map!r} takes parameters {sorted(need)}, got {sorted(self.params)}")
        return self


DistributionSpec = Annotated[Union[DiscreteSpec, ExpTailSpec, NormalMapSpec], Field(discriminator="type")]


# --- utilities and markets ---------------------------------------------------


class LinearSpec(_Strict):
    kind: Literal["linear"]


class CaraSpec(_Strict):
    kind: Literal["cara"]
    beta: float = Field(gt=0)


UtilitySpec = Annotated[Union[LinearSpec, CaraSpec], Field(discriminator="kind")]


class LognormalSpec(_Strict):
    kernel: Literal["lognormal"]
    sigma2: float = Field(gt=0)


class DiscreteKernelSpec(_Strict):
    kernel: Literal["discrete"]
    atoms: list[tuple[float, float]] = Field(min_length=1)


MarketSpec = Annotated[Union[LognormalSpec, DiscreteKernelSpec], Field(discriminator="kernel")]


# --- loading -----------------------------------------------------------------


def _read_json(path: str | Path) -> Any:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise SchemaError(f"{path}: cannot read file ({exc.strerror})") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from exc


def _validate(adapter: TypeAdapter, data: Any, origin: str):
    try:
        return adapter.validate_python(data)
    except ValidationError as exc:
        lines = []
        for err in exc.errors():
            loc = ".".join(str(p) for p in err["loc"]) or "<root>"
            lines.append(f"{origin}: field {loc}: {err['msg']}")
        raise SchemaError("\n".join(lines)) from exc


def build_distribution(spec, nodes: int = DEFAULT_NODES) -> OutcomeDistribution:
    if isinstance(spec, DiscreteSpec):
        return FiniteDiscrete.from_atoms(spec.atoms)
    if isinstance(spec, ExpTailSpec):
        head = [(v, None if p == "rest" else p) for v, p in spec.head]
        return ExpTailDiscrete.build(spec.r, spec.p, spec.c, head, spec.step, spec.offset)
    if spec.map == "affine":
        return affine_map(spec.params["a"], spec.params["b"], nodes)
    return affine_exp_map(spec.params["a"], spec.params["b"], spec.params["c"], nodes)


def build_utility(spec) -> Utility:
    return Linear() if isinstance(spec, LinearSpec) else CARA(spec.beta)


def build_market(spec, nodes: int = DEFAULT_NODES) -> Market:
    if isinstance(spec, LognormalSpec):
        return LognormalKernel(spec.sigma2, nodes)
    return DiscreteKernel.from_atoms(spec.atoms)


def _load(path, adapter, builder, **kw):
    spec = _validate(adapter, _read_json(path), str(path))
    try:
        return builder(spec, **kw)
    except DualRiskError as exc:
        raise SchemaError(f"{path}: {exc}") from exc


def load_distribution(path, nodes: int = DEFAULT_NODES) -> OutcomeDistribution:
    return _load(path, TypeAdapter(DistributionSpec), build_distribution, nodes=nodes)


def load_utility(path) -> Utility:
    return _load(path, TypeAdapter(UtilitySpec), build_utility)


def load_market(path, nodes: int = DEFAULT_NODES) -> Market:
    return _load(path, TypeAdapter(MarketSpec), build_market, nodes=nodes)


# --- results -----------------------------------------------------------------

ExtNumber = Union[float, Literal["inf", "-inf"]]


def fmt(x: float | None):
    """Round to 12 significant digits; infinities become strings."""
    if x is None:
        return None
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        raise ValueError("NaN cannot be serialized")
    return float(f"{x:.12g}")


def parse_ext(v: ExtNumber) -> float:
    return float(v)


class IndexReport(_Strict):
    category: Literal["A", "B", "C", "D"]
    alpha_hat: ExtNumber
    index: ExtNumber
    boundary_value: Optional[ExtNumber] = None
    boundary_status: Optional[Literal["lt_one", "eq_one"]] = None


class PayoffRow(_Strict):
    rho: float
    X: float
    Y: float


class SolveReport(_Strict):
    feasibility: Literal["RisklessBenchmark", "Solved", "Infeasible"]
    endowment: float
    benchmark: float
    y: float
    y_hat: ExtNumber
    V: ExtNumber
    alpha_star: ExtNumber
    lambda_star: Optional[float] = None
    closed_form: Optional[str] = None
    payoff: list[PayoffRow] = []


class CurveRow(_Strict):
    y: float
    V: ExtNumber
    alpha_star: ExtNumber
    feasibility: Literal["RisklessBenchmark", "Solved", "Infeasible"]


class SuiteRecord(_Strict):
    name: str
    passed: bool
    checks: int
    failures: list[str]


class CheckReport(_Strict):
    seed: int
    passed: bool
    suites: list[SuiteRecord]
