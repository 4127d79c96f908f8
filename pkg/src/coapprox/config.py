"""Job configuration: YAML text validated by pydantic models."""
from __future__ import annotations

import math
from typing import Literal, Union

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import CoapproxError

WEIGHTS_DEFAULT = "2^-k renormalized"
MAX_FAMILY = 64
VERIFY_TARGETS = ("counterexample_linf4", "halfspace", "gauge", "decompose", "intersection",
                  "predicates", "counterexample", "nonconvex", "realification", "implication", "all")


class ConfigError(CoapproxError):
    """Malformed or invalid configuration; ``where`` is 'line N, field a.b' when known."""

    def __init__(self, message: str, where: str = ""):
        super().__init__(f"{where}: {message}" if where else message)
        self.where = where


class FieldProblem(ValueError):
    """Cross-field validation failure that knows which field to blame."""

    def __init__(self, loc: tuple, message: str):
        super().__init__(message)
        self.loc = loc


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


def _parse_p(v):
    if isinstance(v, str):
        if v.strip().lower() in ("inf", "infinity"):
            return "inf"
        v = float(v)
    if isinstance(v, (int, float)):
        if math.isinf(v):
            return "inf"
        if not v >= 1:
            raise ValueError("p must be >= 1 or 'inf'")
        return float(v)
    raise ValueError("p must be a number >= 1 or 'inf'")


class SpaceConfig(_Strict):
    kind: Literal["lp"] = "lp"
    p: Union[float, str] = 2.0
    dimension: int = Field(2, ge=1)

    @field_validator("p", mode="before")
    @classmethod
    def _check_p(cls, v):
        return _parse_p(v)

    def spec(self):
        from .spaces import NormSpec
        return NormSpec.lp(self.dimension, self.p)


class BodyConfig(_Strict):
    kind: Literal["box", "ball", "polytope"]
    lower: list[float] | None = None
    upper: list[float] | None = None
    p: Union[float, str] = 2.0
    radius: float = Field(1.0, gt=0)
    center: list[float] | None = None
    vertices: list[list[float]] | None = None

    @field_validator("p", mode="before")
    @classmethod
    def _check_p(cls, v):
        return _parse_p(v)

    @model_validator(mode="after")
    def _shape(self):
        if self.kind == "box":
            if self.lower is None or self.upper is None or len(self.lower) != len(self.upper):
                raise ValueError("box needs lower and upper of equal length")
            if not all(a < 0 < b for a, b in zip(self.lower, self.upper)):
                raise ValueError("box needs lower < 0 < upper so that 0 is interior")
        if self.kind == "polytope" and not self.vertices:
            raise ValueError("polytope needs vertices")
        return self


class HalfSpaceConfig(_Strict):
    f: list[float]
    d: float = 0.0

    @field_validator("f")
    @classmethod
    def _nonzero(cls, v):
        if not v or not np.any(np.asarray(v, dtype=float) != 0) or not np.all(np.isfinite(v)):
            raise ValueError("functional must be finite and nonzero to be normalizable")
        return v


class IterationSection(_Strict):
    max_iter: int = Field(10_000, ge=1)
    tol: float = Field(1e-10, gt=0)
    relaxation: float = Field(0.5, gt=0, le=1)


class OracleSection(_Strict):
    h: float = Field(0.05, gt=0)
    R: float = Field(10.0, gt=0)
    max_queries: int = Field(64, ge=1)


class DecomposeSection(_Strict):
    n: int = Field(8, ge=1)
    hausdorff_samples: int = Field(4096, ge=16)


class SweepSection(_Strict):
    map: Literal["nonconvex_linf2", "halfspaces", "identity"] = "nonconvex_linf2"
    pairs: int = Field(100_000, ge=1)


class JobConfig(_Strict):
    operation: Literal["gauge", "decompose", "project", "verify", "counterexample", "sweep"] = "verify"
    target: str = "counterexample_linf4"
    seed: int = 0
    tol: float = Field(1e-9, gt=0)
    space: SpaceConfig = SpaceConfig()
    body: BodyConfig | None = None
    halfspaces: list[HalfSpaceConfig] = Field(default_factory=list, max_length=MAX_FAMILY)
    weights: Union[str, list[float]] = WEIGHTS_DEFAULT
    points: list[list[float]] = Field(default_factory=list)
    iteration: IterationSection = IterationSection()
    oracle: OracleSection = OracleSection()
    decompose: DecomposeSection = DecomposeSection()
    sweep: SweepSection = SweepSection()
    output: str | None = None

    @field_validator("target")
    @classmethod
    def _target(cls, v):
        if v not in VERIFY_TARGETS:
            raise ValueError(f"unknown target {v!r}; choose from {', '.join(VERIFY_TARGETS)}")
        return v

    @field_validator("weights")
    @classmethod
    def _weights(cls, v):
        if isinstance(v, str):
            if v not in (WEIGHTS_DEFAULT, "equal"):
                raise ValueError(f"weights must be {WEIGHTS_DEFAULT!r}, 'equal' or a list")
        else:
            w = np.asarray(v, dtype=float)
            if w.size == 0 or np.any(w <= 0) or abs(w.sum() - 1) > 1e-12:
                raise ValueError("weights must be positive and sum to 1")
        return v

    @model_validator(mode="after")
    def _consistent(self):
        n = self.space.dimension
        for i, h in enumerate(self.halfspaces):
            if len(h.f) != n:
                raise FieldProblem(("halfspaces", i, "f"),
                                   f"length {len(h.f)} does not match space dimension {n}")
        for i, x in enumerate(self.points):
            if len(x) != n:
                raise FieldProblem(("points", i), f"length {len(x)} does not match space dimension {n}")
        if isinstance(self.weights, list) and len(self.weights) != len(self.halfspaces):
            raise FieldProblem(("weights",), "need one weight per half-space")
        if self.operation in ("gauge", "decompose") and self.body is None:
            raise FieldProblem(("operation",), f"operation {self.operation!r} needs a body")
        if self.operation == "project" and not self.halfspaces:
            raise FieldProblem(("operation",), "operation 'project' needs halfspaces")
        return self

    def weight_vector(self):
        k = len(self.halfspaces)
        if self.weights == WEIGHTS_DEFAULT:
            return None
        if self.weights == "equal":
            return np.full(k, 1.0 / k)
        return np.asarray(self.weights, dtype=float)


def _node_line(root, loc) -> int | None:
    """Line (1-based) of the YAML node addressed by a pydantic error location."""
    node, line = root, None
    for key in loc:
        if node is None:
            break
        line = node.start_mark.line + 1
        if isinstance(node, yaml.MappingNode):
            nxt = None
            for k, v in node.value:
                if k.value == key:
                    nxt = v
                    line = k.start_mark.line + 1
            node = nxt
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            node = node.value[key]
        else:
            break
    if node is not None:
        line = node.start_mark.line + 1
    return line


def parse_config(text: str) -> JobConfig:
    """Parse YAML text into a JobConfig, raising ConfigError with a location."""
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}" if mark is not None else ""
        raise ConfigError(f"malformed YAML ({getattr(exc, 'problem', exc)})", where) from None
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("top level must be a mapping", "line 1")
    try:
        return JobConfig.model_validate(data)
    except ValidationError as exc:
        err = exc.errors()[0]
        loc = tuple(p for p in err["loc"] if not (isinstance(p, str) and p.startswith("function-")))
        cause = err.get("ctx", {}).get("error")
        if isinstance(cause, FieldProblem):
            loc = loc + cause.loc
            err = {**err, "msg": str(cause)}
        field = ".".join(str(p) for p in loc) or "<root>"
        line = _node_line(root, loc) if root is not None else None
        where = f"line {line}, field {field}" if line else f"field {field}"
        raise ConfigError(err["msg"], where) from None


def load_config(path) -> JobConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


SCHEMA_HEADER = """\
# coapprox job configuration (YAML, UTF-8). Defaults shown.
# operation: gauge | decompose | project | verify | counterexample | sweep
# target (verify): counterexample_linf4 | halfspace | gauge | decompose | intersection
#                  | predicates | counterexample | nonconvex | realification | implication | all
# space.p: any real >= 1, or inf
# body.kind: box (lower, upper) | ball (p, radius, center) | polytope (vertices)
# halfspaces: list of {f: [..], d: ..}, at most 64; f is normalized to unit dual norm
# weights: "2^-k renormalized" | equal | explicit list summing to 1
# iteration: relaxed fixed-point iteration x <- (1 - relaxation) x + relaxation Q(x)
# oracle: grid resolution h and truncation radius R for sampled sets
"""


def schema_dump() -> str:
    defaults = JobConfig().model_dump(mode="json")
    return SCHEMA_HEADER + yaml.safe_dump(defaults, sort_keys=False, default_flow_style=False)
