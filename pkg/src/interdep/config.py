"""
Run configuration: a YAML (or JSON) document with ``schema: 1``.

Validation errors name the offending key and the line it appears on.
Unknown keys are rejected.
"""

from __future__ import annotations

from pathlib import Path
from typing import Literal, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from interdep.dgp import AssignmentSpec, StructuralParams
from interdep.errors import InterdepError
from interdep.mcharness import ESTIMATORS, ExperimentConfig
from interdep.netgen import NetworkParams


class ConfigError(InterdepError):
    """Invalid run configuration; the message carries a line anchor."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True, allow_inf_nan=False)


class NetworkSection(_Strict):
    k: int = Field(4, ge=1)
    decay: float = Field(0.0, ge=0)
    econ_weight: float = Field(0.0, ge=0, le=1)
    row_normalize: bool = True


class ParamsSection(_Strict):
    beta: float = 1.0
    rho: float = 0.4
    gamma: list[float] = Field(default_factory=lambda: [0.5], min_length=1)
    sigma: float = Field(1.0, gt=0)


class AssignmentSection(_Strict):
    label: str | None = None
    mode: Literal["exogenous", "confounded"] = "exogenous"
    p: float = Field(0.5, gt=0, lt=1)
    kappa: float = 0.0

    @property
    def name(self) -> str:
        return self.label or self.mode


class ChecksSection(_Strict):
    reps: int = Field(4000, ge=2)
    pairs: int = Field(5, ge=1)


class RunConfig(_Strict):
    schema_version: Literal[1] = Field(alias="schema")
    seed: int = Field(42, ge=0, lt=2**64)
    n_units: int = Field(200, ge=2)
    n_reps: int = Field(500, ge=1)
    coord_dim: int = Field(2, ge=1)
    intercept: bool = True
    network: NetworkSection = Field(default_factory=NetworkSection)
    params: ParamsSection = Field(default_factory=ParamsSection)
    assignment: Union[AssignmentSection, list[AssignmentSection]] = Field(
        default_factory=AssignmentSection
    )
    estimators: list[Literal["sar_ml", "ols"]] = Field(default_factory=lambda: list(ESTIMATORS),
                                                        min_length=1)
    checks: ChecksSection = Field(default_factory=ChecksSection)
    histogram_bins: int = Field(30, ge=1)
    out: str | None = None

    model_config = ConfigDict(extra="forbid", frozen=True, populate_by_name=True, allow_inf_nan=False)

    @field_validator("assignment")
    @classmethod
    def _nonempty(cls, v):
        if isinstance(v, list):
            if not v:
                raise ValueError("at least one assignment block is required")
            names = [a.name for a in v]
            if len(set(names)) != len(names):
                raise ValueError(f"assignment labels must be unique, got {names}")
        return v

    @property
    def assignments(self) -> list[AssignmentSection]:
        return self.assignment if isinstance(self.assignment, list) else [self.assignment]

    def experiment(self, block: AssignmentSection | None = None, seed: int | None = None) -> ExperimentConfig:
        block = block or self.assignments[0]
        return ExperimentConfig(
            n_units=self.n_units,
            n_reps=self.n_reps,
            seed=self.seed if seed is None else seed,
            network=NetworkParams(**self.network.model_dump()),
            params=StructuralParams(beta=self.params.beta, rho=self.params.rho,
                                    gamma=tuple(self.params.gamma), sigma=self.params.sigma),
            assignment=AssignmentSpec(mode=block.mode, p=block.p, kappa=block.kappa),
            estimators=tuple(self.estimators),
            coord_dim=self.coord_dim,
            intercept=self.intercept,
        )


def _node_line(root, loc) -> int | None:
    node = root
    line = node.start_mark.line + 1 if node is not None else None
    for key in loc:
        if isinstance(node, yaml.MappingNode):
            match = [(k, v) for k, v in node.value if k.value == str(key)]
            if not match:
                break
            node = match[0][1]
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            node = node.value[key]
        else:
            break
        line = node.start_mark.line + 1
    return line


def _format(source: str, line, loc, msg) -> str:
    where = f"{source}:{line}" if line else source
    key = ".".join(str(k) for k in loc) or "<document>"
    return f"{where}: {key}: {msg}"


def _cross_checks(cfg: RunConfig):
    if cfg.network.k >= cfg.n_units:
        yield ("network", "k"), f"k={cfg.network.k} must be smaller than n_units={cfg.n_units}"


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        raise ConfigError(_format(source, line, (), f"malformed document: {exc}")) from exc
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(_format(source, 1, (), "top level must be a mapping"))
    if "schema" not in data:
        raise ConfigError(_format(source, 1, ("schema",), "missing required key 'schema: 1'"))
    try:
        cfg = RunConfig.model_validate(data)
    except ValidationError as exc:
        msgs = []
        for err in exc.errors():
            loc = tuple(k for k in err["loc"] if not (isinstance(k, str) and k in
                                                        ("AssignmentSection", "list[AssignmentSection]")))
            msgs.append(_format(source, _node_line(root, loc), loc, err["msg"]))
        raise ConfigError("\n".join(dict.fromkeys(msgs))) from None
    problems = list(_cross_checks(cfg))
    if problems:
        raise ConfigError("\n".join(_format(source, _node_line(root, loc), loc, msg)
                                    for loc, msg in problems))
    return cfg


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc.strerror}") from exc
    return parse_config(text, str(path))


def default_config() -> RunConfig:
    return RunConfig.model_validate({"schema": 1})


DEFAULT_YAML = """\
schema: 1
seed: 42
n_units: 200
n_reps: 500
coord_dim: 2
intercept: true
network:
  k: 4
  decay: 0.0
  econ_weight: 0.0
  row_normalize: true
params:
  beta: 1.0
  rho: 0.4
  gamma: [0.5]
  sigma: 1.0
assignment:
  - label: exogenous
    mode: exogenous
    p: 0.5
  - label: confounded
    mode: confounded
    p: 0.5
    kappa: 1.0
estimators: [sar_ml, ols]
checks:
  reps: 4000
  pairs: 5
histogram_bins: 30
"""
