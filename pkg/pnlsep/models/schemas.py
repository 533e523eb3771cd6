"""
Pydantic schemas for run configuration, persisted models and reports.
"""

from typing import List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from pnlsep.exceptions import PnlError, RejectedInputError
from pnlsep.models.nonlinearity import (
    DEFAULT_DOMAIN,
    Cubic,
    Identity,
    InverseOf,
    MonotonePWL,
    Nonlinearity,
    ScaledTanh,
)
from pnlsep.models.pnl import PnlModel, Separator
from pnlsep.models.signals import MixingMatrix


MAX_SEED = 2 ** 64 - 1


class NonlinearitySpec(BaseModel):
    """Serializable description of one nonlinearity."""

    model_config = ConfigDict(extra="forbid")

    family: Literal["identity", "scaled_tanh", "cubic", "monotone_pwl", "inverse_of"]
    a: Optional[float] = None
    c: Optional[float] = None
    knots: Optional[List[float]] = None
    values: Optional[List[float]] = None
    base: Optional["NonlinearitySpec"] = None
    domain: Tuple[float, float] = DEFAULT_DOMAIN

    @model_validator(mode="after")
    def check_family_parameters(self):
        """Validate that the family can be constructed from the given fields."""
        try:
            self.build()
        except PnlError as e:
            raise ValueError(e.message)
        return self

    def build(self) -> Nonlinearity:
        if self.family == "identity":
            return Identity(domain=self.domain)
        if self.family == "scaled_tanh":
            return ScaledTanh(a=_required(self.a, "a", self.family), domain=self.domain)
        if self.family == "cubic":
            return Cubic(c=_required(self.c, "c", self.family), domain=self.domain)
        if self.family == "monotone_pwl":
            return MonotonePWL(
                knots=np.array(_required(self.knots, "knots", self.family)),
                values=np.array(_required(self.values, "values", self.family)),
                domain=self.domain,
            )
        return InverseOf(base=_required(self.base, "base", self.family).build())

    @classmethod
    def from_nonlinearity(cls, nl: Nonlinearity) -> "NonlinearitySpec":
        if isinstance(nl, InverseOf):
            return cls(family="inverse_of", base=cls.from_nonlinearity(nl.base))
        if isinstance(nl, ScaledTanh):
            return cls(family="scaled_tanh", a=nl.a, domain=nl.domain)
        if isinstance(nl, Cubic):
            return cls(family="cubic", c=nl.c, domain=nl.domain)
        if isinstance(nl, MonotonePWL):
            return cls(family="monotone_pwl", knots=nl.knots.tolist(), values=nl.values.tolist(), domain=nl.domain)
        return cls(family="identity", domain=nl.domain)


def _required(value, name: str, family: str):
    if value is None:
        raise RejectedInputError(f"{family} requires '{name}'")
    return value


class SourceSpec(BaseModel):
    """One synthetic source channel."""

    model_config = ConfigDict(extra="forbid")

    kind: Literal["uniform", "laplace", "sine", "sawtooth"] = "uniform"
    freq: Optional[float] = Field(default=None, gt=0, description="Cycles over the whole record")

    @model_validator(mode="after")
    def check_frequency(self):
        if self.kind in ("sine", "sawtooth") and self.freq is None:
            raise ValueError(f"{self.kind} source requires 'freq'")
        return self


class Scenario(BaseModel):
    """Seeded synthetic scenario: sources, mixing constraints and distortions."""

    model_config = ConfigDict(extra="forbid")

    seed: int = Field(default=0, ge=0, le=MAX_SEED)
    n: int = Field(default=2, ge=2)
    t: int = Field(default=5000, ge=500)
    sources: Optional[List[SourceSpec]] = None
    cond_max: float = Field(default=10.0, ge=1.0)
    distortions: Optional[List[NonlinearitySpec]] = None

    @model_validator(mode="after")
    def check_channel_lists(self):
        """Validate that per-channel lists match the channel count."""
        if self.sources is not None and len(self.sources) != self.n:
            raise ValueError(f"expected {self.n} source specs, got {len(self.sources)}")
        if self.distortions is not None and len(self.distortions) != self.n:
            raise ValueError(f"expected {self.n} distortion specs, got {len(self.distortions)}")
        return self

    @property
    def source_specs(self) -> List[SourceSpec]:
        return self.sources if self.sources is not None else [SourceSpec() for _ in range(self.n)]

    @property
    def distortion_specs(self) -> List[NonlinearitySpec]:
        if self.distortions is not None:
            return self.distortions
        return [NonlinearitySpec(family="identity") for _ in range(self.n)]


class TrainConfig(BaseModel):
    """Optimizer settings for the alternating separator fit."""

    model_config = ConfigDict(extra="forbid")

    max_outer_iters: int = Field(default=200, ge=1)
    w_step: float = Field(default=0.2, gt=0)
    g_step: float = Field(default=0.5, gt=0)
    step_halvings: int = Field(default=8, ge=0)
    converge_tol: float = Field(default=1e-6, gt=0)
    seed: int = Field(default=0, ge=0, le=MAX_SEED)
    score_estimator: Literal["gram_charlier", "kernel", "spacing"] = "gram_charlier"
    train_compensators: bool = True
    n_knots: int = Field(default=17, ge=3)
    patience: int = Field(default=5, ge=1)


class RunConfig(BaseModel):
    """Single JSON document covering scenario and training settings."""

    model_config = ConfigDict(extra="forbid")

    scenario: Scenario = Field(default_factory=Scenario)
    train: TrainConfig = Field(default_factory=TrainConfig)

    def with_seed(self, seed: Optional[int]) -> "RunConfig":
        """Return a copy with both seeds overridden (no-op for None)."""
        if seed is None:
            return self
        return RunConfig(
            scenario=self.scenario.model_copy(update={"seed": seed}),
            train=self.train.model_copy(update={"seed": seed}),
        )


class SeparatorModel(BaseModel):
    """Persisted separator: compensators and unmixing matrix."""

    compensators: List[NonlinearitySpec]
    unmixing: List[List[float]]

    @field_validator("unmixing")
    @classmethod
    def check_square(cls, v):
        if any(len(row) != len(v) for row in v):
            raise ValueError("unmixing matrix must be square")
        return v

    @classmethod
    def from_separator(cls, separator: Separator) -> "SeparatorModel":
        return cls(
            compensators=[NonlinearitySpec.from_nonlinearity(g) for g in separator.compensators],
            unmixing=separator.unmixing.entries.tolist(),
        )

    def build(self) -> Separator:
        return Separator(
            compensators=tuple(spec.build() for spec in self.compensators),
            unmixing=MixingMatrix(np.array(self.unmixing)),
        )


class GroundTruth(BaseModel):
    """Generative model behind a generated scenario."""

    seed: int
    mixing: List[List[float]]
    distortions: List[NonlinearitySpec]
    scenario: Scenario

    @classmethod
    def from_model(cls, model: PnlModel, scenario: Scenario) -> "GroundTruth":
        return cls(
            seed=scenario.seed,
            mixing=model.mixing.entries.tolist(),
            distortions=[NonlinearitySpec.from_nonlinearity(f) for f in model.distortions],
            scenario=scenario,
        )

    def build(self) -> PnlModel:
        return PnlModel(
            mixing=MixingMatrix(np.array(self.mixing)),
            distortions=tuple(spec.build() for spec in self.distortions),
        )


class TraceRow(BaseModel):
    """Contrast terms after one outer iteration."""

    iteration: int
    total: float
    entropy_sum: float
    log_det_w: float
    log_deriv_mean: float
    w_step: float = 0.0
    g_step: float = 0.0


class RunReport(BaseModel):
    """Report written by the separate command."""

    config: RunConfig
    trace: List[TraceRow]
    iterations: int
    converged: bool
    amari_index: Optional[float] = None
    sir_db: Optional[List[float]] = None
    baseline_amari: Optional[float] = None
    wall_time_ms: float
    tool_version: str


class EvalReport(BaseModel):
    """Report written by the evaluate command."""

    amari_index: float
    sir_db: List[float]
    mean_sir_db: float
    permutation: List[int]
    scales: List[float]
    tool_version: str


# Documents whose JSON Schema is exported by the schema command
EMITTED_DOCUMENTS = {
    "ground_truth": GroundTruth,
    "separator": SeparatorModel,
    "report": RunReport,
    "eval": EvalReport,
    "run_config": RunConfig,
}
