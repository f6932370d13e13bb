import math
from typing import Annotated, Any, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..models import enums
from .dto_diagnostics import DiagnosticsReport, WitnessTable


class _BaseDTO(BaseModel):
    model_config = ConfigDict(
        populate_by_name=True,
        ser_json_inf_nan="strings",
    )

    @staticmethod
    def _non_finite_fields(value: Any, path: str = "") -> List[str]:
        if isinstance(value, float):
            return [] if math.isfinite(value) else [path or "<root>"]
        if isinstance(value, dict):
            return [p for k, v in value.items() for p in _BaseDTO._non_finite_fields(v, f"{path}.{k}" if path else str(k))]
        if isinstance(value, (list, tuple)):
            return [p for i, v in enumerate(value) for p in _BaseDTO._non_finite_fields(v, f"{path}[{i}]")]
        return []


class _ProblemDTO(_BaseDTO):
    model_config = ConfigDict(extra="forbid")


# Problem file schema

class ExprComponentSpec(_ProblemDTO):
    kind: Literal["expr"] = "expr"
    src: str = Field(min_length=1)
    convex: bool = True


class AffineComponentSpec(_ProblemDTO):
    kind: Literal["affine"] = "affine"
    w: List[float]
    c: List[float]
    d: float = 0.0


class BallComponentSpec(_ProblemDTO):
    kind: Literal["ball"] = "ball"
    radius_expr: str = Field(min_length=1)


class SeparableComponentSpec(_ProblemDTO):
    kind: Literal["separable"] = "separable"
    a_expr: str = Field(min_length=1)
    q: List[float]

    @field_validator("q")
    @classmethod
    def validate_weights(cls, q: List[float]) -> List[float]:
        if any(w < 0.0 for w in q):
            raise ValueError(f"separable weights must be nonnegative, got {q}")
        return q


class NonLipschitzExampleSpec(_ProblemDTO):
    kind: Literal["nonlipschitz_example", "paper_example"] = "nonlipschitz_example"


ComponentSpec = Annotated[
    Union[ExprComponentSpec, AffineComponentSpec, BallComponentSpec, SeparableComponentSpec, NonLipschitzExampleSpec],
    Field(discriminator="kind"),
]


class ProblemSpec(_ProblemDTO):
    name: Optional[str] = None
    description: Optional[str] = None
    n: int = Field(ge=1)
    m: int = Field(ge=1)
    mean: Optional[List[float]] = None
    covariance: Optional[List[List[float]]] = None
    components: List[ComponentSpec] = Field(min_length=1)
    reference_x: Optional[List[float]] = Field(None, description="Decision used when none is given")

    @model_validator(mode="after")
    def validate_dimensions(self):
        if self.mean is None:
            self.mean = [0.0] * self.m
        if self.covariance is None:
            self.covariance = [[1.0 if i == j else 0.0 for j in range(self.m)] for i in range(self.m)]
        if len(self.mean) != self.m:
            raise ValueError(f"mean has length {len(self.mean)}, expected m={self.m}")
        if len(self.covariance) != self.m or any(len(row) != self.m for row in self.covariance):
            raise ValueError(f"covariance must be {self.m}x{self.m}")
        if self.reference_x is not None and len(self.reference_x) != self.n:
            raise ValueError(f"reference_x has length {len(self.reference_x)}, expected n={self.n}")
        for i, component in enumerate(self.components):
            if isinstance(component, AffineComponentSpec):
                if len(component.w) != self.n or len(component.c) != self.m:
                    raise ValueError(f"affine component {i}: w needs length {self.n} and c length {self.m}")
            elif isinstance(component, SeparableComponentSpec):
                if len(component.q) != self.m:
                    raise ValueError(f"separable component {i}: q needs length {self.m}")
            elif isinstance(component, NonLipschitzExampleSpec):
                if (self.n, self.m) != (1, 2):
                    raise ValueError(f"component {i}: the non-Lipschitz example needs n=1, m=2")
        return self


# Run configuration

class RunConfig(_BaseDTO):
    model_config = ConfigDict(extra="forbid")

    command: enums.Command
    problem: Optional[str] = None
    x: Optional[List[float]] = None
    sampler: enums.SamplerKind = enums.SamplerKind.QMC
    samples: int = Field(2 ** 14, ge=1)
    seed: int = 0
    replicates: int = Field(8, ge=1)
    sequence: int = Field(0, ge=0)
    output_format: Optional[enums.OutputFormat] = None
    growth_level: float = Field(1.0, gt=0.0)
    envelope: enums.GrowthEnvelope = enums.GrowthEnvelope.NICE
    directions: List[List[float]] = Field(default_factory=list)
    policies: List[enums.TiePolicy] = Field(default_factory=lambda: list(enums.TiePolicy))
    oracle_samples: int = Field(100_000, ge=1)
    workers: int = Field(1, ge=1)
    t_grid: List[float] = Field(default_factory=lambda: [1e-1, 1e-2, 1e-3, 1e-4])
    tie_tolerance: Optional[float] = Field(None, gt=0.0)
    root_tolerance: Optional[float] = Field(None, gt=0.0)
    fd_step: Optional[float] = Field(None, gt=0.0)
    log_level: Optional[str] = None

    @model_validator(mode="after")
    def validate_problem(self):
        if self.command != enums.Command.EXAMPLE and not self.problem:
            raise ValueError(f"command '{self.command.value}' needs --problem")
        return self

    def settings_overrides(self) -> dict:
        overrides = {
            "samples": self.samples,
            "sampler": self.sampler,
            "seed": self.seed,
            "replicates": self.replicates,
            "sequence": self.sequence,
            "workers": self.workers,
            "growth_level": self.growth_level,
        }
        for key in ("tie_tolerance", "root_tolerance", "fd_step", "log_level"):
            value = getattr(self, key)
            if value is not None:
                overrides[key] = value
        return overrides

    @property
    def resolved_format(self) -> enums.OutputFormat:
        if self.output_format is not None:
            return self.output_format
        return enums.OutputFormat.CSV if self.command == enums.Command.EXAMPLE else enums.OutputFormat.JSON


# Results

class Estimate(_BaseDTO):
    value: Union[float, List[float]]
    stderr: Union[float, List[float]]
    samples: int = Field(alias="N")
    sampler: str
    tie_fraction: float = 0.0
    infinite_fraction: float = 0.0
    residual_infinite_mass: float = 0.0
    policy: Optional[enums.TiePolicy] = None


class PolicyGradient(_BaseDTO):
    policy: enums.TiePolicy
    coordinate: Optional[int] = None
    value: List[float]
    stderr: List[float]


class SubdiffEnclosure(_BaseDTO):
    policies: List[PolicyGradient] = Field(min_length=1)
    hull_lower: List[float]
    hull_upper: List[float]
    hull_width: List[float]
    samples: int = Field(alias="N")
    sampler: str
    tie_fraction: float
    infinite_fraction: float
    residual_infinite_mass: float = 0.0
    growth_ok: Optional[bool] = None
    cone_term: str
    ball_radius: Optional[float] = None

    @model_validator(mode="after")
    def validate_hull(self):
        for gradient in self.policies:
            for k, value in enumerate(gradient.value):
                if not self.hull_lower[k] <= value <= self.hull_upper[k]:
                    raise ValueError(f"hull does not contain policy {gradient.policy.value} in coordinate {k}")
        return self


class OracleReport(_BaseDTO):
    probability: Estimate
    spheric_radial: Optional[Estimate] = None
    agreement: Optional[bool] = None
    gradient_fd: Optional[Estimate] = None
    gradient: Optional[Estimate] = None


class Provenance(_BaseDTO):
    version: str
    command: enums.Command
    problem: Optional[str] = None
    x: Optional[List[float]] = None
    sampler: Optional[str] = None
    samples: Optional[int] = Field(None, alias="N")
    seed: int
    replicates: int
    workers: int
    settings: dict


class RunReport(_BaseDTO):
    provenance: Provenance
    result: Union[Estimate, SubdiffEnclosure, OracleReport, DiagnosticsReport, WitnessTable]
    diagnostics: Optional[DiagnosticsReport] = None

    @model_validator(mode="after")
    def validate_finite(self):
        bad = self._non_finite_fields(self.model_dump(mode="python"))
        if bad:
            raise ValueError(f"non-finite values in report fields: {', '.join(bad)}")
        return self
