import csv
import io
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field

from ..models import enums


class _DiagnosticsDTO(BaseModel):
    model_config = ConfigDict(populate_by_name=True)


class SlaterCheck(_DiagnosticsDTO):
    ok: bool
    value: float = Field(description="g(x, 0)")
    component: int = Field(description="Index of the component attaining the maximum at the origin")


class ProbeWitness(_DiagnosticsDTO):
    y: List[float]
    z: List[float]
    component: int
    numerator: float
    envelope: float
    ratio: float


class GrowthCheck(_DiagnosticsDTO):
    ok: bool
    level: float
    envelope: enums.GrowthEnvelope
    probes: int
    worst_ratio: float
    witness: Optional[ProbeWitness] = None


class NiceDirectionProbe(_DiagnosticsDTO):
    direction: List[float]
    level: float
    ok: bool
    probes: int
    worst_ratio: float
    witness: Optional[ProbeWitness] = None


class BoundCheck(_DiagnosticsDTO):
    directions: int
    violations: int
    denominator_violations: int
    worst_ratio: float


class DiagnosticsReport(_DiagnosticsDTO):
    slater: SlaterCheck
    growth: Optional[GrowthCheck] = None
    nice_directions: List[NiceDirectionProbe] = Field(default_factory=list)
    bound: Optional[BoundCheck] = None
    tie_fraction: float = 0.0
    infinite_fraction: float = 0.0
    all_directions_finite: bool = False
    k_star: float = 0.0
    constant_r: float = 0.0
    condition_number: float = 1.0
    condition_warning: bool = False
    gradient_check_error: Optional[float] = None
    convexity_ok: Optional[bool] = None
    cone_term: str = "not checked"
    differentiability_verdict: enums.DifferentiabilityVerdict = enums.DifferentiabilityVerdict.UNKNOWN

    @property
    def growth_ok(self) -> bool:
        return self.growth is not None and self.growth.ok


class WitnessRow(_DiagnosticsDTO):
    t: float
    phi_gap: float
    eps_sqrt_t: float
    ratio: float


class WitnessTable(_DiagnosticsDTO):
    epsilon: float
    phi_zero: float
    rows: List[WitnessRow]
    gap_bound_holds: bool
    ratio_diverges: bool

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["t", "phi_gap", "eps_sqrt_t", "ratio"])
        for row in self.rows:
            writer.writerow([repr(row.t), repr(row.phi_gap), repr(row.eps_sqrt_t), repr(row.ratio)])
        return buffer.getvalue()
