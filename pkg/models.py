# models.py
"""Validated records shared by the command line and the HTTP surface."""

import math
from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

TOOL_VERSION = "orbitgap 0.3.0"

STATISTICS = ("all", "diag", "band", "offband", "farthirds")
SYMBOLIC_SCHEDULE = [2 ** 10, 2 ** 12, 2 ** 14, 2 ** 16, 2 ** 18]
CIRCLE_SCHEDULE = [2 ** 10, 2 ** 12, 2 ** 14]


def default_cap(n: int) -> int:
    """Extra symbols beyond the n window starts: max(64, ceil(8 log2 n))."""
    return max(64, math.ceil(8 * math.log2(max(n, 2))))


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    model: Literal["bernoulli", "circle", "doubling"] = "bernoulli"
    pA: float = Field(0.5, gt=0.0, lt=1.0)
    pB: float = Field(0.5, gt=0.0, lt=1.0)
    degrees: List[int] = Field(default_factory=lambda: [2, 3])
    preset: str = "cosine-doubling"
    n_schedule: Optional[List[int]] = None
    replicas: int = Field(200, ge=1)
    seed: int = Field(0, ge=0, lt=2 ** 64)
    statistics: List[Literal["all", "diag", "band", "offband", "farthirds"]] = Field(default_factory=lambda: ["all"])
    c4: float = Field(2.0, gt=0.0)
    cap: Optional[int] = Field(None, ge=1)
    max_cap: int = Field(4096, ge=1)
    workers: int = Field(1, ge=1)
    grid_size: int = Field(4096, ge=256)
    depth: int = Field(40, ge=1)
    tolerance: float = Field(1e-6, ge=0.0)
    max_depth: int = Field(1024, ge=1)
    out_json: Optional[str] = None
    out_csv: Optional[str] = None

    @field_validator("degrees")
    @classmethod
    def check_degrees(cls, v):
        if not v or any(d < 2 for d in v):
            raise ValueError(f"degrees must be a non-empty list of integers >= 2, got {v}")
        return v

    @field_validator("statistics")
    @classmethod
    def dedupe_statistics(cls, v):
        if not v:
            raise ValueError("at least one statistic is required")
        return [s for s in STATISTICS if s in v]

    @model_validator(mode="after")
    def fill_schedule(self):
        if self.n_schedule is None:
            self.n_schedule = list(SYMBOLIC_SCHEDULE if self.model == "bernoulli" else CIRCLE_SCHEDULE)
        if any(n < 3 for n in self.n_schedule):
            raise ValueError(f"window lengths must be >= 3, got {self.n_schedule}")
        if any(b <= a for a, b in zip(self.n_schedule, self.n_schedule[1:])):
            raise ValueError(f"n_schedule must be strictly increasing, got {self.n_schedule}")
        return self

    def cap_for(self, n: int) -> int:
        return self.cap if self.cap is not None else default_cap(n)


class ReplicaRecord(BaseModel):
    """One replica's statistics at one n."""

    replica: int
    n: int
    statistic: str
    value: float
    exponent: float
    witness: List[int]
    truncated: bool
    cap: int


class QuantileRow(BaseModel):
    n: int
    statistic: str
    q25: float
    q50: float
    q75: float
    median_value: float
    truncated: int
    replicas: int


class TheoryLines(BaseModel):
    annealed: float
    quenched: float
    limit: float


class ExponentReport(BaseModel):
    tool_version: str = TOOL_VERSION
    config: ExperimentConfig
    seed: int
    rows: List[QuantileRow]
    theory: Optional[TheoryLines] = None
    note: Optional[str] = None
    cap_increases: Dict[str, int] = Field(default_factory=dict)


class EntropyRequest(BaseModel):
    pA: float = Field(..., gt=0.0, lt=1.0)
    pB: float = Field(..., gt=0.0, lt=1.0)


class EntropyRecord(BaseModel):
    pA: float
    pB: float
    h2_an: float
    h2_qu: float
    exponent: float
    regime: str
    h2_qu_printed: float
    note: str
