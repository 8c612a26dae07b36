"""Request/response models for the service API."""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field

from ..patterns import Schedule


class SchedulePayload(BaseModel):
    n: int
    kind: str = "unknown"
    patterns: list[list[int]]

    @classmethod
    def from_schedule(cls, s: Schedule) -> "SchedulePayload":
        return cls(n=s.n, kind=s.weight_kind, patterns=[list(p) for p in s.patterns])

    def to_schedule(self) -> Schedule:
        return Schedule(patterns=[tuple(p) for p in self.patterns], n=self.n, weight_kind=self.kind)


class BuildScheduleRequest(BaseModel):
    weight: Literal["unit", "rank", "cdf", "3line"]
    n: int = Field(gt=0, le=128)
    count: int = Field(gt=0)
    sigma: Optional[float] = None
    mc_samples: int = 10**5
    seed: int = 0


class BuildScheduleResponse(BaseModel):
    schedule: SchedulePayload
    first_weight: float
    last_weight: float


class TrainReshuffleRequest(BaseModel):
    base: SchedulePayload
    sigma: float = Field(gt=0)
    samples: int = Field(gt=0)
    seed: int = 0
    holdout_samples: int = 0  # 0 -> skip the before/after evaluation
    holdout_seed_offset: int = 1


class TrainReshuffleResponse(BaseModel):
    pi_tilde: list[int]  # 1-based base indices in reshuffled order
    sigma: float
    samples: int
    seed: int
    delta_q_base: Optional[float] = None
    delta_q_reshuffled: Optional[float] = None


class RMatrixRequest(BaseModel):
    schedule: SchedulePayload
    sigma: float = Field(gt=0)
    samples: int = Field(gt=0)
    seed: int = 0
    k: int = Field(default=200, gt=0)


class RMatrixResponse(BaseModel):
    k: int
    raw: list[list[float]]
    normalized: list[list[float]]


class DecodeRequest(BaseModel):
    code: str
    y: list[float]
    sigma: float = Field(gt=0)
    policy: Literal["schedule", "sgrand"] = "schedule"
    schedule: Optional[SchedulePayload] = None
    T: int = Field(default=10**4, ge=1)


class DecodeResponse(BaseModel):
    outcome: Literal["found", "abandoned"]
    codeword: Optional[str] = None
    queries_used: int


class DecoderPayload(BaseModel):
    name: str
    kind: Literal["static", "sgrand"]
    schedule: Optional[SchedulePayload] = None


class SimRequest(BaseModel):
    code: str
    decoder: DecoderPayload
    snr_db_list: list[float]
    convention: Literal["per_symbol", "ebn0"] = "per_symbol"
    T: int = 10**4
    max_trials: int = 10**6
    min_block_errors: int = 100
    seed: int = 0
    workers: int = 1
    mode: Literal["standard", "ml_lower_bound"] = "standard"


class SimRecordModel(BaseModel):
    snr_db: float
    trials: int
    block_errors: int
    bler: float
    avg_queries: float
    abandon_rate: float
    wall_seconds: float
    ci95_bler: float
    found_wrong: int
    abandoned: int
    avg_queries_se: float


class SimResponse(BaseModel):
    records: list[SimRecordModel]


class OracleVerifyRequest(BaseModel):
    quick: bool = False
    seed: int = 0


class OraclePropertyModel(BaseModel):
    name: str
    passed: bool
    detail: str


class OracleVerifyResponse(BaseModel):
    passed: bool
    properties: list[OraclePropertyModel]


class CodeInfoResponse(BaseModel):
    name: str
    n: int
    k: int
    rate: float


class HealthResponse(BaseModel):
    status: str
    version: str
