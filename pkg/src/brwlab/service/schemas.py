"""Request/response models for the laboratory service.

``SpecModel`` mirrors the canonical offspring-law document exactly, so a
spec file can be pasted into a request body unchanged.
"""
from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field

from .. import offspring


class SpecModel(BaseModel):
    form: Literal["product", "general"]
    count: Optional[list[list[float]]] = None
    step: Optional[list[list[float]]] = None
    outcomes: Optional[list[tuple[dict[str, int], float]]] = None

    def to_law(self) -> offspring.OffspringSpec:
        return offspring.from_obj(self.model_dump(exclude_none=True))

    @classmethod
    def from_law(cls, spec: offspring.OffspringSpec) -> "SpecModel":
        return cls(**offspring.to_obj(spec))


class EngineOptions(BaseModel):
    mode: Literal["exact", "frontier"] = "exact"
    window_width: Optional[int] = None
    count_cap: Optional[int] = None


class CalibrateRequest(BaseModel):
    spec: SpecModel
    tol: float = 1e-12


class CalibrateResponse(BaseModel):
    exists: bool
    limit: float
    theta_o: Optional[float] = None
    kappa_at: Optional[float] = None
    kappa_prime_at: Optional[float] = None
    kappa_double_prime_at: Optional[float] = None
    residual: Optional[float] = None
    speed: Optional[float] = None
    fluct_liminf: Optional[float] = None
    fluct_limsup: Optional[float] = None


class AssumptionsRequest(BaseModel):
    spec: SpecModel


class AssumptionsResponse(BaseModel):
    a1_ok: bool
    a2_ok: bool
    a3_ok: bool
    diagnostics: dict[str, str]
    w_moment_note: str


class PairRequest(BaseModel):
    blue_count_mean: float
    max_reach: int = 10_000


class PairResponse(BaseModel):
    red: SpecModel
    blue: SpecModel
    theta_r: float
    theta_b: float
    speed: float
    gap_constant_2c: float
    red_step_reach: int


class SimulateRequest(BaseModel):
    spec: SpecModel
    horizon: int = Field(gt=0)
    replicas: int = Field(default=1, ge=1)
    master_seed: int = 0
    start: int = 0
    engine: EngineOptions = EngineOptions()
    with_totals: bool = True


class SimulateResponse(BaseModel):
    csv: str
    final_max: list[int]
    saturated: list[bool]
    manifest: dict


class ArenaRequest(BaseModel):
    red_spec: SpecModel
    blue_spec: SpecModel
    horizon: int = Field(gt=0)
    replicas: int = Field(default=1, ge=1)
    master_seed: int = 0
    tie_break: Literal["red_first", "blue_first", "fair_coin"] = "red_first"
    red_start: int = 0
    blue_start: int = 1
    engine: EngineOptions = EngineOptions()
    analysis: Literal["record", "coexistence", "noncoexistence"] = "record"
    record_replicas: int = Field(default=1, ge=0)
    count_threshold: int = 50
    n0: Optional[int] = None
    hole_window: Optional[int] = None
    z_grid: list[float] = []
    c1: float = 0.5
    c2: float = 2.0


class ArenaResponse(BaseModel):
    csv: Optional[str]
    report: Optional[dict]
    manifest: dict


class OvershootRequest(BaseModel):
    spec: SpecModel
    z_grid: list[float] = [2.0, 3.0, 4.0, 5.0]
    replicas: int = Field(default=200, ge=1)
    master_seed: int = 0
    generation_cap: Optional[int] = None
    engine: EngineOptions = EngineOptions(mode="frontier")


class OvershootResponse(BaseModel):
    report: dict
    csv: str
    manifest: dict


class TailfitRequest(BaseModel):
    spec: SpecModel
    n: int = Field(default=50, gt=1)
    replicas: int = Field(default=10_000, ge=1)
    master_seed: int = 0
    min_exceedances: int = 50
    engine: EngineOptions = EngineOptions(mode="frontier")


class TailfitResponse(BaseModel):
    report: dict
    csv: str
    manifest: dict


class FluctRequest(BaseModel):
    spec: SpecModel
    n_grid: list[int] = [100, 200]
    replicas: int = Field(default=1000, ge=1)
    master_seed: int = 0
    epsilon: float = 0.5
    engine: EngineOptions = EngineOptions(mode="frontier")


class FluctResponse(BaseModel):
    report: dict
    csv: str
    manifest: dict


class DemocracyRequest(BaseModel):
    spec: SpecModel
    q: int = Field(default=3, ge=0)
    horizons: list[int] = [6, 10, 14]
    trees: int = Field(default=1000, ge=1)
    master_seed: int = 0
    max_individuals: int = 10**7


class DemocracyResponse(BaseModel):
    report: dict
    csv: str
    manifest: dict
