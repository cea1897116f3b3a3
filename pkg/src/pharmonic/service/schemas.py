"""Pydantic request/response models for the experiment service.

The same models validate CLI config files (each config carries a `command`
discriminator and may add `out`/`seed` bookkeeping); unknown keys are
rejected everywhere.
"""

from __future__ import annotations

from typing import Dict, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, model_validator

from ..setspec import SetSpec


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class LatticeSpec(_Strict):
    d: int = Field(ge=1, le=6)
    R: int = Field(ge=1)
    w: Optional[float] = Field(default=None, gt=0)
    vertex_budget: int = Field(default=80_000_000, gt=0)


class SolverOptions(_Strict):
    mode: Literal["gs", "redblack"] = "gs"
    scalar_method: Literal["illinois", "bisection"] = "illinois"
    accelerate: Union[Literal["auto"], bool] = "auto"


class CylinderDims(_Strict):
    h: int = Field(ge=0)
    r: int = Field(ge=0)


class CapacityRequest(_Strict):
    lattice: LatticeSpec
    p: float = Field(gt=1)
    source: Optional[SetSpec] = None
    sink: Optional[SetSpec] = None          # default: the window shell
    domain: Optional[SetSpec] = None        # default: the whole window
    cylinder_sweep: Optional[List[CylinderDims]] = None  # writes sweep.csv h,r,cap
    tol: float = Field(default=1e-8, gt=0)
    solver: SolverOptions = SolverOptions()
    include_potential: bool = True
    deterministic: bool = False
    threads: Optional[int] = Field(default=None, ge=1)

    @model_validator(mode="after")
    def _source_or_sweep(self):
        if (self.source is None) == (self.cylinder_sweep is None):
            raise ValueError("provide exactly one of `source` or `cylinder_sweep`")
        return self


class WienerRequest(_Strict):
    lattice: LatticeSpec
    p: float = Field(gt=1)
    a_set: SetSpec
    x0: Optional[List[int]] = None          # default: origin
    scales: int = Field(ge=1, le=12)
    tol: float = Field(default=1e-5, gt=0)
    assume_nonparabolic: Optional[bool] = None
    solver: SolverOptions = SolverOptions()
    deterministic: bool = False
    threads: Optional[int] = Field(default=None, ge=1)

    @model_validator(mode="after")
    def _window_fits(self):
        if 2 ** (self.scales + 1) > self.lattice.R:
            raise ValueError(
                f"window radius {self.lattice.R} cannot hold the dyadic ball "
                f"of radius {2 ** (self.scales + 1)} needed for {self.scales} scales")
        return self


class MassiveRequest(_Strict):
    lattice: LatticeSpec                    # R bounds the largest usable radius
    p: float = Field(gt=1)
    omega: SetSpec
    x0: List[int]
    radii: List[int] = Field(min_length=1)
    tol: float = Field(default=1e-6, gt=0)
    solver: SolverOptions = SolverOptions()
    deterministic: bool = False
    threads: Optional[int] = Field(default=None, ge=1)

    @model_validator(mode="after")
    def _radii_fit(self):
        if max(self.radii) > self.lattice.R:
            raise ValueError("largest radius exceeds the lattice window radius")
        return self


class ParabolicRequest(_Strict):
    lattice: LatticeSpec
    p: float = Field(gt=1)
    k_set: Optional[SetSpec] = None         # default: the origin
    radii: List[int] = Field(min_length=1)
    tol: float = Field(default=1e-8, gt=0)
    solver: SolverOptions = SolverOptions()
    deterministic: bool = False
    threads: Optional[int] = Field(default=None, ge=1)

    @model_validator(mode="after")
    def _radii_fit(self):
        if max(self.radii) > self.lattice.R:
            raise ValueError("largest radius exceeds the lattice window radius")
        return self


class ThornRequest(_Strict):
    d: int = Field(default=3, ge=3, le=6)
    p: float = Field(gt=1)
    alpha: float = Field(ge=0)
    coeff: float = Field(default=1.0, gt=0)
    scales: int = Field(default=5, ge=1, le=12)
    window_R: Optional[int] = Field(default=None, ge=2)
    tol: float = Field(default=1e-5, gt=0)
    solver: SolverOptions = SolverOptions()
    deterministic: bool = False
    threads: Optional[int] = Field(default=None, ge=1)


class SelftestRequest(_Strict):
    level: Literal["full", "quick"] = "full"
    seed: int = 20260810


class ErrorBody(_Strict):
    code: str
    message: str


class ErrorResponse(_Strict):
    error: ErrorBody


class CapacitySummary(_Strict):
    value: float
    uncertainty: float
    convention: str
    p: float
    sizes: Dict[str, int]
    sweeps: int
    converged: bool
    max_residual: float


class CapacityResponse(_Strict):
    summary: CapacitySummary
    files: Dict[str, str]


class WienerSummary(_Strict):
    p: float
    n_scales: int
    fit_ratio: Optional[float]
    classification: str
    partial_main: float
    window_radius: Optional[int]
    bracket_ok: bool
    terms_main: List[float]
    converged_all: bool
    notes: List[str]


class WienerResponse(_Strict):
    summary: WienerSummary
    files: Dict[str, str]


class MassiveSummary(_Strict):
    verdict: str
    limit: float
    err_proxy: float
    margin: float
    values: List[float]
    radii: List[int]
    p: float
    notes: List[str]


class MassiveResponse(_Strict):
    summary: MassiveSummary
    files: Dict[str, str]


class ParabolicSummary(_Strict):
    verdict: str
    estimate: float
    err_proxy: float
    values: List[float]
    radii: List[int]
    p: float
    notes: List[str]


class ParabolicResponse(_Strict):
    summary: ParabolicSummary
    files: Dict[str, str]


class SelftestCheck(_Strict):
    name: str
    passed: bool
    detail: str


class SelftestResponse(_Strict):
    passed: bool
    checks: List[SelftestCheck]


# ------------------------------------------------------------------
# CLI config wrappers: request payload + command discriminator + output info


class _ConfigExtras(BaseModel):
    out: Optional[str] = None
    seed: Optional[int] = None


class CapacityConfig(CapacityRequest, _ConfigExtras):
    command: Literal["capacity"]


class WienerConfig(WienerRequest, _ConfigExtras):
    command: Literal["wiener"]


class MassiveConfig(MassiveRequest, _ConfigExtras):
    command: Literal["massive"]


class ParabolicConfig(ParabolicRequest, _ConfigExtras):
    command: Literal["parabolic"]


class ThornConfig(ThornRequest, _ConfigExtras):
    command: Literal["thorn"]


ExperimentConfig = Union[CapacityConfig, WienerConfig, MassiveConfig,
                         ParabolicConfig, ThornConfig]

config_adapter = TypeAdapter(ExperimentConfig)

CONFIG_MODELS = {
    "capacity": CapacityConfig,
    "wiener": WienerConfig,
    "massive": MassiveConfig,
    "parabolic": ParabolicConfig,
    "thorn": ThornConfig,
}

REQUEST_FIELDS = {
    "capacity": CapacityRequest,
    "wiener": WienerRequest,
    "massive": MassiveRequest,
    "parabolic": ParabolicRequest,
    "thorn": ThornRequest,
}
