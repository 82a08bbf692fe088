"""Pydantic schemas for model parameters, experiment configs and result rows"""
import math
import re
from datetime import datetime
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..core.config import settings


class ExperimentKindEnum(str, Enum):
    VARIANCE_SWEEP = "variance_sweep"
    ADIABATIC_SWEEP = "adiabatic_sweep"
    ENTROPY_SWEEP = "entropy_sweep"
    THETA_CURVE = "theta_curve"
    GAP_AUDIT = "gap_audit"
    DEPTH_AUDIT = "depth_audit"


class ProductStateKindEnum(str, Enum):
    AFM = "afm"
    THETA = "theta"


class ScheduleShapeEnum(str, Enum):
    SIN_SIN_SQUARED = "sin-sin-squared"
    LINEAR = "linear"


class PointStatusEnum(str, Enum):
    OK = "ok"
    FAILED = "failed"


# ===== MODEL SCHEMAS =====

class TfiParams(BaseModel):
    """Open-chain transverse-field Ising couplings; J sets the energy unit"""
    model_config = ConfigDict(frozen=True)

    N: int
    J: float = 1.0
    g: float = -1.05
    h: float = 0.5

    @field_validator("N")
    @classmethod
    def check_sites(cls, value: int) -> int:
        if value < 2:
            raise ValueError(f"TFI chain needs N >= 2, got {value}")
        return value


class ProductStateSpec(BaseModel):
    """AFM pattern |1010...> or the uniform state (cos t|0> + sin t|1>)^N"""
    model_config = ConfigDict(frozen=True)

    kind: ProductStateKindEnum
    N: int = Field(ge=1)
    theta: float = 0.0

    @classmethod
    def afm(cls, n_sites: int) -> "ProductStateSpec":
        return cls(kind=ProductStateKindEnum.AFM, N=n_sites)

    @classmethod
    def uniform(cls, n_sites: int, theta: float) -> "ProductStateSpec":
        return cls(kind=ProductStateKindEnum.THETA, N=n_sites, theta=theta)

    @property
    def label(self) -> str:
        return self.kind.value

    def site_amplitudes(self) -> List[Tuple[complex, complex]]:
        """Per-site (a, b) with |phi_i> = a|0> + b|1>"""
        if self.kind == ProductStateKindEnum.AFM:
            return [(0j, 1 + 0j) if i % 2 == 0 else (1 + 0j, 0j) for i in range(self.N)]
        a, b = math.cos(self.theta), math.sin(self.theta)
        return [(complex(a), complex(b))] * self.N

    def bloch_vectors(self) -> np.ndarray:
        """(N, 3) array of Bloch vectors (nx, ny, nz) of each site state"""
        vectors = []
        for a, b in self.site_amplitudes():
            cross = a.conjugate() * b
            vectors.append((2 * cross.real, 2 * cross.imag, abs(a) ** 2 - abs(b) ** 2))
        return np.array(vectors, dtype=float)


class FilterParams(BaseModel):
    """Lorentzian filter center E_F and width delta (delta = inf is no filter)"""
    model_config = ConfigDict(frozen=True)

    E_F: float
    delta: float

    @field_validator("delta")
    @classmethod
    def check_delta(cls, value: float) -> float:
        if not value > 0:
            raise ValueError(f"delta must be positive, got {value}")
        return value

    @classmethod
    def from_inverse(cls, E_F: float, delta_inverse: float) -> "FilterParams":
        if delta_inverse < 0:
            raise ValueError(f"delta_inverse must be nonnegative, got {delta_inverse}")
        return cls(E_F=E_F, delta=math.inf if delta_inverse == 0 else 1.0 / delta_inverse)

    @property
    def delta_inverse(self) -> float:
        return 0.0 if math.isinf(self.delta) else 1.0 / self.delta

    @property
    def rescale(self) -> float:
        """1 + delta^-2, the parent-Hamiltonian rescaling factor"""
        return 1.0 + self.delta_inverse ** 2


class ScheduleSpec(BaseModel):
    """Adiabatic trajectory: total time T in steps of tau toward delta_inv_max"""
    model_config = ConfigDict(frozen=True)

    delta_inv_max: float = Field(ge=0)
    T: float = Field(gt=0)
    tau: float = Field(gt=0)
    shape: ScheduleShapeEnum = ScheduleShapeEnum.SIN_SIN_SQUARED

    @model_validator(mode="after")
    def check_integer_steps(self):
        ratio = self.T / self.tau
        if round(ratio) < 1 or abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
            raise ValueError(f"T/tau must be a positive integer, got {ratio}")
        return self

    @classmethod
    def from_steps(cls, delta_inv_max: float, tau: float, steps: int,
                   shape: ScheduleShapeEnum = ScheduleShapeEnum.SIN_SIN_SQUARED) -> "ScheduleSpec":
        return cls(delta_inv_max=delta_inv_max, T=steps * tau, tau=tau, shape=shape)

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.tau))


# ===== EXPERIMENT CONFIG SCHEMAS =====

_ANGLE_PATTERN = re.compile(r"^\s*(?:([0-9.eE+-]+)\s*\*?\s*)?pi\s*(?:/\s*([0-9.eE+-]+))?\s*$")


def parse_angle(value) -> float:
    """Accept numbers and multiples of pi such as ``pi/6`` or ``3*pi/8``"""
    if isinstance(value, (int, float)):
        return float(value)
    match = _ANGLE_PATTERN.match(str(value))
    if not match:
        return float(value)
    factor = float(match.group(1)) if match.group(1) else 1.0
    divisor = float(match.group(2)) if match.group(2) else 1.0
    return factor * math.pi / divisor


def _angles(value):
    if isinstance(value, (list, tuple)):
        return [parse_angle(v) for v in value]
    return value


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ModelSection(_Section):
    J: float = 1.0
    g: float = -1.05
    h: float = 0.5


class StateSection(_Section):
    afm: bool = True
    thetas: List[float] = Field(default_factory=list)

    @field_validator("thetas", mode="before")
    @classmethod
    def parse_thetas(cls, value):
        return _angles(value)

    @model_validator(mode="after")
    def check_states(self):
        if not self.afm and not self.thetas:
            raise ValueError("state needs afm: true or a nonempty thetas list")
        return self

    def specs(self, n_sites: int) -> List[ProductStateSpec]:
        """AFM first (when enabled), then the theta states in configured order"""
        specs = [ProductStateSpec.afm(n_sites)] if self.afm else []
        return specs + [ProductStateSpec.uniform(n_sites, theta) for theta in self.thetas]


class FilterSection(_Section):
    deltas: List[float] = Field(default_factory=list)
    delta_inverses: List[float] = Field(default_factory=list)
    E_F: Optional[float] = None

    @model_validator(mode="after")
    def check_grid(self):
        if self.deltas and self.delta_inverses:
            raise ValueError("Give either filter.deltas or filter.delta_inverses, not both")
        if any(d <= 0 for d in self.deltas):
            raise ValueError("filter.deltas must be positive")
        if any(d < 0 for d in self.delta_inverses):
            raise ValueError("filter.delta_inverses must be nonnegative")
        return self

    def grid(self) -> List[float]:
        """Delta inverses in configured order"""
        return [inverse for _, inverse in self.points()]

    def points(self) -> List[Tuple[float, float]]:
        """(delta, delta_inverse) pairs keeping the configured values exact"""
        if self.delta_inverses:
            return [(math.inf if a == 0 else 1.0 / a, a) for a in self.delta_inverses]
        return [(d, 0.0 if math.isinf(d) else 1.0 / d) for d in self.deltas]


class ScheduleSection(_Section):
    tau: float = Field(default=0.1, gt=0)
    steps: List[int] = Field(default_factory=list)
    shape: ScheduleShapeEnum = ScheduleShapeEnum.SIN_SIN_SQUARED
    trotter: bool = False

    @field_validator("steps")
    @classmethod
    def check_steps(cls, value: List[int]) -> List[int]:
        if any(s < 1 for s in value):
            raise ValueError("schedule.steps must be positive integers")
        return value


class OutputSection(_Section):
    path: str = str(settings.OUTPUT_DIR) + "/results.csv"
    circuit_dir: Optional[str] = None
    record_wall_time: bool = False
    resume: bool = False


class ExperimentSection(_Section):
    kind: ExperimentKindEnum
    sizes: List[int] = Field(default_factory=list)
    seed: int = settings.DEFAULT_SEED
    threads: int = Field(default=settings.DEFAULT_THREADS, ge=1)
    cut: Optional[int] = None
    crosscheck: Optional[bool] = None
    thetas: List[float] = Field(default_factory=list)

    @field_validator("thetas", mode="before")
    @classmethod
    def parse_thetas(cls, value):
        return _angles(value)


class ExperimentConfig(_Section):
    experiment: ExperimentSection
    model: ModelSection = Field(default_factory=ModelSection)
    state: StateSection = Field(default_factory=StateSection)
    filter: FilterSection = Field(default_factory=FilterSection)
    schedule: ScheduleSection = Field(default_factory=ScheduleSection)
    output: OutputSection = Field(default_factory=OutputSection)

    @model_validator(mode="after")
    def check_grids(self):
        exp = self.experiment
        for n in exp.sizes:
            if not 2 <= n <= settings.MAX_SITES:
                raise ValueError(f"N={n} outside [2, {settings.MAX_SITES}]")
        if exp.kind == ExperimentKindEnum.THETA_CURVE:
            if not exp.thetas:
                raise ValueError("experiment.thetas must be nonempty for theta_curve")
            return self
        if not exp.sizes:
            raise ValueError(f"experiment.sizes must be nonempty for {exp.kind.value}")
        if not self.filter.grid():
            raise ValueError(f"filter grid must be nonempty for {exp.kind.value}")
        if exp.kind in (ExperimentKindEnum.ADIABATIC_SWEEP, ExperimentKindEnum.DEPTH_AUDIT):
            if not self.schedule.steps:
                raise ValueError(f"schedule.steps must be nonempty for {exp.kind.value}")
        if exp.cut is not None and any(not 0 < exp.cut < n for n in exp.sizes):
            raise ValueError(f"cut={exp.cut} invalid for sizes {exp.sizes}")
        return self

    @property
    def kind(self) -> ExperimentKindEnum:
        return self.experiment.kind

    def tfi(self, n_sites: int) -> TfiParams:
        return TfiParams(N=n_sites, J=self.model.J, g=self.model.g, h=self.model.h)

    def crosscheck_enabled(self, n_sites: int) -> bool:
        if self.experiment.crosscheck is None:
            return n_sites <= settings.CROSSCHECK_MAX_SITES
        return self.experiment.crosscheck and n_sites <= settings.CROSSCHECK_MAX_SITES


# ===== RESULT SCHEMAS =====

RESULT_COLUMNS: List[str] = [
    "experiment", "N", "theta_or_afm", "theta", "delta", "delta_inv",
    "sigma0_sq", "sigma_L_sq_measured", "sigma_L_sq_theory", "E0",
    "energy_density", "energy_density_limit", "fidelity", "parent_energy",
    "parent_energy_rescaled", "T", "tau", "steps", "entropy", "depth",
    "total_depth", "eta", "gap_min_h2_minus_h", "gap_smallest_nonzero",
    "passed", "wall_time", "status", "message",
]

KEY_COLUMNS: Tuple[str, ...] = ("experiment", "N", "theta_or_afm", "theta", "delta_inv", "steps")


def format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    return str(value)


class ResultsRecord(BaseModel):
    """One CSV row; empty cells mean not applicable"""
    experiment: ExperimentKindEnum
    N: Optional[int] = None
    theta_or_afm: Optional[str] = None
    theta: Optional[float] = None
    delta: Optional[float] = None
    delta_inv: Optional[float] = None
    sigma0_sq: Optional[float] = None
    sigma_L_sq_measured: Optional[float] = None
    sigma_L_sq_theory: Optional[float] = None
    E0: Optional[float] = None
    energy_density: Optional[float] = None
    energy_density_limit: Optional[float] = None
    fidelity: Optional[float] = None
    parent_energy: Optional[float] = None
    parent_energy_rescaled: Optional[float] = None
    T: Optional[float] = None
    tau: Optional[float] = None
    steps: Optional[int] = None
    entropy: Optional[float] = None
    depth: Optional[int] = None
    total_depth: Optional[int] = None
    eta: Optional[float] = None
    gap_min_h2_minus_h: Optional[float] = None
    gap_smallest_nonzero: Optional[float] = None
    passed: Optional[bool] = None
    wall_time: Optional[float] = None
    status: PointStatusEnum = PointStatusEnum.OK
    message: str = ""

    def to_row(self) -> Dict[str, str]:
        data = self.model_dump()
        return {column: format_cell(data[column]) for column in RESULT_COLUMNS}

    @property
    def key(self) -> Tuple[str, ...]:
        row = self.to_row()
        return tuple(row[c] for c in KEY_COLUMNS)


# ===== API SCHEMAS =====

class HealthStatus(BaseModel):
    status: str
    timestamp: datetime
    app_name: str
    version: str
    numpy_version: str
    scipy_version: str
    max_sites: int
    dense_max_sites: int
    message: Optional[str] = None


class ExperimentRunRequest(BaseModel):
    """Either a preset name or a full sectioned config, plus section overrides"""
    preset: Optional[str] = None
    config: Optional[Dict[str, Any]] = None
    overrides: Dict[str, Dict[str, Any]] = Field(default_factory=dict)

    @model_validator(mode="after")
    def check_source(self):
        if (self.preset is None) == (self.config is None):
            raise ValueError("Give exactly one of preset or config")
        return self


class ExperimentRunResponse(BaseModel):
    status: str
    kind: ExperimentKindEnum
    output_path: str
    message: str
