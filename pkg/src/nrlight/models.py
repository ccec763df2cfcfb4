import cmath
import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class Direction(str, Enum):
    FORWARD = "forward"
    BACKWARD = "backward"


class Stability(str, Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"


class VerdictKind(str, Enum):
    SETTLED = "settled"
    BLOW_UP = "blow_up"
    NOT_SETTLED = "not_settled"


class SweepAxis(str, Enum):
    EPS_P_SQ = "eps_p_sq"
    G = "g"
    J = "J"
    DELTA1 = "delta1"
    DELTA2 = "delta2"


class BranchSelection(str, Enum):
    LOWEST = "lowest"
    HYSTERESIS = "hysteresis"


class FrozenModel(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class SystemParams(FrozenModel):
    """Physical parameters, every rate in units of the passive-cavity decay kappa2.

    Defaults are the active-passive operating point (kappa1 = -7.4, kappa_e = 3.2,
    g = 3, J = 4, eps_p = 0.36) at which gain in cavity 1 balances loss in cavity 2.
    """

    model_config = ConfigDict(frozen=True, extra="forbid", allow_inf_nan=False)

    g: float = Field(default=3.0, ge=0.0)
    J: float = Field(default=4.0, ge=0.0)
    kappa1: float = -7.4
    kappa2: float = 1.0
    kappa_e: float = Field(default=3.2, gt=0.0)
    gamma: float = Field(default=0.1, gt=0.0)
    delta1: float = 0.0
    delta2: float = 0.0
    eps_p: float = Field(default=0.36, ge=0.0)

    @field_validator("kappa2")
    @classmethod
    def _unit_rate(cls, value: float) -> float:
        if value != 1.0:
            raise ValueError("kappa2 must equal 1 (all rates are normalized to kappa2)")
        return value

    @property
    def eps_p_sq(self) -> float:
        return self.eps_p * self.eps_p

    def replace(self, **changes: float) -> "SystemParams":
        return type(self).model_validate({**self.model_dump(), **changes})

    def along(self, axis: SweepAxis, value: float) -> "SystemParams":
        axis = SweepAxis(axis)
        if axis is SweepAxis.EPS_P_SQ:
            if value < 0:
                raise ValueError(f"eps_p_sq must be nonnegative, got {value!r}")
            return self.replace(eps_p=math.sqrt(value))
        return self.replace(**{axis.value: float(value)})


@dataclass(frozen=True)
class StateVector:
    """Mean-field amplitudes; realified order is (Re a1, Im a1, Re a2, Im a2, Re s, Im s, sigma_z)."""

    a1: complex
    a2: complex
    sigma_ge: complex
    sigma_z: float

    @classmethod
    def ground(cls) -> "StateVector":
        return cls(0j, 0j, 0j, -0.5)

    @classmethod
    def from_real(cls, y: Any) -> "StateVector":
        y = np.asarray(y, dtype=float)
        return cls(complex(y[0], y[1]), complex(y[2], y[3]), complex(y[4], y[5]), float(y[6]))

    def to_real(self) -> np.ndarray:
        return np.array(
            [
                self.a1.real,
                self.a1.imag,
                self.a2.real,
                self.a2.imag,
                self.sigma_ge.real,
                self.sigma_ge.imag,
                self.sigma_z,
            ],
            dtype=float,
        )

    @property
    def intensity(self) -> float:
        return abs(self.a1) ** 2

    def norm(self) -> float:
        return float(np.linalg.norm(self.to_real()))

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.to_real())))

    def rotated(self, phase: float) -> "StateVector":
        factor = cmath.exp(1j * phase)
        return StateVector(self.a1 * factor, self.a2 * factor, self.sigma_ge * factor, self.sigma_z)


@dataclass(frozen=True)
class DriftCoefficients:
    x1: complex
    x2: complex
    x3: complex


@dataclass(frozen=True)
class CubicCoefficients:
    c3: float
    c2: float
    c1: float
    c0: float

    def as_array(self) -> np.ndarray:
        return np.array([self.c3, self.c2, self.c1, self.c0], dtype=float)

    def __call__(self, intensity: float) -> float:
        return float(np.polyval(self.as_array(), intensity))


@dataclass(frozen=True)
class SteadyBranch:
    I1: float
    state: StateVector
    stability: Stability
    residual: float
    eigenvalues: Tuple[complex, ...] = ()
    iterations: int = 0

    @property
    def max_real_part(self) -> float:
        return max(ev.real for ev in self.eigenvalues) if self.eigenvalues else float("nan")

    @property
    def is_stable(self) -> bool:
        return self.stability is Stability.STABLE


@dataclass(frozen=True)
class ContinuationPoint:
    value: float
    branches: Tuple[SteadyBranch, ...]
    error_code: Optional[str] = None
    error_message: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error_code is None


@dataclass(frozen=True)
class TurningPoint:
    eps_p_sq: float
    I1: float


@dataclass(frozen=True)
class Verdict:
    kind: VerdictKind
    time: float
    state: Optional[StateVector]
    residual: float
    branch_index: Optional[int] = None
    ambiguous: bool = False

    @property
    def intensity(self) -> Optional[float]:
        return self.state.intensity if self.state is not None else None


@dataclass(frozen=True)
class Trajectory:
    times: Tuple[float, ...]
    states: Tuple[StateVector, ...]
    verdict: Verdict

    @property
    def final(self) -> StateVector:
        return self.states[-1]


@dataclass(frozen=True)
class HysteresisStep:
    eps_p_sq: float
    I1: float
    kind: VerdictKind
    residual: float


@dataclass(frozen=True)
class HysteresisLoop:
    up: Tuple[HysteresisStep, ...]
    down: Tuple[HysteresisStep, ...]
    up_jump: Optional[Tuple[float, float]] = None
    down_jump: Optional[Tuple[float, float]] = None

    @property
    def width(self) -> float:
        if self.up_jump is None or self.down_jump is None:
            return 0.0
        return max(0.0, self.up_jump[0] - self.down_jump[1])


@dataclass(frozen=True)
class TransmissionRecord:
    direction: Direction
    T: float
    out_amplitude: complex
    branch_I1: float


@dataclass(frozen=True)
class ObservedOutput:
    """Output averaged over the tail of a trajectory started from the dark state."""

    direction: Direction
    kind: VerdictKind
    T: Optional[float]
    I1_mean: Optional[float]
    I1_min: Optional[float]
    I1_max: Optional[float]


class AxisSpec(FrozenModel):
    axis: SweepAxis
    values: Optional[List[float]] = None
    start: Optional[float] = None
    stop: Optional[float] = None
    points: Optional[int] = Field(default=None, ge=1)

    @model_validator(mode="after")
    def _check_grid(self) -> "AxisSpec":
        if self.values is not None:
            if not self.values:
                raise ValueError("values must be nonempty")
            if not all(math.isfinite(v) for v in self.values):
                raise ValueError("values must be finite")
            diffs = np.diff(self.values)
            if not (np.all(diffs >= 0) or np.all(diffs <= 0)):
                raise ValueError("values must be monotone")
            return self
        if self.start is None or self.stop is None or self.points is None:
            raise ValueError("either values or start/stop/points is required")
        if not (math.isfinite(self.start) and math.isfinite(self.stop)):
            raise ValueError("start and stop must be finite")
        return self

    def grid(self) -> List[float]:
        if self.values is not None:
            return [float(v) for v in self.values]
        return [float(v) for v in np.linspace(self.start, self.stop, self.points)]


class SweepRow(FrozenModel):
    scenario: str
    direction: Direction
    axis1: Optional[float] = None
    axis2: Optional[float] = None
    branch: int = -1
    I1: Optional[float] = None
    T: Optional[float] = None
    isolation_db: Optional[float] = None
    stable: Optional[bool] = None
    verdict: str = ""


class SweepResult(FrozenModel):
    rows: List[SweepRow] = Field(default_factory=list)
    metadata: Dict[str, Any] = Field(default_factory=dict)


class Observable(str, Enum):
    I1 = "I1"
    T = "T"
    ISOLATION = "isolation"
    STABILITY = "stability"


def _ordered_directions(directions: List[Direction]) -> List[Direction]:
    if not directions:
        raise ValueError("at least one direction is required")
    return [d for d in (Direction.FORWARD, Direction.BACKWARD) if d in set(directions)]


class SweepSpec(FrozenModel):
    """Grid and observable selection for one sweep; axis2 (if any) is the outer loop."""

    axis1: AxisSpec
    axis2: Optional[AxisSpec] = None
    directions: List[Direction] = Field(default_factory=lambda: [Direction.FORWARD, Direction.BACKWARD])
    observables: List[Observable] = Field(default_factory=lambda: list(Observable))
    selection: BranchSelection = BranchSelection.LOWEST
    regions: bool = False

    @field_validator("directions")
    @classmethod
    def _order_directions(cls, value: List[Direction]) -> List[Direction]:
        return _ordered_directions(value)

    @model_validator(mode="after")
    def _distinct_axes(self) -> "SweepSpec":
        if self.axis2 is not None and self.axis2.axis == self.axis1.axis:
            raise ValueError("axis1 and axis2 must sweep different parameters")
        return self


class Scenario(FrozenModel):
    id: str
    title: str
    base_params: SystemParams
    sweep: SweepSpec
    focus: Direction = Direction.FORWARD
    hysteresis: bool = False
    hysteresis_points: int = Field(default=80, ge=2)
    hysteresis_values2: Optional[List[float]] = None
    t_hold: float = Field(default=200.0, ge=50.0)
    rtol: float = Field(default=1e-7, gt=0.0, le=1e-2)
    atol: float = Field(default=1e-10, gt=0.0, le=1e-2)
    newton_max_iter: int = Field(default=100, ge=1)

    @model_validator(mode="after")
    def _hysteresis_axis(self) -> "Scenario":
        if self.hysteresis and self.sweep.axis1.axis is not SweepAxis.EPS_P_SQ:
            raise ValueError("hysteresis scans need eps_p_sq as the primary axis")
        return self
