import json
import os
from dataclasses import dataclass
from typing import Any, Dict, Literal, Optional

from pydantic import Field, ValidationError, model_validator

from nrlight.errors import ConfigError, RangeError, SchemaError
from nrlight.models import FrozenModel, SweepSpec, SystemParams

# pydantic error types that mean "right shape, out-of-range value"
_RANGE_ERRORS = {
    "greater_than",
    "greater_than_equal",
    "less_than",
    "less_than_equal",
    "finite_number",
    "value_error",
}


@dataclass(frozen=True)
class RuntimeEnv:
    output_dir: str
    threads: int
    cache_enabled: bool
    cache_capacity: int
    log_level: str


def _env_int(name: str, default: str, minimum: int = 1) -> int:
    raw = os.getenv(name, default)
    try:
        value = int(raw)
    except ValueError as exc:
        raise RangeError(f"expected an integer, got {raw!r}", path=name) from exc
    if value < minimum:
        raise RangeError(f"must be at least {minimum}, got {value}", path=name)
    return value


def _env_flag(name: str, default: str) -> bool:
    raw = os.getenv(name, default)
    if raw not in {"0", "1"}:
        raise RangeError(f"expected 0 or 1, got {raw!r}", path=name)
    return raw == "1"


def load_runtime_env() -> RuntimeEnv:
    log_level = os.getenv("NRLIGHT_LOG_LEVEL", "WARNING").upper()
    if log_level not in {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}:
        raise RangeError(f"unknown log level {log_level!r}", path="NRLIGHT_LOG_LEVEL")
    return RuntimeEnv(
        output_dir=os.getenv("NRLIGHT_OUTPUT_DIR", "data/output"),
        threads=_env_int("NRLIGHT_THREADS", "1"),
        cache_enabled=_env_flag("NRLIGHT_CACHE_ENABLED", "1"),
        cache_capacity=_env_int("NRLIGHT_CACHE_CAPACITY", "64"),
        log_level=log_level,
    )


def resolve_output_path(path: str, env: Optional[RuntimeEnv] = None) -> str:
    if os.path.isabs(path):
        return path
    env = env or load_runtime_env()
    return os.path.join(env.output_dir, path)


class SolverConfig(FrozenModel):
    rtol: float = Field(default=1e-9, gt=0.0, le=1e-2)
    atol: float = Field(default=1e-12, gt=0.0, le=1e-2)
    t_hold: float = Field(default=200.0, ge=50.0)
    newton_max_iter: int = Field(default=100, ge=1)


class OutputConfig(FrozenModel):
    path: Optional[str] = None
    format: Literal["csv", "json"] = "csv"


class RunConfig(FrozenModel):
    params: SystemParams = Field(default_factory=SystemParams)
    scenario: Optional[str] = None
    sweep: Optional[SweepSpec] = None
    solver: SolverConfig = Field(default_factory=SolverConfig)
    output: OutputConfig = Field(default_factory=OutputConfig)

    @model_validator(mode="after")
    def _one_target(self) -> "RunConfig":
        if self.scenario is not None and self.sweep is not None:
            raise ValueError("scenario and sweep are mutually exclusive")
        return self

    def scenario_overrides(self) -> Dict[str, Any]:
        """Explicitly set params and solver fields, in the form `run_scenario` takes."""
        overrides: Dict[str, Any] = self.params.model_dump(exclude_unset=True)
        overrides.update(self.solver.model_dump(exclude_unset=True))
        return overrides


def _dotted(location: tuple) -> str:
    return ".".join(str(part) for part in location) or "<root>"


def config_error(exc: ValidationError) -> ConfigError:
    """First pydantic error as SchemaError (shape) or RangeError (value) with a dotted path."""
    first = exc.errors()[0]
    location = tuple(first.get("loc", ()))
    path = _dotted(location)
    message = first.get("msg", str(exc))
    if location and first.get("type") in _RANGE_ERRORS:
        return RangeError(message, path=path)
    return SchemaError(message, path=path)


def parse_config(text: str) -> RunConfig:
    try:
        data: Any = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc.msg} (line {exc.lineno}, column {exc.colno})") from exc
    if not isinstance(data, dict):
        raise SchemaError("config must be a JSON object")
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise config_error(exc) from exc


def load_config(path: str) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise SchemaError(f"cannot read config: {exc.strerror}", path=path) from exc
    return parse_config(text)


def serialize_config(config: RunConfig) -> str:
    return json.dumps(config.model_dump(mode="json"), sort_keys=True, indent=2) + "\n"

