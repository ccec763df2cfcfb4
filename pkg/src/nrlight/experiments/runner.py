from __future__ import annotations

import logging
import math
import threading
from collections import Counter
from typing import Any, Dict, List, Mapping, Optional, Tuple

from pydantic import ValidationError

from nrlight import __version__
from nrlight.cache import ResultCache, build_result_cache, fingerprint
from nrlight.config import config_error, load_runtime_env
from nrlight.dynamics import hysteresis_scan, loop_from_steps, up_down_schedule
from nrlight.errors import NrlightError, SchemaError
from nrlight.experiments.scenarios import get_scenario
from nrlight.experiments.sweep import HysteresisTrace, ordered_map, sweep
from nrlight.experiments.utils import build_metadata
from nrlight.models import AxisSpec, Direction, HysteresisLoop, Scenario, SweepResult, SystemParams, VerdictKind

logger = logging.getLogger(__name__)

AXIS1_KEYS = {"start": "start", "stop": "stop", "points": "points", "values": "values"}
AXIS2_KEYS = {"start2": "start", "stop2": "stop", "points2": "points", "values2": "values"}
SCENARIO_KEYS = {"hysteresis", "hysteresis_points", "hysteresis_values2", "t_hold", "rtol", "atol", "newton_max_iter"}
SWEEP_KEYS = {"selection"}

_cache_lock = threading.Lock()
_result_cache: Optional[ResultCache] = None
_cache_built = False


def default_result_cache() -> Optional[ResultCache]:
    global _result_cache, _cache_built
    with _cache_lock:
        if not _cache_built:
            _result_cache = build_result_cache(load_runtime_env())
            _cache_built = True
        return _result_cache


def _override_axis(axis: AxisSpec, changes: Dict[str, Any]) -> AxisSpec:
    if not changes:
        return axis
    if "values" in changes:
        return AxisSpec.model_validate({"axis": axis.axis, "values": changes["values"]})
    grid = axis.grid()
    return AxisSpec.model_validate(
        {
            "axis": axis.axis,
            "start": changes.get("start", grid[0]),
            "stop": changes.get("stop", grid[-1]),
            "points": changes.get("points", len(grid)),
        }
    )


def resolve_scenario(scenario_id: str, overrides: Optional[Mapping[str, Any]] = None) -> Scenario:
    """Catalog entry with overrides applied; only parameter, grid and solver fields may change."""
    scenario = get_scenario(scenario_id)
    overrides = dict(overrides or {})
    param_keys = set(SystemParams.model_fields)
    allowed = param_keys | set(AXIS1_KEYS) | set(AXIS2_KEYS) | SCENARIO_KEYS | SWEEP_KEYS
    unknown = sorted(set(overrides) - allowed)
    if unknown:
        raise SchemaError("not an overridable field", path=unknown[0])
    axis2_changes = {AXIS2_KEYS[k]: v for k, v in overrides.items() if k in AXIS2_KEYS}
    if axis2_changes and scenario.sweep.axis2 is None:
        raise SchemaError("scenario has no secondary axis", path=sorted(set(overrides) & set(AXIS2_KEYS))[0])
    try:
        params = scenario.base_params.replace(**{k: v for k, v in overrides.items() if k in param_keys})
        axis1 = _override_axis(scenario.sweep.axis1, {AXIS1_KEYS[k]: v for k, v in overrides.items() if k in AXIS1_KEYS})
        sweep_data = scenario.sweep.model_dump()
        sweep_data["axis1"] = axis1.model_dump()
        if scenario.sweep.axis2 is not None:
            sweep_data["axis2"] = _override_axis(scenario.sweep.axis2, axis2_changes).model_dump()
        sweep_data.update({k: v for k, v in overrides.items() if k in SWEEP_KEYS})
        data = scenario.model_dump()
        data.update({k: v for k, v in overrides.items() if k in SCENARIO_KEYS})
        data["base_params"] = params.model_dump()
        data["sweep"] = sweep_data
        return Scenario.model_validate(data)
    except ValidationError as exc:
        raise config_error(exc) from exc


def _hysteresis_axis2(scenario: Scenario) -> List[Optional[float]]:
    if scenario.sweep.axis2 is None:
        return [None]
    values = scenario.sweep.axis2.grid()
    if scenario.hysteresis_values2 is None:
        return list(values)
    return [v for v in values if any(math.isclose(v, h, rel_tol=1e-9, abs_tol=1e-12) for h in scenario.hysteresis_values2)]


def _scan(scenario: Scenario, axis2: Optional[float], direction: Direction, up: List[float]) -> Optional[HysteresisLoop]:
    params = scenario.base_params
    try:
        if axis2 is not None:
            params = params.along(scenario.sweep.axis2.axis, axis2)
        steps = hysteresis_scan(
            params,
            direction,
            up_down_schedule(up),
            t_hold=scenario.t_hold,
            rtol=scenario.rtol,
            atol=scenario.atol,
            newton_max_iter=scenario.newton_max_iter,
        )
    except (NrlightError, ValueError) as exc:
        logger.warning("hysteresis scan skipped at axis2=%r (%s): %s", axis2, direction.value, exc)
        return None
    return loop_from_steps(steps, len(up))


def run_hysteresis(
    scenario: Scenario,
    *,
    workers: int = 1,
    cancel: Optional[threading.Event] = None,
) -> Tuple[HysteresisTrace, List[Dict[str, Any]]]:
    """Up-then-down scans on a decimated drive grid, one per (axis2 value, direction)."""
    grid = sorted(v for v in scenario.sweep.axis1.grid() if v >= 0)
    stride = max(1, math.ceil(len(grid) / scenario.hysteresis_points))
    up = grid[::stride]
    jobs = [(scenario, v2, d, up) for v2 in _hysteresis_axis2(scenario) for d in scenario.sweep.directions]
    loops = ordered_map(_scan, jobs, workers=workers, cancel=cancel)
    trace: Dict[Tuple[Optional[float], Direction], Dict[float, float]] = {}
    summary: List[Dict[str, Any]] = []
    for (_, v2, direction, _), loop in zip(jobs, loops):
        if loop is None:
            continue
        trace[(v2, direction)] = {step.eps_p_sq: step.I1 for step in loop.up if step.kind is VerdictKind.SETTLED}
        summary.append(
            {
                "axis2": v2,
                "direction": direction.value,
                "up_jump": list(loop.up_jump) if loop.up_jump else None,
                "down_jump": list(loop.down_jump) if loop.down_jump else None,
                "width": loop.width,
                "steps": dict(Counter(step.kind.value for step in loop.up + loop.down[1:])),
            }
        )
    return trace, summary


def scenario_fingerprint(scenario: Scenario) -> str:
    return fingerprint({"scenario": scenario.id, "resolved": scenario.model_dump(mode="json"), "version": __version__})


def run_scenario(
    scenario_id: str,
    overrides: Optional[Mapping[str, Any]] = None,
    *,
    workers: Optional[int] = None,
    use_cache: bool = True,
    cancel: Optional[threading.Event] = None,
) -> SweepResult:
    scenario = resolve_scenario(scenario_id, overrides)
    if workers is None:
        workers = load_runtime_env().threads
    cache = default_result_cache() if use_cache else None
    key = scenario_fingerprint(scenario)
    if cache is not None:
        cached = cache.get(key)
        if cached is not None:
            logger.info("scenario %s served from cache (%s)", scenario.id, key[:12])
            return cached

    logger.info("scenario %s started", scenario.id)
    trace: Optional[HysteresisTrace] = None
    summary: List[Dict[str, Any]] = []
    if scenario.hysteresis:
        trace, summary = run_hysteresis(scenario, workers=workers, cancel=cancel)
    metadata = build_metadata(
        params=scenario.base_params,
        spec=scenario.sweep,
        scenario=scenario,
        extra={"fingerprint": key, "hysteresis": summary},
    )
    result = sweep(
        scenario.sweep,
        scenario.base_params,
        scenario_id=scenario.id,
        workers=workers,
        cancel=cancel,
        trace=trace,
        metadata=metadata,
    )
    if cache is not None:
        cache.put(key, result)
    logger.info("scenario %s finished: %d rows", scenario.id, len(result.rows))
    return result
