"""Grid sweep engine: per-point branch enumeration, transmission, isolation and verdict flags."""

from __future__ import annotations

import logging
import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple, TypeVar

from nrlight.dynamics import match_branch
from nrlight.errors import NrlightError, SweepCancelled, UndefinedRatio
from nrlight.experiments.utils import build_metadata, compact_flags
from nrlight.models import (
    BranchSelection,
    Direction,
    Observable,
    SteadyBranch,
    SweepResult,
    SweepRow,
    SweepSpec,
    SystemParams,
)
from nrlight.observables import isolation_ratio, transmission
from nrlight.steady import enumerate_branches

logger = logging.getLogger(__name__)

# (axis2 value, direction) -> {eps_p_sq: settled I1 on the upward pass}
HysteresisTrace = Mapping[Tuple[Optional[float], Direction], Mapping[float, float]]

R = TypeVar("R")


def ordered_map(
    fn: Callable[..., R],
    jobs: Sequence[Tuple],
    *,
    workers: int = 1,
    cancel: Optional[threading.Event] = None,
) -> List[R]:
    """Run `fn(*job)` for every job on a thread pool; results come back in job order."""
    cancel = cancel or threading.Event()

    def guarded(*job):
        if cancel.is_set():
            raise SweepCancelled("sweep cancelled")
        return fn(*job)

    if workers <= 1:
        return [guarded(*job) for job in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(guarded, *job) for job in jobs]
        try:
            return [future.result() for future in futures]
        except SweepCancelled:
            for future in futures:
                future.cancel()
            raise


@dataclass(frozen=True)
class _DirectionPoint:
    branches: Tuple[SteadyBranch, ...] = ()
    transmissions: Tuple[Optional[float], ...] = ()
    error: Optional[str] = None
    selected: Optional[int] = None
    hysteresis: Optional[int] = None

    @property
    def selected_T(self) -> Optional[float]:
        if self.selected is None:
            return None
        return self.transmissions[self.selected]


def _opposite(direction: Direction) -> Direction:
    return Direction.BACKWARD if direction is Direction.FORWARD else Direction.FORWARD


def _limit_flag(limit: float) -> str:
    if math.isnan(limit):
        return "isolation=nan"
    return "isolation=+inf" if limit > 0 else "isolation=-inf"


def _trace_intensity(
    trace: Optional[HysteresisTrace], axis2: Optional[float], direction: Direction, axis1: float
) -> Optional[float]:
    if trace is None:
        return None
    curve = trace.get((axis2, direction))
    if not curve:
        return None
    for eps_sq, intensity in curve.items():
        if math.isclose(eps_sq, axis1, rel_tol=1e-12, abs_tol=1e-15):
            return intensity
    return None


def _locate(params: SystemParams, spec: SweepSpec, axis1: float, axis2: Optional[float]) -> SystemParams:
    point = params
    if spec.axis2 is not None:
        point = point.along(spec.axis2.axis, axis2)
    return point.along(spec.axis1.axis, axis1)


def _evaluate_direction(
    point: SystemParams,
    direction: Direction,
    spec: SweepSpec,
    hysteresis_I1: Optional[float],
) -> _DirectionPoint:
    try:
        branches = tuple(enumerate_branches(point, direction))
    except NrlightError as exc:
        logger.warning("%s at %s: %s", direction.value, point, exc)
        return _DirectionPoint(error=exc.code)
    if point.eps_p > 0:
        transmissions = tuple(transmission(point, direction, branch).T for branch in branches)
    else:
        transmissions = tuple(None for _ in branches)
    stable = [index for index, branch in enumerate(branches) if branch.is_stable]
    hysteresis = match_branch(hysteresis_I1, branches)[0] if hysteresis_I1 is not None else None
    if hysteresis not in stable:
        hysteresis = None
    # only an attractor can be selected; with none, the point has no steady output
    if spec.selection is BranchSelection.HYSTERESIS and hysteresis is not None:
        selected: Optional[int] = hysteresis
    else:
        selected = stable[0] if stable else None
    return _DirectionPoint(
        branches=branches,
        transmissions=transmissions,
        selected=selected,
        hysteresis=hysteresis,
    )


def _isolation(
    direction: Direction, t_row: Optional[float], t_other: Optional[float]
) -> Tuple[Optional[float], Optional[str]]:
    if t_row is None or t_other is None:
        return None, None
    t_left, t_right = (t_row, t_other) if direction is Direction.BACKWARD else (t_other, t_row)
    try:
        return isolation_ratio(t_left, t_right), None
    except UndefinedRatio as exc:
        return None, _limit_flag(exc.signed_limit)


def point_rows(
    scenario_id: str,
    params: SystemParams,
    spec: SweepSpec,
    axis1: float,
    axis2: Optional[float] = None,
    trace: Optional[HysteresisTrace] = None,
) -> List[SweepRow]:
    """Rows for one grid point: directions in forward-then-backward order, branches ascending in I1."""
    try:
        point = _locate(params, spec, axis1, axis2)
    except ValueError as exc:
        logger.warning("invalid parameters at axis1=%r axis2=%r: %s", axis1, axis2, exc)
        return [
            SweepRow(scenario=scenario_id, direction=direction, axis1=axis1, axis2=axis2, verdict="error=InvalidParams")
            for direction in spec.directions
        ]

    results: Dict[Direction, _DirectionPoint] = {
        direction: _evaluate_direction(point, direction, spec, _trace_intensity(trace, axis2, direction, axis1))
        for direction in spec.directions
    }
    region = None
    if spec.regions and all(result.error is None for result in results.values()):
        region = "region=B" if any(len(result.branches) > 1 for result in results.values()) else "region=A"

    wanted = set(spec.observables)
    rows: List[SweepRow] = []
    for direction in spec.directions:
        result = results[direction]
        if result.error is not None:
            rows.append(
                SweepRow(
                    scenario=scenario_id,
                    direction=direction,
                    axis1=axis1,
                    axis2=axis2,
                    verdict=compact_flags([region, f"error={result.error}"]),
                )
            )
            continue
        other = results.get(_opposite(direction))
        for index, branch in enumerate(result.branches):
            t_row = result.transmissions[index]
            isolation, isolation_flag = None, None
            if Observable.ISOLATION in wanted and other is not None:
                isolation, isolation_flag = _isolation(direction, t_row, other.selected_T)
            flags = [
                "selected" if index == result.selected else None,
                "hysteresis" if index == result.hysteresis else None,
                "no_attractor" if result.branches and result.selected is None else None,
                region,
                isolation_flag,
                "error=ZeroDrive" if t_row is None else None,
            ]
            rows.append(
                SweepRow(
                    scenario=scenario_id,
                    direction=direction,
                    axis1=axis1,
                    axis2=axis2,
                    branch=index,
                    I1=branch.I1 if Observable.I1 in wanted else None,
                    T=t_row if Observable.T in wanted else None,
                    isolation_db=isolation,
                    stable=branch.is_stable if Observable.STABILITY in wanted else None,
                    verdict=compact_flags(flags),
                )
            )
    return rows


def sweep(
    spec: SweepSpec,
    params: SystemParams,
    *,
    scenario_id: str = "sweep",
    workers: int = 1,
    cancel: Optional[threading.Event] = None,
    trace: Optional[HysteresisTrace] = None,
    metadata: Optional[Dict] = None,
) -> SweepResult:
    """Evaluate every grid point (axis2 outer, axis1 inner); point failures are recorded in-row."""
    grid1 = spec.axis1.grid()
    grid2: List[Optional[float]] = list(spec.axis2.grid()) if spec.axis2 is not None else [None]
    jobs = [(scenario_id, params, spec, v1, v2, trace) for v2 in grid2 for v1 in grid1]
    logger.info("sweep %s: %d grid points on %d worker(s)", scenario_id, len(jobs), max(1, workers))
    chunks = ordered_map(point_rows, jobs, workers=workers, cancel=cancel)
    rows = [row for chunk in chunks for row in chunk]
    if metadata is None:
        metadata = build_metadata(params=params, spec=spec)
    logger.info("sweep %s finished: %d rows", scenario_id, len(rows))
    return SweepResult(rows=rows, metadata=metadata)
