"""Time-domain oracle: adaptive integration, attractor settling and quasi-static hysteresis."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import RK45

from nrlight.errors import NrlightError, StepUnderflow
from nrlight.mean_field import coefficients, drift_real
from nrlight.models import (
    Direction,
    HysteresisLoop,
    HysteresisStep,
    ObservedOutput,
    StateVector,
    SteadyBranch,
    SweepAxis,
    SystemParams,
    Trajectory,
    Verdict,
    VerdictKind,
)
from nrlight.observables import mean_transmission
from nrlight.steady import NEWTON_MAX_ITER, enumerate_branches, newton_refine

logger = logging.getLogger(__name__)

DEFAULT_RTOL = 1e-9
DEFAULT_ATOL = 1e-12
BLOW_UP_NORM = 1e6
# a trajectory leaving RUNAWAY_FACTOR times the drive scale is treated as blow-up
RUNAWAY_FACTOR = 10.0
# drift evaluations allowed per integration call
MAX_NFEV = 200_000
SETTLE_DRIFT_TOL = 1e-10
SETTLE_T_MAX = 1e4
SETTLE_CHUNK = 100.0
MATCH_TOL = 1e-4
MIN_HOLD = 50.0
DEFAULT_HOLD = 200.0
HOLD_CHUNK = 50.0
POLISH_DRIFT = 1e-3
POLISH_MATCH = 0.01
JUMP_RATIO = 3.0
OBSERVE_TRANSIENT = 200.0
OBSERVE_WINDOW = 200.0
OBSERVE_RTOL = 1e-7
OBSERVE_ATOL = 1e-10

_DONE = "done"
_BLOW_UP = "blow_up"
_EXHAUSTED = "exhausted"


def _check_tolerances(rtol: float, atol: float) -> None:
    for name, value in (("rtol", rtol), ("atol", atol)):
        if not (0.0 < value <= 1e-2):
            raise ValueError(f"{name} must lie in (0, 1e-2], got {value!r}")


def runaway_limit(params: SystemParams, y0: np.ndarray) -> float:
    """Norm above which a trajectory started at `y0` counts as blown up.

    Bounded trajectories stay within a few multiples of the drive scale
    1 + |y0| + sqrt(kappa_e) eps_p + g; gain-driven runaways cross it long
    before the absolute threshold, while the Rabi frequency is still resolvable.
    """
    scale = 1.0 + float(np.linalg.norm(y0)) + math.sqrt(params.kappa_e) * params.eps_p + params.g
    return min(BLOW_UP_NORM, RUNAWAY_FACTOR * scale)


@dataclass(frozen=True)
class _Run:
    times: List[float]
    states: List[np.ndarray]
    t_stop: float
    y_stop: np.ndarray
    outcome: str
    nfev: int


def _solve(
    params: SystemParams,
    direction: Direction,
    y0: np.ndarray,
    t_span: Tuple[float, float],
    rtol: float,
    atol: float,
    t_eval: Optional[np.ndarray] = None,
    limit: Optional[float] = None,
) -> _Run:
    """Step a Dormand-Prince 5(4) pair until t_span ends, the norm passes `limit` or MAX_NFEV is spent."""
    coeffs = coefficients(params)
    if limit is None:
        limit = runaway_limit(params, y0)
    solver = RK45(
        lambda t, y: drift_real(y, params, direction, coeffs),
        t_span[0],
        np.asarray(y0, dtype=float),
        t_span[1],
        rtol=rtol,
        atol=atol,
    )
    pending = [float(t) for t in t_eval] if t_eval is not None else []
    times: List[float] = []
    states: List[np.ndarray] = []
    outcome = _DONE
    while solver.status == "running":
        message = solver.step()
        if solver.status == "failed":
            raise StepUnderflow(message or "step size underflow")
        if pending and pending[0] <= solver.t:
            dense = solver.dense_output()
            while pending and pending[0] <= solver.t:
                t_sample = pending.pop(0)
                times.append(t_sample)
                states.append(dense(t_sample))
        if np.linalg.norm(solver.y) > limit:
            outcome = _BLOW_UP
            break
        if solver.nfev > MAX_NFEV:
            outcome = _EXHAUSTED
            logger.warning("work budget spent at t=%.4g (%s, norm %.3g)", solver.t, direction.value, np.linalg.norm(solver.y))
            break
    logger.debug("integrated %s over %s: %d drift evaluations, %s", direction.value, t_span, solver.nfev, outcome)
    return _Run(times, states, float(solver.t), np.array(solver.y, dtype=float), outcome, solver.nfev)


def _drift_norm(y: np.ndarray, params: SystemParams, direction: Direction) -> float:
    return float(np.linalg.norm(drift_real(y, params, direction)))


def integrate(
    params: SystemParams,
    direction: Direction,
    initial: StateVector,
    t_end: float,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    samples: int = 101,
) -> Trajectory:
    """Dormand-Prince 5(4) integration of the realified system, sampled on a uniform grid.

    A trajectory that runs away (see `runaway_limit`) ends early with a BLOW_UP
    verdict; one that spends the work budget ends NOT_SETTLED at the last
    accepted step. Step-size underflow raises StepUnderflow.
    """
    direction = Direction(direction)
    if not t_end > 0:
        raise ValueError(f"t_end must be positive, got {t_end!r}")
    _check_tolerances(rtol, atol)
    if not initial.is_finite():
        raise ValueError("initial state must be finite")
    t_eval = np.linspace(0.0, t_end, max(2, samples))
    run = _solve(params, direction, initial.to_real(), (0.0, t_end), rtol, atol, t_eval)
    times = list(run.times)
    states = [StateVector.from_real(y) for y in run.states]
    if run.outcome != _DONE and (not times or run.t_stop > times[-1]):
        times.append(run.t_stop)
        states.append(StateVector.from_real(run.y_stop))
    if run.outcome == _BLOW_UP:
        verdict = Verdict(kind=VerdictKind.BLOW_UP, time=run.t_stop, state=None, residual=float("inf"))
        logger.info("blow-up at t=%.4g (%s)", run.t_stop, direction.value)
        return Trajectory(times=tuple(times), states=tuple(states), verdict=verdict)
    final = states[-1]
    residual = _drift_norm(final.to_real(), params, direction)
    settled = run.outcome == _DONE and residual < SETTLE_DRIFT_TOL
    kind = VerdictKind.SETTLED if settled else VerdictKind.NOT_SETTLED
    verdict = Verdict(kind=kind, time=times[-1], state=final, residual=residual)
    return Trajectory(times=tuple(times), states=tuple(states), verdict=verdict)


def match_branch(intensity: float, branches: Sequence[SteadyBranch]) -> Tuple[Optional[int], bool]:
    """Index of the branch whose I1 is within tolerance of `intensity`; (None, True) when ambiguous."""
    tolerance = MATCH_TOL * max(intensity, MATCH_TOL)
    hits = [k for k, branch in enumerate(branches) if abs(branch.I1 - intensity) <= tolerance]
    if len(hits) == 1:
        return hits[0], False
    return None, len(hits) > 1


def settle(
    params: SystemParams,
    direction: Direction,
    initial: StateVector,
    *,
    branches: Optional[Sequence[SteadyBranch]] = None,
    t_max: float = SETTLE_T_MAX,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
) -> Verdict:
    """Integrate in chunks until the drift vanishes, the state blows up, or t_max passes."""
    direction = Direction(direction)
    _check_tolerances(rtol, atol)
    y = initial.to_real()
    limit = runaway_limit(params, y)
    t = 0.0
    while t < t_max:
        span = min(SETTLE_CHUNK, t_max - t)
        try:
            run = _solve(params, direction, y, (t, t + span), rtol, atol, limit=limit)
        except StepUnderflow as exc:
            logger.warning("settle stopped at t=%.4g: %s", t, exc)
            return Verdict(kind=VerdictKind.NOT_SETTLED, time=t, state=StateVector.from_real(y), residual=float("nan"))
        if run.outcome == _BLOW_UP:
            return Verdict(kind=VerdictKind.BLOW_UP, time=run.t_stop, state=None, residual=float("inf"))
        y = run.y_stop
        if run.outcome == _EXHAUSTED:
            return Verdict(
                kind=VerdictKind.NOT_SETTLED,
                time=run.t_stop,
                state=StateVector.from_real(y),
                residual=_drift_norm(y, params, direction),
            )
        t += span
        residual = _drift_norm(y, params, direction)
        if residual < SETTLE_DRIFT_TOL:
            state = StateVector.from_real(y)
            if branches is None:
                try:
                    branches = enumerate_branches(params, direction)
                except NrlightError as exc:
                    logger.warning("settled at t=%.4g but branches unavailable: %s", t, exc)
                    branches = []
            index, ambiguous = match_branch(state.intensity, branches)
            return Verdict(
                kind=VerdictKind.SETTLED,
                time=t,
                state=state,
                residual=residual,
                branch_index=index,
                ambiguous=ambiguous,
            )
    state = StateVector.from_real(y)
    return Verdict(
        kind=VerdictKind.NOT_SETTLED,
        time=t,
        state=state,
        residual=_drift_norm(y, params, direction),
    )


def _hold(
    params: SystemParams,
    direction: Direction,
    state: StateVector,
    t_hold: float,
    rtol: float,
    atol: float,
    newton_max_iter: int,
) -> Tuple[Optional[StateVector], VerdictKind, float]:
    y = state.to_real()
    limit = runaway_limit(params, y)
    t = 0.0
    residual = _drift_norm(y, params, direction)
    while t < t_hold:
        span = min(HOLD_CHUNK, t_hold - t)
        run = _solve(params, direction, y, (t, t + span), rtol, atol, limit=limit)
        if run.outcome == _BLOW_UP:
            return None, VerdictKind.BLOW_UP, float("inf")
        if run.outcome == _EXHAUSTED:
            return None, VerdictKind.NOT_SETTLED, _drift_norm(run.y_stop, params, direction)
        y = run.y_stop
        t += span
        residual = _drift_norm(y, params, direction)
        if residual >= POLISH_DRIFT:
            continue
        held = StateVector.from_real(y)
        try:
            branch = newton_refine(held, params, direction, max_iter=newton_max_iter)
        except NrlightError:
            continue
        if branch.is_stable and abs(branch.I1 - held.intensity) <= POLISH_MATCH * max(held.intensity, 1e-12):
            return branch.state, VerdictKind.SETTLED, branch.residual
    return StateVector.from_real(y), VerdictKind.NOT_SETTLED, residual


def hysteresis_scan(
    params: SystemParams,
    direction: Direction,
    eps_sq_schedule: Sequence[float],
    t_hold: float = DEFAULT_HOLD,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    newton_max_iter: int = NEWTON_MAX_ITER,
) -> List[HysteresisStep]:
    """Quasi-static drive protocol: each hold starts from the previous step's state.

    A hold ends early once the state Newton-polishes onto a Stable branch within
    1% in I1. Blow-up, an exhausted work budget or step underflow reseeds the
    next step from the dark state.
    """
    direction = Direction(direction)
    if t_hold < MIN_HOLD:
        raise ValueError(f"t_hold must be at least {MIN_HOLD}, got {t_hold!r}")
    _check_tolerances(rtol, atol)
    schedule = [float(value) for value in eps_sq_schedule]
    if any(not math.isfinite(value) or value < 0 for value in schedule):
        raise ValueError("schedule values must be finite and nonnegative")
    state = StateVector.ground()
    steps: List[HysteresisStep] = []
    for eps_sq in schedule:
        point = params.along(SweepAxis.EPS_P_SQ, eps_sq)
        try:
            held, kind, residual = _hold(point, direction, state, t_hold, rtol, atol, newton_max_iter)
        except StepUnderflow as exc:
            logger.warning("eps_p_sq=%r: %s; reseeding from the dark state", eps_sq, exc)
            held, kind, residual = None, VerdictKind.NOT_SETTLED, float("nan")
        if held is None:
            steps.append(HysteresisStep(eps_p_sq=eps_sq, I1=float("nan"), kind=kind, residual=residual))
            state = StateVector.ground()
            continue
        steps.append(HysteresisStep(eps_p_sq=eps_sq, I1=held.intensity, kind=kind, residual=residual))
        state = held
    return steps


def _jump(steps: Sequence[HysteresisStep]) -> Optional[Tuple[float, float]]:
    best: Optional[Tuple[float, float]] = None
    best_change = math.log(JUMP_RATIO)
    for before, after in zip(steps, steps[1:]):
        if not (before.I1 > 0 and after.I1 > 0):
            continue
        change = abs(math.log(after.I1 / before.I1))
        if change > best_change:
            best_change = change
            best = (min(before.eps_p_sq, after.eps_p_sq), max(before.eps_p_sq, after.eps_p_sq))
    return best


def loop_from_steps(steps: Sequence[HysteresisStep], points: int) -> HysteresisLoop:
    """Split an up-then-down scan of `points` upward values into its two passes."""
    up_steps = tuple(steps[:points])
    down_steps = tuple(steps[points - 1 :])
    return HysteresisLoop(up=up_steps, down=down_steps, up_jump=_jump(up_steps), down_jump=_jump(down_steps))


def up_down_schedule(up: Sequence[float]) -> List[float]:
    up = [float(value) for value in up]
    return up + up[-2::-1]


def hysteresis_loop(
    params: SystemParams,
    direction: Direction,
    eps_sq_max: float,
    points: int,
    t_hold: float = DEFAULT_HOLD,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    newton_max_iter: int = NEWTON_MAX_ITER,
) -> HysteresisLoop:
    """Up-then-down scan over [0, eps_sq_max]; jump brackets are the steps with the largest I1 change."""
    if points < 2:
        raise ValueError("points must be at least 2")
    if not eps_sq_max > 0:
        raise ValueError("eps_sq_max must be positive")
    schedule = up_down_schedule(np.linspace(0.0, eps_sq_max, points))
    steps = hysteresis_scan(
        params,
        direction,
        schedule,
        t_hold=t_hold,
        rtol=rtol,
        atol=atol,
        newton_max_iter=newton_max_iter,
    )
    return loop_from_steps(steps, points)


def observed_output(
    params: SystemParams,
    direction: Direction,
    *,
    t_transient: float = OBSERVE_TRANSIENT,
    t_window: float = OBSERVE_WINDOW,
    samples: int = 2001,
    rtol: float = OBSERVE_RTOL,
    atol: float = OBSERVE_ATOL,
) -> ObservedOutput:
    """What a detector sees after switching the drive on: the output averaged over
    [t_transient, t_transient + t_window] of a run from the dark state.

    Meaningful where no Stable branch exists; T is None when the run blows up
    or stops before the averaging window.
    """
    direction = Direction(direction)
    if not (t_transient >= 0 and t_window > 0):
        raise ValueError("t_transient must be nonnegative and t_window positive")
    trajectory = integrate(
        params, direction, StateVector.ground(), t_transient + t_window, rtol=rtol, atol=atol, samples=samples
    )
    kind = trajectory.verdict.kind
    tail = [state for t, state in zip(trajectory.times, trajectory.states) if t >= t_transient]
    if kind is VerdictKind.BLOW_UP or not tail:
        return ObservedOutput(direction=direction, kind=kind, T=None, I1_mean=None, I1_min=None, I1_max=None)
    intensities = np.array([state.intensity for state in tail])
    return ObservedOutput(
        direction=direction,
        kind=kind,
        T=mean_transmission(params, direction, tail),
        I1_mean=float(intensities.mean()),
        I1_min=float(intensities.min()),
        I1_max=float(intensities.max()),
    )
