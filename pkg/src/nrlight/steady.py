"""Steady states from the cubic intensity reduction, with Newton polishing and stability.

Eliminating a2, sigma_ge and sigma_z from the stationary drift leaves a single
complex equation for a1,

    a1 (A + B / u) = D,    A = x1 + J^2/x2,  B = g^2/x3,  u = 1 + s I1,  s = 2 g^2/|x3|^2,

whose squared modulus is a real cubic in I1 = |a1|^2.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable, List, Optional, Tuple

import numpy as np
from numpy.polynomial import Polynomial

from nrlight.errors import (
    DegenerateParams,
    MarginalStability,
    NoConvergence,
    NotARoot,
    NrlightError,
    SingularCoefficient,
    SingularLinearSystem,
)
from nrlight.mean_field import coefficients, drift_real, drive_vector, jacobian, jacobian_real
from nrlight.models import (
    ContinuationPoint,
    CubicCoefficients,
    Direction,
    Stability,
    StateVector,
    SteadyBranch,
    SweepAxis,
    SystemParams,
    TurningPoint,
)

logger = logging.getLogger(__name__)

REAL_ROOT_TOL = 1e-10
NEGATIVE_CLAMP = 1e-12
STABILITY_MARGIN = 1e-9
LIFT_TOL = 1e-8
BRANCH_RESIDUAL_TOL = 1e-10
NEWTON_RESIDUAL_TOL = 1e-12
NEWTON_STEP_TOL = 1e-14
NEWTON_MAX_ITER = 100
DUPLICATE_TOL = 1e-9
CONDITION_LIMIT = 1e12


@dataclass(frozen=True)
class _Reduction:
    A: complex
    B: complex
    s: float
    D: complex
    drive_gain: float  # |D|^2 / eps_p^2
    x2: complex
    x3: complex
    xi2: float


def _reduce(params: SystemParams, direction: Direction) -> _Reduction:
    direction = Direction(direction)
    if params.g == 0:
        raise DegenerateParams("g = 0 has no saturable emitter; use linear_solve")
    if params.gamma == 0:
        raise DegenerateParams("gamma = 0 leaves the emitter inversion undamped")
    coeffs = coefficients(params)
    if coeffs.x2 == 0:
        raise SingularCoefficient("x2 = 0: cavity 2 has no net damping or detuning")
    if coeffs.x3 == 0:
        raise SingularCoefficient("x3 = 0: emitter coherence is undamped")
    xi1, xi2 = drive_vector(params, direction)
    J = params.J
    if direction is Direction.FORWARD:
        drive_gain = params.kappa_e
    else:
        drive_gain = J * J * params.kappa_e / abs(coeffs.x2) ** 2
    return _Reduction(
        A=coeffs.x1 + J * J / coeffs.x2,
        B=params.g**2 / coeffs.x3,
        s=2.0 * params.g**2 / abs(coeffs.x3) ** 2,
        D=-xi1 - 1j * J * xi2 / coeffs.x2,
        drive_gain=drive_gain,
        x2=coeffs.x2,
        x3=coeffs.x3,
        xi2=xi2,
    )


def _cubic(red: _Reduction) -> CubicCoefficients:
    abs_a = abs(red.A) ** 2
    cross = (red.A * red.B.conjugate()).real
    d2 = abs(red.D) ** 2
    s = red.s
    return CubicCoefficients(
        c3=abs_a * s * s,
        c2=2.0 * s * (abs_a + cross) - d2 * s * s,
        c1=abs(red.A + red.B) ** 2 - 2.0 * s * d2,
        c0=-d2,
    )


def reduce_to_cubic(params: SystemParams, direction: Direction) -> CubicCoefficients:
    """Coefficients (c3, c2, c1, c0) of the stationary intensity cubic."""
    return _cubic(_reduce(params, direction))


def _companion_roots(coeffs: np.ndarray) -> np.ndarray:
    poly = np.trim_zeros(np.asarray(coeffs, dtype=float), "f")
    if poly.size <= 1:
        return np.empty(0, dtype=complex)
    n = poly.size - 1
    companion = np.zeros((n, n), dtype=float)
    companion[0, :] = -poly[1:] / poly[0]
    companion[np.arange(1, n), np.arange(n - 1)] = 1.0
    return np.linalg.eigvals(companion)


def _polish(poly: np.ndarray, x: float) -> float:
    deriv = np.polyder(poly)
    value = abs(np.polyval(poly, x))
    for _ in range(4):
        slope = np.polyval(deriv, x)
        if slope == 0 or value == 0:
            break
        candidate = x - np.polyval(poly, x) / slope
        candidate_value = abs(np.polyval(poly, candidate))
        if candidate < 0 or not math.isfinite(candidate) or candidate_value >= value:
            break
        x, value = candidate, candidate_value
    return float(x)


def _nonnegative_real_roots(poly: np.ndarray) -> List[float]:
    roots = []
    for root in _companion_roots(poly):
        if abs(root.imag) > REAL_ROOT_TOL * max(1.0, abs(root)):
            continue
        x = float(root.real)
        if x < -NEGATIVE_CLAMP:
            continue
        roots.append(_polish(poly, max(x, 0.0)))
    return sorted(roots)


def real_roots(cubic: CubicCoefficients) -> List[float]:
    """Real nonnegative roots, ascending; within-tolerance negatives are clamped to zero."""
    return _nonnegative_real_roots(cubic.as_array())


def _lift(intensity: float, params: SystemParams, red: _Reduction) -> StateVector:
    u = 1.0 + red.s * intensity
    a1 = 0j
    if intensity > 0:
        k = red.A + red.B / u
        target = red.D / k if k != 0 else red.D
        phase = target / abs(target) if target != 0 else 1.0 + 0j
        a1 = math.sqrt(intensity) * phase
    a2 = (1j * params.J * a1 - red.xi2) / red.x2
    sigma_z = -1.0 / (2.0 * u)
    sigma_ge = 2.0 * params.g * sigma_z * a1 / red.x3
    return StateVector(a1=complex(a1), a2=complex(a2), sigma_ge=complex(sigma_ge), sigma_z=sigma_z)


def lift(intensity: float, params: SystemParams, direction: Direction) -> StateVector:
    """Full state for a root of the cubic; raises NotARoot when the drift does not vanish."""
    if intensity < 0 or not math.isfinite(intensity):
        raise NotARoot(intensity, float("inf"))
    state = _lift(intensity, params, _reduce(params, direction))
    residual = float(np.linalg.norm(drift_real(state.to_real(), params, direction)))
    if not residual <= LIFT_TOL:
        raise NotARoot(intensity, residual)
    return state


def classify(
    state: StateVector, params: SystemParams, direction: Direction
) -> Tuple[Stability, Tuple[complex, ...]]:
    eigenvalues = np.linalg.eigvals(jacobian(state, params, direction))
    max_real = float(np.max(eigenvalues.real))
    if abs(max_real) <= STABILITY_MARGIN:
        raise MarginalStability(max_real)
    stability = Stability.STABLE if max_real < 0 else Stability.UNSTABLE
    ordered = sorted((complex(ev) for ev in eigenvalues), key=lambda ev: (ev.real, ev.imag))
    return stability, tuple(ordered)


def _branch(state: StateVector, params: SystemParams, direction: Direction, residual: float, iterations: int = 0) -> SteadyBranch:
    stability, eigenvalues = classify(state, params, direction)
    return SteadyBranch(
        I1=state.intensity,
        state=state,
        stability=stability,
        residual=residual,
        eigenvalues=eigenvalues,
        iterations=iterations,
    )


def newton_refine(
    guess: StateVector,
    params: SystemParams,
    direction: Direction,
    *,
    max_iter: int = NEWTON_MAX_ITER,
) -> SteadyBranch:
    """Damped Newton on the realified drift, then classification of the converged point."""
    if not guess.is_finite():
        raise NoConvergence(0, float("inf"))
    coeffs = coefficients(params)
    y = guess.to_real()
    f = drift_real(y, params, direction, coeffs)
    residual = float(np.linalg.norm(f))
    iterations = 0
    while residual >= NEWTON_RESIDUAL_TOL and iterations < max_iter:
        jac = jacobian_real(y, params, coeffs)
        try:
            step = np.linalg.solve(jac, -f)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(jac, -f, rcond=None)[0]
        damping = 1.0
        while True:
            trial = y + damping * step
            f_trial = drift_real(trial, params, direction, coeffs)
            trial_residual = float(np.linalg.norm(f_trial))
            if math.isfinite(trial_residual) and trial_residual < (1.0 - 1e-4 * damping) * residual:
                break
            if damping < 1.0 / 1024:
                break
            damping *= 0.5
        iterations += 1
        if not math.isfinite(trial_residual):
            raise NoConvergence(iterations, trial_residual)
        if trial_residual >= residual and residual <= BRANCH_RESIDUAL_TOL:
            # stalled at roundoff
            break
        y, f, residual = trial, f_trial, trial_residual
        if damping * float(np.linalg.norm(step)) < NEWTON_STEP_TOL:
            break
    if residual > BRANCH_RESIDUAL_TOL:
        raise NoConvergence(iterations, residual)
    logger.debug("newton converged in %d iterations, residual %.2e", iterations, residual)
    return _branch(StateVector.from_real(y), params, direction, residual, iterations)


def _linear_state(params: SystemParams, direction: Direction) -> StateVector:
    coeffs = coefficients(params)
    xi1, xi2 = drive_vector(params, direction)
    g = params.g
    J = params.J
    matrix = np.array(
        [
            [coeffs.x1, -1j * J, -g],
            [-1j * J, coeffs.x2, 0.0],
            [g, 0.0, coeffs.x3],
        ],
        dtype=complex,
    )
    condition = np.linalg.cond(matrix)
    if not math.isfinite(condition) or condition > CONDITION_LIMIT:
        raise SingularLinearSystem(f"linear steady-state system is singular (condition {condition:.3e})")
    try:
        a1, a2, sigma_ge = np.linalg.solve(matrix, -np.array([xi1, xi2, 0.0], dtype=complex))
    except np.linalg.LinAlgError as exc:
        raise SingularLinearSystem(str(exc)) from exc
    return StateVector(a1=complex(a1), a2=complex(a2), sigma_ge=complex(sigma_ge), sigma_z=-0.5)


def weak_excitation_solve(params: SystemParams, direction: Direction) -> StateVector:
    """Steady state with the emitter pinned to its ground-state inversion sigma_z = -1/2."""
    return _linear_state(params, direction)


def linear_solve(params: SystemParams, direction: Direction) -> SteadyBranch:
    """Unique steady state of the emitter-free (g = 0) system."""
    if params.g != 0:
        raise DegenerateParams("linear_solve requires g = 0; use weak_excitation_solve")
    state = _linear_state(params, direction)
    residual = float(np.linalg.norm(drift_real(state.to_real(), params, direction)))
    return _branch(state, params, direction, residual)


def enumerate_branches(params: SystemParams, direction: Direction) -> List[SteadyBranch]:
    """All steady branches, ascending in I1, each Newton-polished and classified."""
    direction = Direction(direction)
    if params.g == 0:
        return [linear_solve(params, direction)]
    red = _reduce(params, direction)
    branches: List[SteadyBranch] = []
    for root in _nonnegative_real_roots(_cubic(red).as_array()):
        branch = newton_refine(_lift(root, params, red), params, direction)
        if any(abs(branch.I1 - seen.I1) <= DUPLICATE_TOL * max(1.0, seen.I1) for seen in branches):
            continue
        branches.append(branch)
    branches.sort(key=lambda branch: branch.I1)
    logger.debug("%s: %d branch(es) at %s", direction.value, len(branches), params)
    return branches


def _check_grid(grid: List[float]) -> None:
    if not grid:
        raise ValueError("grid must be nonempty")
    if not all(math.isfinite(value) for value in grid):
        raise ValueError("grid values must be finite")
    diffs = np.diff(grid)
    if not (np.all(diffs >= 0) or np.all(diffs <= 0)):
        raise ValueError("grid must be monotone")


def continuation_sweep(
    params: SystemParams,
    direction: Direction,
    axis: SweepAxis,
    grid: Iterable[float],
) -> List[ContinuationPoint]:
    """Enumerate branches along one axis; per-point failures are recorded, not raised."""
    values = [float(value) for value in grid]
    _check_grid(values)
    points: List[ContinuationPoint] = []
    for value in values:
        try:
            branches = enumerate_branches(params.along(axis, value), direction)
        except NrlightError as exc:
            logger.warning("%s=%r: %s", SweepAxis(axis).value, value, exc)
            points.append(ContinuationPoint(value, (), error_code=exc.code, error_message=str(exc)))
            continue
        except ValueError as exc:
            logger.warning("%s=%r: invalid parameters: %s", SweepAxis(axis).value, value, exc)
            points.append(ContinuationPoint(value, (), error_code="InvalidParams", error_message=str(exc)))
            continue
        points.append(ContinuationPoint(value, tuple(branches)))
    return points


def turning_points(params: SystemParams, direction: Direction) -> List[TurningPoint]:
    """Folds of the input-output curve eps_p^2(I1), ascending in I1."""
    red = _reduce(params, direction)
    u = Polynomial([1.0, red.s])
    cross = (red.A * red.B.conjugate()).real
    response = Polynomial([0.0, 1.0]) * (abs(red.A) ** 2 * u * u + 2.0 * cross * u + abs(red.B) ** 2)
    folds = response.deriv() * u - 2.0 * red.s * response
    points = []
    for intensity in _nonnegative_real_roots(folds.coef[::-1]):
        if intensity <= 0:
            continue
        eps_p_sq = float(response(intensity) / (red.drive_gain * u(intensity) ** 2))
        points.append(TurningPoint(eps_p_sq=eps_p_sq, I1=intensity))
    return points


def bistable_window(params: SystemParams, direction: Direction) -> Optional[Tuple[float, float]]:
    """Drive-power interval (eps_p^2) with three steady branches, or None."""
    points = turning_points(params, direction)
    if len(points) < 2:
        return None
    values = [point.eps_p_sq for point in points]
    low, high = min(values), max(values)
    if high <= low:
        return None
    return low, high
