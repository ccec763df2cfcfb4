"""Direction-dependent mean-field drift of the emitter + coupled-cavity system.

    da1/dt  = x1 a1 - iJ a2 - g s            (+ sqrt(kappa_e) eps_p, forward)
    da2/dt  = -iJ a1 + x2 a2                 (+ sqrt(kappa_e) eps_p, backward)
    dsz/dt  = g (s* a1 + a1* s) - gamma sz - gamma/2
    ds/dt   = -2 g sz a1 + x3 s

with s = sigma_ge, sz = sigma_z and x1, x2, x3 from `coefficients`.
"""

import math
from typing import Optional, Tuple

import numpy as np

from nrlight.models import Direction, DriftCoefficients, StateVector, SystemParams


def coefficients(params: SystemParams) -> DriftCoefficients:
    x1 = -complex(params.kappa1 / 2 + params.kappa_e / 2, params.delta1)
    x2 = -complex(params.kappa2 / 2 + params.kappa_e / 2, params.delta1)
    x3 = complex(-params.gamma / 2, -(params.delta1 + params.delta2))
    return DriftCoefficients(x1=x1, x2=x2, x3=x3)


def drive_vector(params: SystemParams, direction: Direction) -> Tuple[float, float]:
    """Drive source terms in the (a1, a2) slots."""
    amplitude = math.sqrt(params.kappa_e) * params.eps_p
    if Direction(direction) is Direction.FORWARD:
        return amplitude, 0.0
    return 0.0, amplitude


def _rates(
    a1: complex,
    a2: complex,
    s: complex,
    z: float,
    params: SystemParams,
    direction: Direction,
    coeffs: DriftCoefficients,
) -> Tuple[complex, complex, complex, float]:
    g = params.g
    J = params.J
    f1, f2 = drive_vector(params, direction)
    da1 = coeffs.x1 * a1 - 1j * J * a2 - g * s + f1
    da2 = -1j * J * a1 + coeffs.x2 * a2 + f2
    dz = 2.0 * g * (s.conjugate() * a1).real - params.gamma * z - params.gamma / 2
    ds = -2.0 * g * z * a1 + coeffs.x3 * s
    return da1, da2, ds, dz


def drift(state: StateVector, params: SystemParams, direction: Direction) -> StateVector:
    da1, da2, ds, dz = _rates(
        state.a1, state.a2, state.sigma_ge, state.sigma_z, params, direction, coefficients(params)
    )
    return StateVector(a1=da1, a2=da2, sigma_ge=ds, sigma_z=dz)


def drift_real(
    y: np.ndarray,
    params: SystemParams,
    direction: Direction,
    coeffs: Optional[DriftCoefficients] = None,
) -> np.ndarray:
    """Realified drift; hot path for the integrator and Newton."""
    if coeffs is None:
        coeffs = coefficients(params)
    da1, da2, ds, dz = _rates(
        complex(y[0], y[1]),
        complex(y[2], y[3]),
        complex(y[4], y[5]),
        float(y[6]),
        params,
        direction,
        coeffs,
    )
    return np.array([da1.real, da1.imag, da2.real, da2.imag, ds.real, ds.imag, dz], dtype=float)


def jacobian_real(y: np.ndarray, params: SystemParams, coeffs: Optional[DriftCoefficients] = None) -> np.ndarray:
    if coeffs is None:
        coeffs = coefficients(params)
    g = params.g
    J = params.J
    p1, q1 = y[0], y[1]
    u, v = y[4], y[5]
    z = y[6]
    a1r, a1i = coeffs.x1.real, coeffs.x1.imag
    a2r, a2i = coeffs.x2.real, coeffs.x2.imag
    a3r, a3i = coeffs.x3.real, coeffs.x3.imag
    return np.array(
        [
            [a1r, -a1i, 0.0, J, -g, 0.0, 0.0],
            [a1i, a1r, -J, 0.0, 0.0, -g, 0.0],
            [0.0, J, a2r, -a2i, 0.0, 0.0, 0.0],
            [-J, 0.0, a2i, a2r, 0.0, 0.0, 0.0],
            [-2 * g * z, 0.0, 0.0, 0.0, a3r, -a3i, -2 * g * p1],
            [0.0, -2 * g * z, 0.0, 0.0, a3i, a3r, -2 * g * q1],
            [2 * g * u, 2 * g * v, 0.0, 0.0, 2 * g * p1, 2 * g * q1, -params.gamma],
        ],
        dtype=float,
    )


def jacobian(state: StateVector, params: SystemParams, direction: Direction) -> np.ndarray:
    # the drive is constant, so direction never enters the linearization
    Direction(direction)
    return jacobian_real(state.to_real(), params)


def pt_balance(params: SystemParams) -> float:
    """Net effective rate of the two cavities; zero when cavity-1 gain offsets cavity-2 loss."""
    return (params.kappa1 + params.kappa_e) / 2 + (params.kappa2 + params.kappa_e) / 2
