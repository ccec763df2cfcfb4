import math
from typing import Sequence

import numpy as np

from nrlight.errors import UndefinedRatio, ZeroDrive
from nrlight.models import Direction, StateVector, SteadyBranch, SystemParams, TransmissionRecord


def output_amplitude(state: StateVector, params: SystemParams, direction: Direction) -> complex:
    """Field leaving the far cavity: cavity 2 for forward drive, cavity 1 for backward."""
    root = math.sqrt(params.kappa_e)
    if Direction(direction) is Direction.FORWARD:
        return root * state.a2
    return root * state.a1


def output_intensity(state: StateVector, direction: Direction) -> float:
    if Direction(direction) is Direction.FORWARD:
        return abs(state.a2) ** 2
    return abs(state.a1) ** 2


def transmission(params: SystemParams, direction: Direction, branch: SteadyBranch) -> TransmissionRecord:
    if params.eps_p == 0:
        raise ZeroDrive("transmission is undefined without a drive (eps_p = 0)")
    amplitude = output_amplitude(branch.state, params, direction)
    return TransmissionRecord(
        direction=Direction(direction),
        T=abs(amplitude) ** 2 / params.eps_p_sq,
        out_amplitude=amplitude,
        branch_I1=branch.I1,
    )


def isolation_ratio(t_left: float, t_right: float) -> float:
    """10 log10(T_L / T_R) in dB; positive when backward incidence is favoured."""
    if not (t_left > 0 and t_right > 0):
        raise UndefinedRatio(t_left, t_right)
    return 10.0 * (math.log10(t_left) - math.log10(t_right))


def mean_transmission(params: SystemParams, direction: Direction, states: Sequence[StateVector]) -> float:
    """Transmission of the time-averaged output power over `states`."""
    if params.eps_p == 0:
        raise ZeroDrive("transmission is undefined without a drive (eps_p = 0)")
    if not states:
        raise ValueError("no states to average")
    power = float(np.mean([output_intensity(state, direction) for state in states]))
    return params.kappa_e * power / params.eps_p_sq
