import os
import sys


def add_src_path() -> None:
    root = os.path.abspath(os.path.join(os.path.dirname(__file__), "..", "src"))
    if root not in sys.path:
        sys.path.insert(0, root)


def passive(**changes):
    """Passive-passive pair used throughout the bistability tests (g = 4, J = 4 unless changed)."""
    from nrlight.models import SystemParams

    base = dict(g=4.0, J=4.0, kappa1=1.0, kappa_e=3.0, gamma=0.1, delta1=0.0, delta2=0.0, eps_p=0.0)
    base.update(changes)
    return SystemParams(**base)


def at_drive(params, eps_p_sq: float):
    from nrlight.models import SweepAxis

    return params.along(SweepAxis.EPS_P_SQ, eps_p_sq)
