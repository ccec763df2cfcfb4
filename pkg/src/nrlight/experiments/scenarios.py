"""Named experiments and their default parameter sets."""

from __future__ import annotations

from typing import Dict, List

from nrlight.errors import UnknownScenario
from nrlight.models import AxisSpec, Direction, Scenario, SweepAxis, SweepSpec, SystemParams

LINE_POINTS = 400
MAP_POINTS = 200


def passive_params(**changes: float) -> SystemParams:
    """Passive-passive pair: kappa1 = kappa2, kappa_e = 3, gamma = 0.1, on resonance."""
    base = dict(kappa1=1.0, kappa_e=3.0, gamma=0.1, delta1=0.0, delta2=0.0)
    base.update(changes)
    return SystemParams(**base)


def active_params(**changes: float) -> SystemParams:
    """Active-passive pair: kappa1 = -7.4, kappa_e = 3.2 (gain-loss balanced), g = 3, J = 4, eps_p = 0.36."""
    return SystemParams(**changes)


def _drive_axis(stop: float, points: int = LINE_POINTS) -> AxisSpec:
    return AxisSpec(axis=SweepAxis.EPS_P_SQ, start=0.0, stop=stop, points=points)


def _line(axis: SweepAxis, start: float, stop: float) -> AxisSpec:
    return AxisSpec(axis=axis, start=start, stop=stop, points=LINE_POINTS)


def _build_catalog() -> Dict[str, Scenario]:
    g_family = AxisSpec(axis=SweepAxis.G, values=[2.0, 3.0, 4.0, 5.0, 6.0, 7.0])
    j_family = AxisSpec(axis=SweepAxis.J, values=[2.0, 4.0, 6.0])
    detuning_family = AxisSpec(axis=SweepAxis.DELTA1, values=[0.0, 0.5, 1.0, 2.0])
    scenarios: List[Scenario] = []
    for suffix, focus in (("a", Direction.FORWARD), ("b", Direction.BACKWARD)):
        scenarios.append(
            Scenario(
                id=f"fig2{suffix}",
                title=f"Passive pair, J = 4: {focus.value} output vs drive for g = 2..7",
                base_params=passive_params(g=2.0, J=4.0),
                sweep=SweepSpec(axis1=_drive_axis(3.0), axis2=g_family),
                focus=focus,
                hysteresis=True,
            )
        )
    for suffix, focus in (("c", Direction.FORWARD), ("d", Direction.BACKWARD)):
        scenarios.append(
            Scenario(
                id=f"fig2{suffix}",
                title=f"Passive pair, g = 2: {focus.value} output vs drive for J/g = 1, 2, 3",
                base_params=passive_params(g=2.0, J=4.0),
                sweep=SweepSpec(axis1=_drive_axis(1.0), axis2=j_family),
                focus=focus,
                hysteresis=True,
            )
        )
    scenarios.append(
        Scenario(
            id="fig3",
            title="Passive pair, g = 2, J = 4: output vs drive under cavity detuning",
            base_params=passive_params(g=2.0, J=4.0),
            sweep=SweepSpec(axis1=_drive_axis(2.0), axis2=detuning_family),
            hysteresis=True,
        )
    )
    scenarios.append(
        Scenario(
            id="fig4a",
            title="Passive pair, g = 4, J = 4: isolation and branch-count map",
            base_params=passive_params(g=4.0, J=4.0),
            sweep=SweepSpec(
                axis1=_drive_axis(1.0, MAP_POINTS),
                axis2=AxisSpec(axis=SweepAxis.G, start=2.0, stop=6.0, points=MAP_POINTS + 1),
                regions=True,
            ),
            hysteresis=True,
            hysteresis_values2=[4.0],
        )
    )
    scenarios.append(
        Scenario(
            id="fig4b",
            title="Active-passive pair, g = 3, J = 4: isolation and branch-count map",
            base_params=active_params(g=3.0, J=4.0),
            sweep=SweepSpec(
                axis1=_drive_axis(1.0, MAP_POINTS),
                axis2=AxisSpec(axis=SweepAxis.G, start=1.0, stop=5.0, points=MAP_POINTS + 1),
                regions=True,
            ),
            focus=Direction.BACKWARD,
            hysteresis=True,
            hysteresis_values2=[3.0],
            hysteresis_points=40,
        )
    )
    resonant = (
        ("a", "transmission", active_params(eps_p=0.36), _line(SweepAxis.G, 0.0, 5.0)),
        ("b", "isolation", active_params(eps_p=0.36), _line(SweepAxis.G, 0.0, 5.0)),
        ("c", "transmission", active_params(eps_p=0.39), _line(SweepAxis.J, 0.0, 8.0)),
        ("d", "isolation", active_params(eps_p=0.39), _line(SweepAxis.J, 0.0, 8.0)),
        ("e", "transmission", active_params(), _drive_axis(0.5)),
        ("f", "isolation", active_params(), _drive_axis(0.5)),
    )
    for suffix, panel, params, axis in resonant:
        scenarios.append(
            Scenario(
                id=f"fig5{suffix}",
                title=f"Active-passive pair on resonance: {panel} vs {axis.axis.value}",
                base_params=params,
                sweep=SweepSpec(axis1=axis),
                focus=Direction.BACKWARD,
            )
        )
    detuned = (
        ("a", "transmission", SweepAxis.DELTA1),
        ("b", "isolation", SweepAxis.DELTA1),
        ("c", "transmission", SweepAxis.DELTA2),
        ("d", "isolation", SweepAxis.DELTA2),
    )
    for suffix, panel, axis in detuned:
        scenarios.append(
            Scenario(
                id=f"fig6{suffix}",
                title=f"Active-passive pair off resonance: {panel} vs {axis.value}",
                base_params=active_params(),
                sweep=SweepSpec(axis1=_line(axis, -3.0, 3.0)),
                focus=Direction.BACKWARD,
            )
        )
    scenarios.append(
        Scenario(
            id="fig7",
            title="Active-passive pair, J = 1: reversed allowed direction",
            base_params=active_params(J=1.0),
            sweep=SweepSpec(axis1=_drive_axis(2.0)),
            focus=Direction.FORWARD,
            hysteresis=True,
            hysteresis_points=40,
        )
    )
    return {scenario.id: scenario for scenario in scenarios}


CATALOG: Dict[str, Scenario] = _build_catalog()


def list_scenarios() -> List[str]:
    return sorted(CATALOG)


def get_scenario(scenario_id: str) -> Scenario:
    try:
        return CATALOG[scenario_id]
    except KeyError:
        raise UnknownScenario(scenario_id) from None
