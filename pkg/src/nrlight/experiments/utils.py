from __future__ import annotations

from typing import Any, Dict, Iterable, Optional

from nrlight import __version__
from nrlight.mean_field import pt_balance
from nrlight.models import Scenario, SweepSpec, SystemParams


def build_metadata(
    *,
    params: SystemParams,
    spec: Optional[SweepSpec] = None,
    scenario: Optional[Scenario] = None,
    extra: Optional[Dict[str, Any]] = None,
) -> Dict[str, Any]:
    metadata: Dict[str, Any] = {
        "version": __version__,
        "params": params.model_dump(mode="json"),
        "pt_balance": pt_balance(params),
    }
    if spec is not None:
        metadata["sweep"] = spec.model_dump(mode="json")
    if scenario is not None:
        metadata["scenario"] = scenario.id
        metadata["resolved_scenario"] = scenario.model_dump(mode="json")
    if extra:
        metadata.update(extra)
    return metadata


def compact_flags(flags: Iterable[Optional[str]]) -> str:
    return "|".join(flag for flag in flags if flag)
