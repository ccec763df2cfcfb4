"""Deterministic CSV/JSON output for sweep results."""

import csv
import io
import json
import os
from typing import Any, Literal, Optional

from nrlight.models import SweepResult

CSV_COLUMNS = ("scenario", "direction", "axis1", "axis2", "branch", "I1", "T", "isolation_db", "stable", "verdict")

OutputFormat = Literal["csv", "json"]


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        # repr is the shortest string that round-trips and ignores locale
        return repr(value)
    if hasattr(value, "value"):
        return str(value.value)
    return str(value)


def write_result(result: SweepResult, fmt: OutputFormat = "csv") -> bytes:
    if fmt == "csv":
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in result.rows:
            writer.writerow([_cell(getattr(row, column)) for column in CSV_COLUMNS])
        return buffer.getvalue().encode("utf-8")
    if fmt == "json":
        return (json.dumps(result.model_dump(mode="json"), sort_keys=True, indent=2) + "\n").encode("utf-8")
    raise ValueError(f"unknown output format: {fmt!r}")


def save_result(result: SweepResult, path: str, fmt: Optional[OutputFormat] = None) -> str:
    """Write to `path`, inferring the format from the extension when not given."""
    if fmt is None:
        fmt = "json" if path.lower().endswith(".json") else "csv"
    payload = write_result(result, fmt)
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "wb") as handle:
        handle.write(payload)
    return path


_PLOT_TEMPLATE = '''"""Plot {title} from {data_path}."""
import csv
from collections import defaultdict

import matplotlib.pyplot as plt

QUANTITY = {quantity!r}
FOCUS = {focus!r}

curves = defaultdict(lambda: ([], []))
with open({data_path!r}, newline="") as handle:
    for row in csv.DictReader(handle):
        if row["direction"] != FOCUS or not row[QUANTITY]:
            continue
        if "selected" not in row["verdict"].split("|"):
            continue
        xs, ys = curves[row["axis2"]]
        xs.append(float(row["axis1"]))
        ys.append(float(row[QUANTITY]))

fig, ax = plt.subplots()
for label, (xs, ys) in sorted(curves.items()):
    ax.plot(xs, ys, label=label or FOCUS)
ax.set_xlabel({xlabel!r})
ax.set_ylabel(QUANTITY)
ax.legend()
fig.savefig({image_path!r}, dpi=150)
'''


def render_plot_script(result: SweepResult, data_path: str, quantity: str = "T") -> str:
    """Standalone matplotlib script that plots the selected branch of a written CSV."""
    if quantity not in CSV_COLUMNS:
        raise ValueError(f"unknown column: {quantity!r}")
    metadata = result.metadata
    resolved = metadata.get("resolved_scenario") or {}
    sweep_spec = metadata.get("sweep") or {}
    axis1 = (sweep_spec.get("axis1") or {}).get("axis", "axis1")
    return _PLOT_TEMPLATE.format(
        title=metadata.get("scenario", "sweep"),
        data_path=data_path,
        quantity=quantity,
        focus=resolved.get("focus", "forward"),
        xlabel=axis1,
        image_path=os.path.splitext(data_path)[0] + ".png",
    )
