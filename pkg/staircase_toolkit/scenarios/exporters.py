"""CSV and JSON artifacts of a scenario run.

Floats are written as ``.12e`` strings and JSON keys are sorted, so two runs
of the same scenario produce byte-identical numeric artifacts.
"""

from __future__ import annotations

import csv
import json
from enum import Enum
from pathlib import Path

import numpy as np
from django.core.serializers.json import DjangoJSONEncoder

from staircase_toolkit.evolution.models import TrajectoryRecord
from staircase_toolkit.hum_control.models import ControlSignal

from .models import SCHEMA_VERSION


class ToolkitJSONEncoder(DjangoJSONEncoder):
    def default(self, o):
        if isinstance(o, np.bool_):
            return bool(o)
        if isinstance(o, np.integer):
            return int(o)
        if isinstance(o, np.floating):
            return float(o)
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, complex | np.complexfloating):
            return [float(o.real), float(o.imag)]
        if isinstance(o, Enum):
            return o.value
        if isinstance(o, Path):
            return str(o)
        return super().default(o)


def dumps(payload) -> str:
    return json.dumps(payload, cls=ToolkitJSONEncoder, sort_keys=True, indent=2) + "\n"


def format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool | np.bool_):
        return str(bool(value)).lower()
    if isinstance(value, int | np.integer):
        return str(int(value))
    if isinstance(value, float | np.floating):
        return f"{float(value):.12e}"
    return str(value)


def trajectory_fields(trajectory: TrajectoryRecord) -> list[str]:
    fields = ["time", *(f"min_y{i + 1}" for i in range(trajectory.components)), "l2_norm"]
    if trajectory.reference_distance is not None:
        fields.append("reference_distance")
    return fields


def trajectory_rows(trajectory: TrajectoryRecord) -> list[dict]:
    norms = trajectory.l2_norms()
    rows = []
    for k, t in enumerate(trajectory.times):
        row = {"time": t, "l2_norm": norms[k]}
        row.update({f"min_y{i + 1}": trajectory.minima[k, i] for i in range(trajectory.components)})
        if trajectory.reference_distance is not None:
            row["reference_distance"] = trajectory.reference_distance[k]
        rows.append(row)
    return rows


def control_fields(control: ControlSignal) -> list[str]:
    return [
        "time",
        *(f"u_{q}_{c + 1}" for q in range(control.control_modes) for c in range(control.channels)),
    ]


def control_rows(control: ControlSignal) -> list[dict]:
    """One row per step, stamped with the time the step starts."""
    rows = []
    for k, t in enumerate(control.times[:-1]):
        row = {"time": t}
        row.update(
            {
                f"u_{q}_{c + 1}": control.coefficients[k, q, c]
                for q in range(control.control_modes)
                for c in range(control.channels)
            },
        )
        rows.append(row)
    return rows


class ArtifactWriter:
    """Writes the artifacts of one run and remembers their paths relative to ``root``."""

    def __init__(self, root: Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.artifacts: list[str] = []

    def path_for(self, name: str) -> Path:
        self.artifacts.append(name)
        return self.root / name

    def json(self, name: str, payload: dict) -> str:
        self.path_for(name).write_text(dumps({"schema_version": SCHEMA_VERSION, **payload}))
        return name

    def csv(self, name: str, fieldnames: list[str], rows: list[dict]) -> str:
        with self.path_for(name).open("w", newline="") as handle:
            writer = csv.DictWriter(handle, fieldnames=fieldnames, lineterminator="\n")
            writer.writeheader()
            for row in rows:
                writer.writerow({key: format_cell(row.get(key)) for key in fieldnames})
        return name

    def trajectory(self, name: str, trajectory: TrajectoryRecord) -> str:
        return self.csv(name, trajectory_fields(trajectory), trajectory_rows(trajectory))

    def control(self, name: str, control: ControlSignal) -> str:
        return self.csv(name, control_fields(control), control_rows(control))
