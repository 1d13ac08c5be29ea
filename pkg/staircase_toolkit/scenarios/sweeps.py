"""Parameter sweeps: one sub-run per value, dispatched as Celery tasks."""

from __future__ import annotations

import logging
from pathlib import Path

from django.utils import timezone

from staircase_toolkit import __version__

from .config import config_hash
from .config import resolve_key
from .exporters import ArtifactWriter
from .exporters import dumps
from .models import RunManifest
from .models import combined_exit_code
from .pipeline import base_mapping
from .tasks import run_scenario_task

logger = logging.getLogger(__name__)


def parse_values(raw: str) -> list[str]:
    return [value.strip() for value in raw.split(",") if value.strip()]


def summary_columns(manifests: list[RunManifest]) -> list[str]:
    """``task.field`` for every scalar summary entry of any sub-run, sorted."""
    columns = set()
    for manifest in manifests:
        for record in manifest.tasks:
            columns.update(
                f"{record.name}.{key}"
                for key, value in record.summary.items()
                if value is None or isinstance(value, bool | int | float | str)
            )
    return sorted(columns)


def sweep_rows(values: list[str], manifests: list[RunManifest], columns: list[str]) -> list[dict]:
    rows = []
    for value, manifest in zip(values, manifests, strict=True):
        row = {"value": value, "exit_code": manifest.exit_code}
        for record in manifest.tasks:
            for key, entry in record.summary.items():
                column = f"{record.name}.{key}"
                if column in columns:
                    row[column] = entry
        rows.append(row)
    return rows


def sweep_scenario(
    config_path,
    parameter: str,
    values: list[str],
    overrides: dict[str, str] | None = None,
) -> RunManifest:
    """Run the scenario once per value of ``parameter`` and aggregate the summaries.

    Sub-runs write into ``<out>/<key>=<value>/``; ``sweep.csv`` and the sweep
    manifest go to ``<out>``.
    """
    overrides = dict(overrides or {})
    key = resolve_key(parameter)
    mapping = base_mapping(config_path, overrides)
    root = Path(
        overrides.pop("OUTPUT_DIR", None) or mapping.get("OUTPUT_DIR") or Path("results") / Path(config_path).stem,
    )
    started = timezone.now()

    pending = [
        run_scenario_task.delay(str(config_path), str(root / f"{key.lower()}={value}"), {**overrides, key: value})
        for value in values
    ]
    logger.info("Sweeping %s over %d values", key, len(pending))
    # Every sub-run is queued before the first result is awaited.
    manifests = [RunManifest.from_dict(result.get()) for result in pending]

    writer = ArtifactWriter(root)
    columns = summary_columns(manifests)
    writer.csv("sweep.csv", ["value", "exit_code", *columns], sweep_rows(values, manifests, columns))
    finished = timezone.now()
    manifest = RunManifest(
        config_path=str(config_path),
        config_hash=config_hash(mapping),
        version=__version__,
        output_dir=str(root),
        started=started.isoformat(),
        finished=finished.isoformat(),
        duration=(finished - started).total_seconds(),
        exit_code=combined_exit_code(sub.exit_code for sub in manifests),
        artifacts=tuple(writer.artifacts),
        sweep={
            "parameter": key,
            "values": list(values),
            "runs": [{"output_dir": sub.output_dir, "exit_code": sub.exit_code} for sub in manifests],
        },
    )
    (root / "manifest.json").write_text(dumps(manifest.as_dict()))
    logger.info("Sweep of %s finished with exit code %d", key, manifest.exit_code)
    return manifest

