import json

from celery import shared_task

from .exporters import dumps
from .pipeline import run_scenario


@shared_task()
def run_scenario_task(config_path: str, out_dir: str, overrides: dict | None = None) -> dict:
    """One sweep sub-run; the manifest comes back as plain JSON data."""
    overrides = {**(overrides or {}), "OUTPUT_DIR": out_dir}
    # numpy scalars in task summaries are not JSON-native.
    return json.loads(dumps(run_scenario(config_path, overrides).as_dict()))
