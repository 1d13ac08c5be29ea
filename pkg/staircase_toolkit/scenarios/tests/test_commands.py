import csv
import json
from io import StringIO

import pytest
from django.core.management import call_command
from django.core.management.base import CommandError

from .factories import ObstructedScenarioFactory
from .factories import write_scenario


@pytest.fixture
def heat_scenario(tmp_path):
    return write_scenario(tmp_path / "heat.env")


def test_run_reports_each_task(heat_scenario, tmp_path):
    out = StringIO()

    call_command("run", str(heat_scenario), out=str(tmp_path / "run"), stdout=out)

    assert "validate: succeeded" in out.getvalue()
    assert "free: succeeded" in out.getvalue()
    assert (tmp_path / "run" / "manifest.json").is_file()


def test_run_overrides_reach_the_scenario(heat_scenario, tmp_path):
    call_command("run", str(heat_scenario), out=str(tmp_path / "run"), modes=4, steps=6, stdout=StringIO())

    parameters = json.loads((tmp_path / "run" / "scenario.json").read_text())["parameters"]
    assert parameters["modes"] == 4
    assert parameters["steps"] == 6


def test_run_exit_code_of_an_infeasible_target(tmp_path):
    path = write_scenario(tmp_path / "pair.env", ObstructedScenarioFactory())

    with pytest.raises(CommandError) as exc_info:
        call_command("run", str(path), stdout=StringIO())

    assert exc_info.value.returncode == 3


def test_run_exit_code_of_an_invalid_scenario(tmp_path):
    path = write_scenario(tmp_path / "broken.env", SYSTEM_OMEGA="0.2")

    with pytest.raises(CommandError, match="SYSTEM_OMEGA") as exc_info:
        call_command("run", str(path), stdout=StringIO())

    assert exc_info.value.returncode == 2


def test_sweep_aggregates_sub_runs(heat_scenario, tmp_path):
    root = tmp_path / "sweep"

    call_command("sweep", str(heat_scenario), param="horizon", values="0.5, 1.0", out=str(root), stdout=StringIO())

    with (root / "sweep.csv").open() as handle:
        rows = list(csv.DictReader(handle))
    assert [row["value"] for row in rows] == ["0.5", "1.0"]
    assert [row["exit_code"] for row in rows] == ["0", "0"]
    assert [row["free.horizon"] for row in rows] == ["5.000000000000e-01", "1.000000000000e+00"]
    assert (root / "task_horizon=0.5" / "free_trajectory.csv").is_file()

    manifest = json.loads((root / "manifest.json").read_text())
    assert manifest["sweep"]["parameter"] == "TASK_HORIZON"
    assert [run["exit_code"] for run in manifest["sweep"]["runs"]] == [0, 0]


def test_sweep_without_values_exits_zero(heat_scenario, tmp_path):
    root = tmp_path / "sweep"

    call_command("sweep", str(heat_scenario), param="tau", values="", out=str(root), stdout=StringIO())

    assert (root / "sweep.csv").read_text() == "value,exit_code\n"
    assert json.loads((root / "manifest.json").read_text())["exit_code"] == 0


def test_sweep_carries_the_worst_sub_run(tmp_path):
    path = write_scenario(tmp_path / "pair.env", ObstructedScenarioFactory())

    with pytest.raises(CommandError) as exc_info:
        call_command("sweep", str(path), param="horizon", values="0.5,1", stdout=StringIO())

    assert exc_info.value.returncode == 3
    assert (tmp_path / "results" / "pair" / "sweep.csv").is_file()


def test_sweep_rejects_unknown_parameters(heat_scenario):
    with pytest.raises(CommandError, match="not a scenario key") as exc_info:
        call_command("sweep", str(heat_scenario), param="velocity", values="1", stdout=StringIO())

    assert exc_info.value.returncode == 2
