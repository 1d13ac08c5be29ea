from pathlib import Path

import numpy as np
import pytest

from staircase_toolkit.exceptions import ScenarioConfigError
from staircase_toolkit.hum_control.models import Envelope
from staircase_toolkit.scenarios.config import config_hash
from staircase_toolkit.scenarios.config import load_scenario
from staircase_toolkit.scenarios.config import read_scenario_file
from staircase_toolkit.scenarios.config import resolve_key
from staircase_toolkit.scenarios.models import TaskName
from staircase_toolkit.scenarios.pipeline import default_options
from staircase_toolkit.system_model.models import BoundaryCondition

from .factories import ObstructedScenarioFactory
from .factories import ScenarioMappingFactory
from .factories import write_scenario


@pytest.fixture
def options():
    return default_options()


@pytest.fixture
def scenario_path(tmp_path) -> Path:
    return tmp_path / "heat.env"


def test_defaults_fill_unset_keys(scenario_path, options):
    config = load_scenario(write_scenario(scenario_path), options)
    parameters = config.parameters

    assert config.tasks == (TaskName.VALIDATE, TaskName.KALMAN, TaskName.FREE)
    assert config.spec.n == 1
    assert config.spec.bc is BoundaryCondition.NEUMANN
    np.testing.assert_array_equal(config.spec.D, np.eye(1))
    np.testing.assert_array_equal(config.spec.A, np.zeros((1, 1)))
    assert config.initial.mode_count == 9
    assert config.initial.mean.tolist() == [1.0]
    assert config.target.mean.tolist() == [2.0]
    assert parameters.tau == options.tau
    assert parameters.tau_values == (0.05, 0.1, 0.2, 0.4)
    assert parameters.envelope is Envelope.PLATEAU
    assert parameters.t_lo == pytest.approx(0.01)
    assert parameters.t_hi == pytest.approx(2.0)
    assert parameters.probe_samples == 2001
    assert not parameters.refine
    assert config.output_dir == Path("results") / "heat"


def test_conservative_pair_matrices_read_row_by_row(scenario_path, options):
    config = load_scenario(write_scenario(scenario_path, ObstructedScenarioFactory()), options)

    np.testing.assert_array_equal(config.spec.A, [[0.0, 1.0], [0.0, -1.0]])
    np.testing.assert_array_equal(config.spec.B, [[0.0], [1.0]])
    assert (config.spec.omega.a, config.spec.omega.b) == (0.3, 0.8)


def test_quotes_comments_and_lowercase_keys(scenario_path, options):
    scenario_path.write_text(
        "# scalar heat\n"
        "system_n = 1\n"
        "SYSTEM_B = '1'\n"
        'SYSTEM_OMEGA = "0.2,0.8"\n'
        "INITIAL_VALUES = 1  # mean\n"
        "TARGET_VALUES = 2\n"
        "\n"
        "export TASK_EPSILON = 1e-3\n",
    )

    config = load_scenario(scenario_path, options)

    assert config.spec.n == 1
    assert config.parameters.epsilon == pytest.approx(1e-3)
    assert config.tasks == ()


def test_unknown_key_names_the_line(scenario_path):
    scenario_path.write_text("SYSTEM_N = 1\n# comment\nTASK_TAUU = 0.5\n")

    with pytest.raises(ScenarioConfigError) as exc_info:
        read_scenario_file(scenario_path)

    assert exc_info.value.key == "TASK_TAUU"
    assert exc_info.value.line == 3
    assert "line 3" in str(exc_info.value)
    assert exc_info.value.exit_code == 2


def test_duplicate_key_is_rejected(scenario_path):
    scenario_path.write_text("TASK_TAU = 0.5\nTASK_TAU = 0.25\n")

    with pytest.raises(ScenarioConfigError, match="first set on line 1") as exc_info:
        read_scenario_file(scenario_path)

    assert exc_info.value.line == 2


def test_line_without_assignment_is_rejected(scenario_path):
    scenario_path.write_text("SYSTEM_N 1\n")

    with pytest.raises(ScenarioConfigError, match="expected KEY = value"):
        read_scenario_file(scenario_path)


def test_missing_file_is_a_config_error(tmp_path):
    with pytest.raises(ScenarioConfigError, match="cannot read"):
        read_scenario_file(tmp_path / "absent.env")


@pytest.mark.parametrize(
    ("overrides", "key", "match"),
    [
        ({"TASK_TAU": "abc"}, "TASK_TAU", "as a number"),
        ({"TASK_TAU": "-0.5"}, "TASK_TAU", "positive"),
        ({"TASK_STEPS": "11"}, "TASK_STEPS", "even"),
        ({"TASK_CONTROL_MODES": "8"}, "TASK_CONTROL_MODES", "below TASK_MODES"),
        ({"TASK_PROBE_SAMPLES": "2000"}, "TASK_PROBE_SAMPLES", "odd"),
        ({"TASK_T_HI": "0.005"}, "TASK_T_HI", "must exceed"),
        ({"TASK_REFINE": "maybe"}, "TASK_REFINE", "boolean"),
        ({"TASK_ENVELOPE": "square"}, "TASK_ENVELOPE", "expected one of"),
        ({"TASKS": "validate, teleport"}, "TASKS", "unknown task"),
        ({"SYSTEM_OMEGA": "0.8, 0.2"}, "SYSTEM_OMEGA", "control window"),
        ({"SYSTEM_A": "0, 1"}, "SYSTEM_A", "expected 1 values"),
        ({"TARGET_VALUES": "1, 2"}, "TARGET_VALUES", "expected 1 values"),
    ],
)
def test_invalid_values_name_the_key(scenario_path, options, overrides, key, match):
    write_scenario(scenario_path, **overrides)

    with pytest.raises(ScenarioConfigError, match=match) as exc_info:
        load_scenario(scenario_path, options)

    assert exc_info.value.key == key
    assert exc_info.value.line is not None


def test_missing_required_key(scenario_path, options):
    mapping = ScenarioMappingFactory()
    del mapping["SYSTEM_B"]
    write_scenario(scenario_path, mapping)

    with pytest.raises(ScenarioConfigError, match="required key is missing") as exc_info:
        load_scenario(scenario_path, options)

    assert exc_info.value.key == "SYSTEM_B"
    assert exc_info.value.line is None


def test_overrides_replace_file_values(scenario_path, options):
    write_scenario(scenario_path, TASK_TAU="0.5")

    config = load_scenario(scenario_path, options, {"tau": "0.25", "TASK_MODES": "4"})

    assert config.parameters.tau == pytest.approx(0.25)
    assert config.initial.mode_count == 5
    assert config.mapping["TASK_TAU"] == "0.25"


def test_unknown_override_is_rejected(scenario_path, options):
    write_scenario(scenario_path)

    with pytest.raises(ScenarioConfigError, match="not a scenario key"):
        load_scenario(scenario_path, options, {"velocity": "3"})


def test_resolve_key_accepts_short_task_names():
    assert resolve_key("tau") == "TASK_TAU"
    assert resolve_key("system_n") == "SYSTEM_N"
    assert resolve_key(" OUTPUT_DIR ") == "OUTPUT_DIR"


def test_cosine_bump_sets_one_coefficient(scenario_path, options):
    write_scenario(
        scenario_path,
        ObstructedScenarioFactory(
            INITIAL_KIND="cosine_bump",
            INITIAL_BUMP_MODE="2",
            INITIAL_BUMP_COMPONENT="2",
            INITIAL_BUMP_AMPLITUDE="0.3",
        ),
    )

    initial = load_scenario(scenario_path, options).initial

    expected = np.zeros((9, 2))
    expected[0] = [3.0, 1.0]
    expected[2, 1] = 0.3
    np.testing.assert_array_equal(initial.coefficients, expected)


def test_modes_data_need_whole_rows(scenario_path, options):
    write_scenario(scenario_path, ObstructedScenarioFactory(INITIAL_KIND="modes", INITIAL_VALUES="1, 1, 0.5"))

    with pytest.raises(ScenarioConfigError, match="whole rows of 2"):
        load_scenario(scenario_path, options)


def test_random_data_follow_the_seed(scenario_path, options):
    write_scenario(scenario_path, INITIAL_KIND="random", TARGET_KIND="random", TASK_SEED="7")

    first = load_scenario(scenario_path, options)
    second = load_scenario(scenario_path, options)

    assert first.initial == second.initial
    assert first.initial != first.target
    assert first.initial.reconstruct(np.linspace(0.0, 1.0, 201)).min() > 0.0


def test_hash_ignores_output_dir():
    mapping = ScenarioMappingFactory()

    assert config_hash({**mapping, "OUTPUT_DIR": "a"}) == config_hash({**mapping, "OUTPUT_DIR": "b"})
    assert config_hash(mapping) != config_hash({**mapping, "TASK_TAU": "0.25"})
