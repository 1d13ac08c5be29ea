"""Scenario files: dotenv syntax read through a dedicated ``environ.Env``.

Every key is checked against :data:`SCENARIO_KEYS` before anything is
computed, and every error names the file, the key and the line.
"""

from __future__ import annotations

import hashlib
import logging
import re
from pathlib import Path

import environ
import numpy as np

from staircase_toolkit.exceptions import ScenarioConfigError
from staircase_toolkit.exceptions import StructuralError
from staircase_toolkit.hum_control.models import Envelope
from staircase_toolkit.spectral_core.models import SpectralState
from staircase_toolkit.spectral_core.operations import random_nonnegative_state
from staircase_toolkit.system_model.models import BoundaryCondition
from staircase_toolkit.system_model.models import ControlWindow
from staircase_toolkit.system_model.models import SystemSpec

from .models import NumericalOptions
from .models import ScenarioConfig
from .models import TaskName
from .models import TaskParameters

logger = logging.getLogger(__name__)

DATA_KEYS = ("KIND", "VALUES", "BUMP_MODE", "BUMP_AMPLITUDE", "BUMP_COMPONENT", "SEED")
DATA_KINDS = ("constant", "cosine_bump", "modes", "random")

SCENARIO_KEYS = frozenset(
    {
        "SYSTEM_N",
        "SYSTEM_M",
        "SYSTEM_D",
        "SYSTEM_A",
        "SYSTEM_B",
        "SYSTEM_OMEGA",
        "SYSTEM_BC",
        *(f"INITIAL_{key}" for key in DATA_KEYS),
        *(f"TARGET_{key}" for key in DATA_KEYS),
        "TASKS",
        "TASK_TAU",
        "TASK_TAU_VALUES",
        "TASK_EPSILON",
        "TASK_ZETA_FLOOR",
        "TASK_FLOOR_M",
        "TASK_MODES",
        "TASK_CONTROL_MODES",
        "TASK_STEPS",
        "TASK_HORIZON",
        "TASK_P_MAX",
        "TASK_SEED",
        "TASK_T_LO",
        "TASK_T_HI",
        "TASK_T_GRID",
        "TASK_BISECTION_ITERATIONS",
        "TASK_KNOTS",
        "TASK_STAGES",
        "TASK_ENVELOPE",
        "TASK_PROBE_SAMPLES",
        "TASK_SL_MODES",
        "TASK_REFINE",
        "OUTPUT_DIR",
    },
)

# Keys that do not change any number written by a run.
UNHASHED_KEYS = frozenset({"OUTPUT_DIR"})

_BOOLEAN_STRINGS = frozenset({"true", "false", "yes", "no", "on", "off", "1", "0"})
_ASSIGNMENT = re.compile(r"^(?:export\s+)?(?P<key>[A-Za-z_][A-Za-z0-9_]*)\s*=\s*(?P<value>.*)$")


def _unquote(raw: str) -> str:
    raw = raw.strip()
    if len(raw) >= 2 and raw[0] == raw[-1] and raw[0] in "'\"":  # noqa: PLR2004
        return raw[1:-1]
    return re.split(r"\s+#", raw, maxsplit=1)[0].strip()


def read_scenario_file(path: Path) -> tuple[dict[str, str], dict[str, int]]:
    """Key/value mapping of a scenario file and the line each key sits on.

    ``environ.Env.read_env`` writes into ``os.environ`` and loses the line
    numbers that duplicate and unknown-key errors report, so scenario files
    are split here and only the typed casts go through ``environ.Env``.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        msg = f"cannot read scenario file: {exc.strerror}"
        raise ScenarioConfigError(msg, path=path) from exc

    mapping: dict[str, str] = {}
    lines: dict[str, int] = {}
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        match = _ASSIGNMENT.match(stripped)
        if match is None:
            msg = f"expected KEY = value, got {stripped!r}"
            raise ScenarioConfigError(msg, path=path, line=number)
        key = match["key"].upper()
        if key not in SCENARIO_KEYS:
            msg = "unknown key"
            raise ScenarioConfigError(msg, path=path, key=key, line=number)
        if key in mapping:
            msg = f"duplicate key, first set on line {lines[key]}"
            raise ScenarioConfigError(msg, path=path, key=key, line=number)
        mapping[key] = _unquote(match["value"])
        lines[key] = number
    return mapping, lines


def resolve_key(name: str) -> str:
    """Scenario key addressed by ``name``; ``tau`` and ``TASK_TAU`` are the same."""
    key = name.strip().upper()
    if key in SCENARIO_KEYS:
        return key
    if f"TASK_{key}" in SCENARIO_KEYS:
        return f"TASK_{key}"
    msg = f"{name!r} is not a scenario key"
    raise ScenarioConfigError(msg, key=name)


def normalized_mapping(mapping: dict[str, str]) -> str:
    return "\n".join(
        f"{key}={mapping[key]}" for key in sorted(mapping) if key not in UNHASHED_KEYS
    )


def config_hash(mapping: dict[str, str]) -> str:
    return hashlib.sha256(normalized_mapping(mapping).encode()).hexdigest()


class ScenarioReader:
    """Typed, context-aware reads over one scenario mapping."""

    def __init__(self, path: Path, mapping: dict[str, str], lines: dict[str, int]):
        self.path = path
        self.mapping = mapping
        self.lines = lines
        self.env = environ.Env()
        self.env.ENVIRON = mapping

    def error(self, key: str, message: str) -> ScenarioConfigError:
        return ScenarioConfigError(message, path=self.path, key=key, line=self.lines.get(key))

    def __contains__(self, key: str) -> bool:
        return key in self.mapping

    def _read(self, method: str, key: str, default, **kwargs):
        if key not in self.mapping:
            if default is environ.Env.NOTSET:
                raise self.error(key, "required key is missing")
            return default
        try:
            return getattr(self.env, method)(key, **kwargs)
        except (TypeError, ValueError) as exc:
            msg = f"cannot read {self.mapping[key]!r}: {exc}"
            raise self.error(key, msg) from exc

    def int(self, key: str, default=environ.Env.NOTSET, minimum: int | None = None) -> int:
        value = self._read("int", key, default)
        if minimum is not None and value < minimum:
            raise self.error(key, f"must be at least {minimum}, got {value}")
        return value

    def float(self, key: str, default=environ.Env.NOTSET, *, positive: bool = False) -> float:
        # environ's float cast strips exponent markers, so read a string and cast here.
        raw = self._read("str", key, None)
        if raw is None:
            if default is environ.Env.NOTSET:
                raise self.error(key, "required key is missing")
            value = default
        else:
            try:
                value = float(raw)
            except ValueError as exc:
                raise self.error(key, f"cannot read {raw!r} as a number") from exc
        if not np.isfinite(value) or (positive and value <= 0.0):
            qualifier = "positive and finite" if positive else "finite"
            raise self.error(key, f"must be {qualifier}, got {value}")
        return value

    def bool(self, key: str, default=environ.Env.NOTSET) -> bool:
        if key in self.mapping and self.mapping[key].strip().lower() not in _BOOLEAN_STRINGS:
            raise self.error(key, f"expected a boolean, got {self.mapping[key]!r}")
        return self._read("bool", key, default)

    def str(self, key: str, default=environ.Env.NOTSET) -> str:
        return self._read("str", key, default).strip()

    def floats(self, key: str, default=environ.Env.NOTSET, length: int | None = None) -> list[float]:
        values = self._read("list", key, default, cast=float)
        if not all(np.isfinite(values)):
            raise self.error(key, "values must be finite")
        if length is not None and len(values) != length:
            raise self.error(key, f"expected {length} values, got {len(values)}")
        return list(values)

    def words(self, key: str, default=environ.Env.NOTSET) -> list[str]:
        values = self._read("list", key, default)
        return [word.strip() for word in values if word.strip()]

    def choice(self, key: str, choices, default=environ.Env.NOTSET) -> str:
        value = self.str(key, default).lower()
        if value not in choices:
            raise self.error(key, f"expected one of {', '.join(choices)}, got {value!r}")
        return value


def _system(reader: ScenarioReader) -> SystemSpec:
    n = reader.int("SYSTEM_N", minimum=1)
    m = reader.int("SYSTEM_M", 1, minimum=1)
    D = reader.floats("SYSTEM_D", list(np.eye(n).ravel()), length=n * n)
    A = reader.floats("SYSTEM_A", [0.0] * (n * n), length=n * n)
    B = reader.floats("SYSTEM_B", length=n * m)
    omega = reader.floats("SYSTEM_OMEGA", length=2)
    bc = reader.choice("SYSTEM_BC", [str(choice) for choice in BoundaryCondition], "neumann")
    try:
        window = ControlWindow(*omega)
    except StructuralError as exc:
        raise reader.error("SYSTEM_OMEGA", str(exc)) from exc
    try:
        return SystemSpec(
            D=np.reshape(D, (n, n)),
            A=np.reshape(A, (n, n)),
            B=np.reshape(B, (n, m)),
            omega=window,
            bc=BoundaryCondition(bc),
        )
    except StructuralError as exc:
        raise reader.error("SYSTEM_N", str(exc)) from exc


def _data(reader: ScenarioReader, prefix: str, n: int, mode_count: int, seed: int) -> SpectralState:
    """Initial or target data; bump components are counted from 1."""
    kind = reader.choice(f"{prefix}_KIND", DATA_KINDS, "constant")
    if kind == "random":
        rng = np.random.default_rng(reader.int(f"{prefix}_SEED", seed, minimum=0))
        return random_nonnegative_state(rng, mode_count, n)

    values_key = f"{prefix}_VALUES"
    if kind == "modes":
        values = reader.floats(values_key)
        if not values or len(values) % n:
            raise reader.error(values_key, f"need whole rows of {n} coefficients, got {len(values)} values")
        rows = np.reshape(values, (-1, n))
        if rows.shape[0] > mode_count:
            raise reader.error(values_key, f"{rows.shape[0]} mode rows exceed the {mode_count} modes")
        return SpectralState.from_modes(rows, mode_count)

    state = SpectralState.constant(reader.floats(values_key, length=n), mode_count)
    if kind == "constant":
        return state
    mode = reader.int(f"{prefix}_BUMP_MODE", 1, minimum=1)
    if mode >= mode_count:
        raise reader.error(f"{prefix}_BUMP_MODE", f"mode {mode} is not among the {mode_count} modes")
    component = reader.int(f"{prefix}_BUMP_COMPONENT", 1, minimum=1)
    if component > n:
        raise reader.error(f"{prefix}_BUMP_COMPONENT", f"the system has {n} components")
    coefficients = state.coefficients.copy()
    coefficients[mode, component - 1] = reader.float(f"{prefix}_BUMP_AMPLITUDE")
    return SpectralState(coefficients)


def _parameters(reader: ScenarioReader, options: NumericalOptions) -> TaskParameters:
    t_lo = reader.float("TASK_T_LO", 0.01, positive=True)
    t_hi = reader.float("TASK_T_HI", 2.0, positive=True)
    if t_hi <= t_lo:
        raise reader.error("TASK_T_HI", f"must exceed TASK_T_LO = {t_lo}")
    tau_values = reader.floats("TASK_TAU_VALUES", [0.05, 0.1, 0.2, 0.4])
    if any(value <= 0.0 for value in tau_values):
        raise reader.error("TASK_TAU_VALUES", "horizons must be positive")
    t_grid = reader.floats("TASK_T_GRID", [])
    if any(value <= 0.0 for value in t_grid):
        raise reader.error("TASK_T_GRID", "horizons must be positive")
    steps = reader.int("TASK_STEPS", options.steps, minimum=2)
    if steps % 2:
        raise reader.error("TASK_STEPS", f"must be even, got {steps}")
    modes = reader.int("TASK_MODES", options.modes, minimum=1)
    control_modes = reader.int("TASK_CONTROL_MODES", options.control_modes, minimum=0)
    if control_modes >= modes:
        raise reader.error("TASK_CONTROL_MODES", f"must be below TASK_MODES = {modes}")
    probe_samples = reader.int("TASK_PROBE_SAMPLES", 2001, minimum=3)
    if probe_samples % 2 == 0:
        raise reader.error("TASK_PROBE_SAMPLES", f"must be odd, got {probe_samples}")
    return TaskParameters(
        tau=reader.float("TASK_TAU", options.tau, positive=True),
        tau_values=tuple(tau_values),
        epsilon=reader.float("TASK_EPSILON", 0.1),
        zeta_floor=reader.bool("TASK_ZETA_FLOOR", False),  # noqa: FBT003
        floor_m=reader.float("TASK_FLOOR_M", 0.5),
        modes=modes,
        control_modes=control_modes,
        steps=steps,
        horizon=reader.float("TASK_HORIZON", 1.0, positive=True),
        p_max=reader.int("TASK_P_MAX", options.p_max, minimum=1),
        seed=reader.int("TASK_SEED", 0, minimum=0),
        t_lo=t_lo,
        t_hi=t_hi,
        t_grid=tuple(t_grid),
        bisection_iterations=reader.int("TASK_BISECTION_ITERATIONS", 10, minimum=0),
        knots=reader.int("TASK_KNOTS", 16, minimum=1),
        stages=reader.int("TASK_STAGES", 1, minimum=1),
        envelope=Envelope(reader.choice("TASK_ENVELOPE", [str(choice) for choice in Envelope], "plateau")),
        probe_samples=probe_samples,
        sl_modes=reader.int("TASK_SL_MODES", 20, minimum=1),
        refine=reader.bool("TASK_REFINE", False),  # noqa: FBT003
    )


def load_scenario(
    path: Path,
    options: NumericalOptions,
    overrides: dict[str, str] | None = None,
) -> ScenarioConfig:
    """Parse and validate a scenario; ``overrides`` replace file values before validation."""
    path = Path(path)
    mapping, lines = read_scenario_file(path)
    for name, value in (overrides or {}).items():
        key = resolve_key(name)
        mapping[key] = str(value)
        lines.pop(key, None)
    reader = ScenarioReader(path, mapping, lines)

    tasks = []
    for word in reader.words("TASKS", []):
        try:
            tasks.append(TaskName(word.lower()))
        except ValueError:
            raise reader.error("TASKS", f"unknown task {word!r}") from None

    parameters = _parameters(reader, options)
    spec = _system(reader)
    mode_count = parameters.modes + 1
    initial = _data(reader, "INITIAL", spec.n, mode_count, parameters.seed)
    target = _data(reader, "TARGET", spec.n, mode_count, parameters.seed + 1)
    output_dir = Path(reader.str("OUTPUT_DIR", str(Path("results") / path.stem)))

    logger.info("Loaded scenario %s with tasks %s", path.name, ", ".join(tasks) or "(none)")
    return ScenarioConfig(
        path=path,
        mapping=dict(mapping),
        spec=spec,
        initial=initial,
        target=target,
        tasks=tuple(tasks),
        parameters=parameters,
        output_dir=output_dir,
    )
