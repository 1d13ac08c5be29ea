"""Plain records of a scenario run; the app keeps no database tables."""

from __future__ import annotations

from dataclasses import dataclass
from dataclasses import field
from enum import StrEnum
from pathlib import Path

from staircase_toolkit.exceptions import EXIT_INFEASIBLE
from staircase_toolkit.exceptions import EXIT_NON_CONVERGENCE
from staircase_toolkit.exceptions import EXIT_SOFTWARE_FAILURE
from staircase_toolkit.exceptions import EXIT_SUCCESS
from staircase_toolkit.exceptions import EXIT_VALIDATION
from staircase_toolkit.hum_control.models import Envelope
from staircase_toolkit.spectral_core.models import SpectralState
from staircase_toolkit.system_model.models import SystemSpec

SCHEMA_VERSION = 1


class TaskName(StrEnum):
    VALIDATE = "validate"
    KALMAN = "kalman"
    FREE = "free"
    STEER = "steer"
    COST_SWEEP = "cost_sweep"
    STAIRCASE_IDENTITY = "staircase_identity"
    STAIRCASE_GENERAL = "staircase_general"
    MINIMAL_TIME = "minimal_time"
    OBSTRUCTION = "obstruction"


class TaskStatus(StrEnum):
    SUCCEEDED = "succeeded"
    INFEASIBLE = "infeasible"
    NOT_CONVERGED = "not_converged"
    INVALID = "invalid"
    FAILED = "failed"

    @property
    def exit_code(self) -> int:
        return {
            TaskStatus.SUCCEEDED: EXIT_SUCCESS,
            TaskStatus.INFEASIBLE: EXIT_INFEASIBLE,
            TaskStatus.NOT_CONVERGED: EXIT_NON_CONVERGENCE,
            TaskStatus.INVALID: EXIT_VALIDATION,
            TaskStatus.FAILED: EXIT_SOFTWARE_FAILURE,
        }[self]

    @classmethod
    def from_exit_code(cls, code: int) -> TaskStatus:
        return next(status for status in cls if status.exit_code == code)


# Most severe first.
EXIT_SEVERITY = (
    EXIT_VALIDATION,
    EXIT_SOFTWARE_FAILURE,
    EXIT_NON_CONVERGENCE,
    EXIT_INFEASIBLE,
    EXIT_SUCCESS,
)


def combined_exit_code(codes) -> int:
    codes = set(codes)
    return next((code for code in EXIT_SEVERITY if code in codes), EXIT_SUCCESS)


@dataclass(frozen=True)
class NumericalOptions:
    """Tolerances and defaults handed to the numerical core."""

    rank_tol: float
    p_max: int
    modes: int
    grid_points: int
    certify_tol: float
    steer_tol: float
    accept_tol: float
    gramian_floor: float
    tau: float
    steps: int
    control_modes: int
    feasibility_max_iter: int
    feasibility_kkt_tol: float

    @classmethod
    def from_settings(cls, settings) -> NumericalOptions:
        return cls(
            rank_tol=settings.TOOLKIT_RANK_TOL,
            p_max=settings.TOOLKIT_P_MAX,
            modes=settings.TOOLKIT_MODES,
            grid_points=settings.TOOLKIT_GRID_POINTS,
            certify_tol=settings.TOOLKIT_CERTIFY_TOL,
            steer_tol=settings.TOOLKIT_STEER_TOL,
            accept_tol=settings.TOOLKIT_ACCEPT_TOL,
            gramian_floor=settings.TOOLKIT_GRAMIAN_FLOOR,
            tau=settings.TOOLKIT_TAU,
            steps=settings.TOOLKIT_STEPS_PER_TAU,
            control_modes=settings.TOOLKIT_CONTROL_MODES,
            feasibility_max_iter=settings.TOOLKIT_FEASIBILITY_MAX_ITER,
            feasibility_kkt_tol=settings.TOOLKIT_FEASIBILITY_KKT_TOL,
        )


@dataclass(frozen=True)
class TaskParameters:
    tau: float
    tau_values: tuple[float, ...]
    epsilon: float
    zeta_floor: bool
    floor_m: float
    modes: int
    control_modes: int
    steps: int
    horizon: float
    p_max: int
    seed: int
    t_lo: float
    t_hi: float
    t_grid: tuple[float, ...]
    bisection_iterations: int
    knots: int
    stages: int
    envelope: Envelope
    probe_samples: int
    sl_modes: int
    refine: bool

    def as_dict(self) -> dict:
        return {
            "tau": self.tau,
            "tau_values": list(self.tau_values),
            "epsilon": self.epsilon,
            "zeta_floor": self.zeta_floor,
            "floor_m": self.floor_m,
            "modes": self.modes,
            "control_modes": self.control_modes,
            "steps": self.steps,
            "horizon": self.horizon,
            "p_max": self.p_max,
            "seed": self.seed,
            "t_lo": self.t_lo,
            "t_hi": self.t_hi,
            "t_grid": list(self.t_grid),
            "bisection_iterations": self.bisection_iterations,
            "knots": self.knots,
            "stages": self.stages,
            "envelope": str(self.envelope),
            "probe_samples": self.probe_samples,
            "sl_modes": self.sl_modes,
            "refine": self.refine,
        }


@dataclass(frozen=True, eq=False)
class ScenarioConfig:
    path: Path
    mapping: dict[str, str]
    spec: SystemSpec
    initial: SpectralState
    target: SpectralState
    tasks: tuple[TaskName, ...]
    parameters: TaskParameters
    output_dir: Path

    @property
    def name(self) -> str:
        return self.path.stem


@dataclass(frozen=True)
class TaskRecord:
    name: str
    status: TaskStatus
    summary: dict = field(default_factory=dict)
    message: str = ""
    artifacts: tuple[str, ...] = ()

    @property
    def exit_code(self) -> int:
        return self.status.exit_code

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "status": str(self.status),
            "exit_code": self.exit_code,
            "summary": self.summary,
            "message": self.message,
            "artifacts": list(self.artifacts),
        }


@dataclass(frozen=True)
class RunManifest:
    config_path: str
    config_hash: str
    version: str
    output_dir: str
    started: str
    finished: str
    duration: float
    exit_code: int
    tasks: tuple[TaskRecord, ...] = ()
    artifacts: tuple[str, ...] = ()
    message: str = ""
    sweep: dict | None = None

    def task(self, name: str) -> TaskRecord:
        return next(record for record in self.tasks if record.name == name)

    def as_dict(self) -> dict:
        data = {
            "schema_version": SCHEMA_VERSION,
            "config_path": self.config_path,
            "config_hash": self.config_hash,
            "version": self.version,
            "output_dir": self.output_dir,
            "started": self.started,
            "finished": self.finished,
            "duration": self.duration,
            "exit_code": self.exit_code,
            "tasks": [record.as_dict() for record in self.tasks],
            "artifacts": list(self.artifacts),
            "message": self.message,
        }
        if self.sweep is not None:
            data["sweep"] = self.sweep
        return data

    @classmethod
    def from_dict(cls, data: dict) -> RunManifest:
        """Rebuild a manifest returned by a worker as plain JSON data."""
        return cls(
            config_path=data["config_path"],
            config_hash=data["config_hash"],
            version=data["version"],
            output_dir=data["output_dir"],
            started=data["started"],
            finished=data["finished"],
            duration=data["duration"],
            exit_code=data["exit_code"],
            tasks=tuple(
                TaskRecord(
                    name=task["name"],
                    status=TaskStatus(task["status"]),
                    summary=task["summary"],
                    message=task["message"],
                    artifacts=tuple(task["artifacts"]),
                )
                for task in data["tasks"]
            ),
            artifacts=tuple(data["artifacts"]),
            message=data.get("message", ""),
            sweep=data.get("sweep"),
        )
