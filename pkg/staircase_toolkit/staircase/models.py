from __future__ import annotations

from dataclasses import dataclass
from dataclasses import field
from enum import StrEnum

import numpy as np

from staircase_toolkit.evolution.models import ConstraintReport
from staircase_toolkit.evolution.models import TrajectoryRecord
from staircase_toolkit.hum_control.models import ControlSignal
from staircase_toolkit.hum_control.models import Envelope
from staircase_toolkit.spectral_core.models import SpectralState


class StaircaseVariant(StrEnum):
    IDENTITY_DIFFUSION = "identity_diffusion"
    GENERAL_DIAGONAL = "general_diagonal"


class PhaseKind(StrEnum):
    WAIT = "wait"
    APPROACH = "approach"
    STAIR = "stair"
    MATCH = "match"


@dataclass(frozen=True, eq=False)
class StaircasePlan:
    variant: StaircaseVariant
    tau: float
    step_count: int
    delta: float
    floor: float
    calibration: float
    bound: float
    initial: SpectralState
    final: SpectralState
    control_modes: int
    steps: int
    envelope: Envelope
    wait_time: float = 0.0
    gap_wait_time: float | None = None
    shift: float = 0.0
    epsilon: float | None = None
    zeta: float | None = None

    @property
    def terminal_time(self) -> float:
        if self.variant is StaircaseVariant.IDENTITY_DIFFUSION:
            return self.wait_time + (self.step_count + 2) * self.tau
        return self.step_count * self.tau

    def target(self, k: int) -> np.ndarray:
        """k-th intermediate target: a constant mean vector or a seed state."""
        weight = k / self.step_count
        if self.variant is StaircaseVariant.IDENTITY_DIFFUSION:
            return (1.0 - weight) * self.initial.mean + weight * self.final.mean
        return (1.0 - weight) * self.initial.coefficients + weight * self.final.coefficients

    def as_dict(self) -> dict:
        return {
            "variant": str(self.variant),
            "tau": self.tau,
            "step_count": self.step_count,
            "delta": self.delta,
            "floor": self.floor,
            "calibration": self.calibration,
            "bound": self.bound,
            "control_modes": self.control_modes,
            "steps": self.steps,
            "envelope": str(self.envelope),
            "wait_time": self.wait_time,
            "gap_wait_time": self.gap_wait_time,
            "shift": self.shift,
            "epsilon": self.epsilon,
            "zeta": self.zeta,
            "terminal_time": self.terminal_time,
            "initial_mean": self.initial.mean.tolist(),
            "final_mean": self.final.mean.tolist(),
        }


@dataclass(frozen=True)
class PhaseRecord:
    kind: PhaseKind
    start: float
    end: float
    index: int | None = None


@dataclass(frozen=True)
class StepDiagnostic:
    phase: PhaseKind
    index: int | None
    start: float
    defect: float
    control_norm: float
    min_state: float
    end_defect: float


@dataclass(frozen=True, eq=False)
class StaircaseResult:
    plan: StaircasePlan
    trajectory: TrajectoryRecord
    control: ControlSignal
    constraint: ConstraintReport
    terminal_error: float
    accept_tol: float
    phases: tuple[PhaseRecord, ...]
    diagnostics: tuple[StepDiagnostic, ...]
    transformed_minimum: float | None = None
    notes: tuple[str, ...] = field(default_factory=tuple)

    @property
    def matched(self) -> bool:
        return self.terminal_error <= self.accept_tol

    @property
    def feasible(self) -> bool:
        return not self.constraint.violated and self.matched

    def as_dict(self) -> dict:
        return {
            "plan": self.plan.as_dict(),
            "terminal_error": self.terminal_error,
            "accept_tol": self.accept_tol,
            "matched": self.matched,
            "feasible": self.feasible,
            "constraint": self.constraint.as_dict(),
            "control_norm": self.control.l2_norm(),
            "transformed_minimum": self.transformed_minimum,
            "phase_count": len(self.phases),
            "max_step_defect": max((d.defect for d in self.diagnostics), default=0.0),
            "notes": list(self.notes),
        }
