"""One staircase step: steer on the first half of the step, dissipate on the second.

Each step is solved in its own frame Y_hat(s) = exp(-shift s) Y(t_s + s),
in which the coupling A - shift I is dissipative, and mapped back.
"""

import logging
from dataclasses import dataclass

import numpy as np

from staircase_toolkit.constants import CALIBRATION_SAFETY
from staircase_toolkit.constants import GRAMIAN_FLOOR
from staircase_toolkit.evolution.models import TrajectoryRecord
from staircase_toolkit.evolution.propagation import controlled_evolve
from staircase_toolkit.evolution.propagation import free_evolve
from staircase_toolkit.exceptions import ConfigurationError
from staircase_toolkit.exceptions import PlanningError
from staircase_toolkit.hum_control.gramian import MinimalNormSteering
from staircase_toolkit.hum_control.models import ControlSignal
from staircase_toolkit.hum_control.models import Envelope
from staircase_toolkit.hum_control.steering import free_state_at
from staircase_toolkit.hum_control.steering import near_uncontrollable_is_fatal
from staircase_toolkit.spectral_core.models import NeumannBasis
from staircase_toolkit.spectral_core.models import SpectralState
from staircase_toolkit.spectral_core.operations import coupling_matrix
from staircase_toolkit.spectral_core.operations import sup_norm_on_grid
from staircase_toolkit.system_model.models import SystemSpec

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class StepOutcome:
    trajectory: TrajectoryRecord
    control: ControlSignal
    defect: float
    end_defect: float

    @property
    def final(self) -> SpectralState:
        return self.trajectory.final


class StaircaseStepper:
    def __init__(
        self,
        spec: SystemSpec,
        basis: NeumannBasis,
        tau: float,
        control_modes: int,
        steps: int = 40,
        envelope: Envelope | str = Envelope.PLATEAU,
        shift: float = 0.0,
        gramian_floor: float = GRAMIAN_FLOOR,
        grid_points: int | None = None,
    ):
        if steps < 2 or steps % 2:  # noqa: PLR2004
            msg = f"steps per staircase step must be even and at least 2, got {steps}"
            raise ConfigurationError(msg)
        self.spec = spec
        self.frame = spec.shifted(shift)
        self.basis = basis
        self.tau = tau
        self.half = steps // 2
        self.shift = shift
        self.grid_points = grid_points
        self.coupling = coupling_matrix(spec.omega, basis)
        with near_uncontrollable_is_fatal():
            self.engine = MinimalNormSteering(
                self.frame, self.coupling, control_modes, tau / 2, self.half, envelope, gramian_floor,
            )

    @property
    def control_modes(self) -> int:
        return self.engine.control_modes

    def step(self, start: SpectralState, target_start: SpectralState, t_s: float) -> StepOutcome:
        """Steer from ``start`` at t_s onto the free trajectory through ``target_start``."""
        half_tau = self.tau / 2
        matched = self.engine.state_modes
        target_mid = free_state_at(self.frame, target_start, half_tau)
        free_mid = free_evolve(self.frame, start, half_tau, self.half).final
        defect = (target_mid.coefficients - free_mid.coefficients)[:matched]
        local_control = self.engine.control_for(defect, 0.0)
        steered = controlled_evolve(
            self.frame, start, local_control, half_tau, self.half, 0.0, self.grid_points,
        )
        relaxed = free_evolve(
            self.frame, steered.final, half_tau, self.half, half_tau, self.grid_points,
        )
        local = steered.chain(relaxed)
        trajectory = local.rescaled(np.exp(self.shift * local.times)).shifted(t_s)
        control = ControlSignal.concatenate(
            [
                local_control.scaled(np.exp(self.shift * local_control.midpoints)),
                ControlSignal.zeros(
                    half_tau, local_control.step, self.half, matched, self.spec.m, self.coupling,
                ),
            ],
        ).retimed(t_s)
        target_end = free_state_at(self.frame, target_start, self.tau)
        end_defect = float(
            np.linalg.norm((local.final.coefficients - target_end.coefficients)[:matched]),
        )
        return StepOutcome(
            trajectory=trajectory,
            control=control,
            defect=(start - target_start).l2_norm(),
            end_defect=end_defect * float(np.exp(self.shift * self.tau)),
        )

    def response_ratio(self, direction: SpectralState) -> float:
        """max over the step of sup |Y| / |d| when steering 0 onto the free run from d."""
        size = direction.l2_norm()
        if size == 0.0:
            return 0.0
        outcome = self.step(SpectralState.zeros(*direction.coefficients.shape), direction, 0.0)
        return float(sup_norm_on_grid(outcome.trajectory.coefficients, self.grid_points).max()) / size

    def calibrate(
        self,
        directions: list[SpectralState],
        safety: float = CALIBRATION_SAFETY,
    ) -> float:
        """Empirical response constant C(tau), times the safety factor."""
        ratios = [self.response_ratio(direction) for direction in directions]
        ratios = [ratio for ratio in ratios if ratio > 0.0]
        if not ratios:
            msg = "no nonzero calibration direction"
            raise PlanningError(msg)
        constant = safety * max(ratios)
        if not np.isfinite(constant):
            msg = "calibration produced a non-finite response constant"
            raise PlanningError(msg)
        logger.info(
            "Calibrated C(tau=%.4g) = %.6g over %d directions (safety %.3g)",
            self.tau,
            constant,
            len(ratios),
            safety,
        )
        return constant


def calibration_directions(
    mode_count: int,
    components: int,
    *extra: np.ndarray,
) -> list[SpectralState]:
    """Unit defects: the given coefficient arrays, then e_0 and e_1 of each component."""
    directions = []
    for coefficients in extra:
        state = SpectralState(coefficients)
        if state.l2_norm() > 0.0:
            directions.append(state * (1.0 / state.l2_norm()))
    for component in range(components):
        for mode in (0, 1):
            if mode < mode_count:
                unit = np.zeros((mode_count, components))
                unit[mode, component] = 1.0
                directions.append(SpectralState(unit))
    return directions
