"""Staircase along a ladder of free trajectories for diagonal D."""

import logging
import math

import numpy as np

from staircase_toolkit.constants import ACCEPT_TOL
from staircase_toolkit.constants import CALIBRATION_SAFETY
from staircase_toolkit.constants import CERTIFY_TOL
from staircase_toolkit.constants import CONTROL_MODES
from staircase_toolkit.constants import GRAMIAN_FLOOR
from staircase_toolkit.constants import RANK_TOL
from staircase_toolkit.constants import SHIFT_MARGIN
from staircase_toolkit.constants import STEPS_PER_TAU
from staircase_toolkit.constants import TAU
from staircase_toolkit.evolution.models import ModeBlockDynamics
from staircase_toolkit.evolution.models import TrajectoryRecord
from staircase_toolkit.evolution.monitoring import monitor_constraint
from staircase_toolkit.evolution.propagation import free_evolve
from staircase_toolkit.exceptions import InfeasibleTargetError
from staircase_toolkit.exceptions import PlanningError
from staircase_toolkit.hum_control.models import ControlSignal
from staircase_toolkit.hum_control.models import Envelope
from staircase_toolkit.minimal_time.obstruction import mass_obstruction
from staircase_toolkit.spectral_core.models import SpectralState
from staircase_toolkit.system_model.kalman import kalman_rank
from staircase_toolkit.system_model.models import SystemSpec
from staircase_toolkit.system_model.structure import symmetric_part_max_eigenvalue
from staircase_toolkit.system_model.structure import validate_structure

from .hypotheses import check_data
from .hypotheses import require
from .models import PhaseKind
from .models import PhaseRecord
from .models import StaircasePlan
from .models import StaircaseResult
from .models import StaircaseVariant
from .models import StepDiagnostic
from .stepper import StaircaseStepper
from .stepper import calibration_directions

logger = logging.getLogger(__name__)


def dissipative_shift(spec: SystemSpec, margin: float = SHIFT_MARGIN) -> float:
    """Rate making A - shift I negative definite in the symmetric sense."""
    return max(0.0, symmetric_part_max_eigenvalue(spec.A)) + margin


def _boundary_floor(spec: SystemSpec, y0: SpectralState, yf0: SpectralState, tau, step_count, grid_points):
    """Smallest grid value of both free runs at the step boundaries."""
    horizon = step_count * tau
    minima = [
        free_evolve(spec, state, horizon, step_count, 0.0, grid_points).minima.min()
        for state in (y0, yf0)
    ]
    return float(min(minima))


def plan_general(
    spec: SystemSpec,
    y0: SpectralState,
    yf0: SpectralState,
    tau: float = TAU,
    epsilon: float = 0.1,
    *,
    zeta_floor: bool = False,
    control_modes: int = CONTROL_MODES,
    steps: int = STEPS_PER_TAU,
    envelope: Envelope | str = Envelope.PLATEAU,
    safety: float = CALIBRATION_SAFETY,
    margin: float = SHIFT_MARGIN,
    certify_tol: float = CERTIFY_TOL,
    gramian_floor: float = GRAMIAN_FLOOR,
    grid_points: int | None = None,
    rank_tol: float = RANK_TOL,
) -> StaircasePlan:
    """Budget delta = epsilon / (M C(tau)) and the number of ladder rungs.

    ``epsilon <= 0`` asks for an exactly nonnegative state. That request is
    checked against the mass calculus: an obstructed target raises
    :class:`InfeasibleTargetError`, any other leaves no tracking budget.
    """
    structure = validate_structure(spec, rank_tol)
    require(structure.is_elliptic, "general staircase needs an elliptic diffusion matrix")
    require(structure.is_diagonal_D, "general staircase needs a diagonal diffusion matrix")
    require(structure.is_quasipositive_A, "general staircase needs a quasipositive coupling matrix")
    eigenvalues = y0.basis.eigenvalues
    for p in range(min(control_modes, y0.mode_count - 1) + 1):
        require(
            kalman_rank(spec, float(eigenvalues[p]), rank_tol) == spec.n,
            f"Kalman rank condition fails on mode {p}",
        )
    check_data(spec, y0, yf0, certify_tol, grid_points)
    if epsilon <= 0.0:
        verdict = mass_obstruction(spec, y0, yf0)
        if verdict.obstructed:
            msg = f"no control keeps the state nonnegative: {verdict.reason}"
            raise InfeasibleTargetError(msg, verdict=verdict)
        msg = f"epsilon = {epsilon} leaves no budget for the staircase"
        raise PlanningError(msg)

    shift = dissipative_shift(spec, margin)
    stepper = StaircaseStepper(
        spec, y0.basis, tau, control_modes, steps, envelope, shift, gramian_floor, grid_points,
    )
    jump = yf0 - y0
    constant = stepper.calibrate(
        calibration_directions(y0.mode_count, spec.n, jump.coefficients),
        safety,
    )
    # Shifted free runs are L2-nonincreasing, so the data norms bound them for all time.
    bound = max(y0.l2_norm(), yf0.l2_norm()) or 1.0
    delta = epsilon / (bound * constant)
    step_count = max(1, math.ceil(jump.l2_norm() / delta))
    floor, zeta = -epsilon, None
    if zeta_floor:
        zeta = _boundary_floor(spec, y0, yf0, tau, step_count, grid_points)
        if zeta > 0.0:
            floor = zeta - epsilon
    plan = StaircasePlan(
        variant=StaircaseVariant.GENERAL_DIAGONAL,
        tau=tau,
        step_count=step_count,
        delta=delta,
        floor=floor,
        calibration=constant,
        bound=bound,
        initial=y0,
        final=yf0,
        control_modes=control_modes,
        steps=steps,
        envelope=Envelope(envelope),
        shift=shift,
        epsilon=epsilon,
        zeta=zeta,
    )
    logger.info(
        "General staircase: shift=%.6g, M=%.6g, delta=%.6g, N=%d, T=%.4g, floor=%.6g",
        shift,
        bound,
        delta,
        step_count,
        plan.terminal_time,
        floor,
    )
    return plan


def ladder_states(spec: SystemSpec, plan: StaircasePlan, *, rescaled: bool = False) -> np.ndarray:
    """Free runs from every rung seed Y0_k, sampled at the step boundaries.

    Shape (N + 1 rungs, N + 1 boundary times, modes, n). Rung k at time t is
    (1 - k/N) Y(t; y0) + (k/N) Y(t; yf0), so only the two end runs are evolved.
    ``rescaled`` returns exp(-shift t) Y instead.
    """
    count = plan.step_count
    dynamics = spec.shifted(plan.shift) if rescaled else spec
    ends = [
        free_evolve(dynamics, state, plan.terminal_time, count).coefficients
        for state in (plan.initial, plan.final)
    ]
    weights = np.arange(count + 1) / count
    return (1.0 - weights)[:, None, None, None] * ends[0] + weights[:, None, None, None] * ends[1]


def run_general(
    spec: SystemSpec,
    plan: StaircasePlan,
    y0: SpectralState,
    yf0: SpectralState,
    *,
    accept_tol: float = ACCEPT_TOL,
    certify_tol: float = CERTIFY_TOL,
    gramian_floor: float = GRAMIAN_FLOOR,
    grid_points: int | None = None,
) -> StaircaseResult:
    stepper = StaircaseStepper(
        spec, y0.basis, plan.tau, plan.control_modes, plan.steps, plan.envelope, plan.shift,
        gramian_floor, grid_points,
    )
    step_free = ModeBlockDynamics(spec, y0.mode_count, plan.tau).propagators
    start_run, target_run = y0.coefficients, yf0.coefficients
    records: list[TrajectoryRecord] = []
    controls: list[ControlSignal] = []
    phases: list[PhaseRecord] = []
    diagnostics: list[StepDiagnostic] = []

    state = y0
    for k in range(plan.step_count):
        t = k * plan.tau
        weight = (k + 1) / plan.step_count
        rung = SpectralState((1.0 - weight) * start_run + weight * target_run)
        outcome = stepper.step(state, rung, t)
        records.append(outcome.trajectory)
        controls.append(outcome.control)
        phases.append(PhaseRecord(PhaseKind.STAIR, t, t + plan.tau, k))
        diagnostics.append(
            StepDiagnostic(
                phase=PhaseKind.STAIR,
                index=k,
                start=t,
                defect=outcome.defect,
                control_norm=outcome.control.l2_norm(),
                min_state=float(outcome.trajectory.minima.min()),
                end_defect=outcome.end_defect,
            ),
        )
        logger.debug(
            "Rung %d at t=%.4g: defect %.3e, |U|=%.3e",
            k + 1,
            t,
            outcome.defect,
            diagnostics[-1].control_norm,
        )
        state = outcome.final
        start_run = np.einsum("pij,pj->pi", step_free, start_run)
        target_run = np.einsum("pij,pj->pi", step_free, target_run)

    trajectory = TrajectoryRecord.join(records)
    control = ControlSignal.concatenate(controls)
    terminal_error = float(np.linalg.norm(trajectory.final.coefficients - target_run))
    constraint = monitor_constraint(trajectory, plan.floor, certify_tol)
    notes = []
    if constraint.violated:
        notes.append(f"state dropped to {constraint.worst_minimum:.6g} below the floor {plan.floor:.6g}")
    result = StaircaseResult(
        plan=plan,
        trajectory=trajectory,
        control=control,
        constraint=constraint,
        terminal_error=terminal_error,
        accept_tol=accept_tol,
        phases=tuple(phases),
        diagnostics=tuple(diagnostics),
        notes=tuple(notes),
    )
    logger.info(
        "General staircase done: terminal error %.3e, min state %.6g, feasible=%s",
        terminal_error,
        constraint.worst_minimum,
        result.feasible,
    )
    return result
