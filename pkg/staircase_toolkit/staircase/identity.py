"""Staircase through constant states for D = c I.

With D = c I the change of variables Z = exp(-t A) Y removes the coupling,
so every constant vector is a steady state in Z. The run itself works in
the original variables, where the constant Z-targets become exp(t A) Zbar.
"""

import logging
import math

import numpy as np
import scipy.linalg

from staircase_toolkit.constants import ACCEPT_TOL
from staircase_toolkit.constants import CALIBRATION_SAFETY
from staircase_toolkit.constants import CERTIFY_TOL
from staircase_toolkit.constants import CONTROL_MODES
from staircase_toolkit.constants import GRAMIAN_FLOOR
from staircase_toolkit.constants import RANK_TOL
from staircase_toolkit.constants import STEPS_PER_TAU
from staircase_toolkit.constants import TAU
from staircase_toolkit.constants import WAIT_TIME_CAP
from staircase_toolkit.constants import ZERO_MEAN_THRESHOLD
from staircase_toolkit.evolution.models import TrajectoryRecord
from staircase_toolkit.evolution.monitoring import monitor_constraint
from staircase_toolkit.evolution.propagation import free_evolve
from staircase_toolkit.exceptions import PlanningError
from staircase_toolkit.hum_control.models import ControlSignal
from staircase_toolkit.hum_control.models import Envelope
from staircase_toolkit.hum_control.steering import free_state_at
from staircase_toolkit.spectral_core.models import SpectralState
from staircase_toolkit.spectral_core.operations import minima_on_grid
from staircase_toolkit.system_model.kalman import kalman_rank
from staircase_toolkit.system_model.models import SystemSpec
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


def _nonmean_energy(state: SpectralState) -> np.ndarray:
    return (state.coefficients[1:] ** 2).sum(axis=1)


def _wait_time(
    states: list[SpectralState],
    diffusion: float,
    delta: float,
    tau: float,
    time_cap: float,
) -> tuple[float, float]:
    """First multiple of tau where every heat-flowed datum is within delta of its mean.

    Also returns the bound obtained from the spectral gap alone.
    """
    eigenvalues = states[0].basis.eigenvalues[1:]
    times = tau * np.arange(math.floor(time_cap / tau) + 1)
    decay = np.exp(-2.0 * diffusion * np.outer(times, eigenvalues))
    deviation = np.zeros_like(times)
    for state in states:
        deviation = np.maximum(deviation, np.sqrt(decay @ _nonmean_energy(state)))
    inside = np.flatnonzero(deviation <= delta)
    if not inside.size:
        msg = f"data do not settle within {delta:.3e} of their means before t = {time_cap}"
        raise PlanningError(msg)
    largest = max(math.sqrt(_nonmean_energy(state).sum()) for state in states)
    gap_bound = 0.0
    if largest > delta and eigenvalues.size:
        gap_bound = math.log(largest / delta) / (diffusion * eigenvalues[0])
    return float(times[inside[0]]), gap_bound


def plan_identity(
    spec: SystemSpec,
    y0: SpectralState,
    yf0: SpectralState,
    tau: float = TAU,
    convergence_tol: float | None = None,
    *,
    control_modes: int = CONTROL_MODES,
    steps: int = STEPS_PER_TAU,
    envelope: Envelope | str = Envelope.PLATEAU,
    time_cap: float = WAIT_TIME_CAP,
    safety: float = CALIBRATION_SAFETY,
    zero_mean_threshold: float = ZERO_MEAN_THRESHOLD,
    certify_tol: float = CERTIFY_TOL,
    gramian_floor: float = GRAMIAN_FLOOR,
    grid_points: int | None = None,
    rank_tol: float = RANK_TOL,
) -> StaircasePlan:
    structure = validate_structure(spec, rank_tol)
    require(structure.is_scalar_D and structure.is_elliptic, "identity staircase needs D = c I with c > 0")
    require(structure.is_quasipositive_A, "identity staircase needs a quasipositive coupling matrix")
    require(
        structure.eigenvalues_nonneg_real,
        "identity staircase needs coupling eigenvalues with nonnegative real part",
    )
    require(
        kalman_rank(spec, 0.0, rank_tol) == spec.n,
        "identity staircase needs rank [A | B] = n",
    )
    check_data(spec, y0, yf0, certify_tol, grid_points)
    start_mean, final_mean = y0.mean, yf0.mean
    zeta = float(min(start_mean.min(), final_mean.min()))
    require(
        zeta > zero_mean_threshold,
        f"every component of both data must have positive mean, smallest is {zeta:.3e}",
    )

    stepper = StaircaseStepper(
        spec, y0.basis, tau, control_modes, steps, envelope, 0.0, gramian_floor, grid_points,
    )
    jump = SpectralState.constant(final_mean - start_mean, y0.mode_count)
    constant = stepper.calibrate(
        calibration_directions(y0.mode_count, spec.n, jump.coefficients),
        safety,
    )
    delta = zeta / constant
    if convergence_tol is not None:
        delta = min(delta, convergence_tol)
    wait_time, gap_wait = _wait_time([y0, yf0], float(spec.D[0, 0]), delta, tau, time_cap)
    bound = max(1.0, float(start_mean.max()), float(final_mean.max()))
    step_count = max(1, math.ceil(max(bound, jump.l2_norm()) / delta))
    plan = StaircasePlan(
        variant=StaircaseVariant.IDENTITY_DIFFUSION,
        tau=tau,
        step_count=step_count,
        delta=delta,
        floor=0.0,
        calibration=constant,
        bound=bound,
        initial=y0,
        final=yf0,
        control_modes=control_modes,
        steps=steps,
        envelope=Envelope(envelope),
        wait_time=wait_time,
        gap_wait_time=gap_wait,
        zeta=zeta,
    )
    logger.info(
        "Identity staircase: zeta=%.6g, delta=%.6g, N=%d, T0=%.4g (gap bound %.4g), T=%.4g",
        zeta,
        delta,
        step_count,
        wait_time,
        gap_wait,
        plan.terminal_time,
    )
    return plan


def transformed_minimum(spec: SystemSpec, trajectory: TrajectoryRecord, grid_points: int | None = None) -> float:
    """Smallest grid value of Z = exp(-t A) Y over the run."""
    exponentials = scipy.linalg.expm(-trajectory.times[:, None, None] * spec.A)
    transformed = np.einsum("kij,kpj->kpi", exponentials, trajectory.coefficients)
    return float(minima_on_grid(transformed, grid_points).min())


def run_identity(
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
        spec, y0.basis, plan.tau, plan.control_modes, plan.steps, plan.envelope, 0.0,
        gramian_floor, grid_points,
    )
    step = plan.tau / plan.steps
    records: list[TrajectoryRecord] = []
    controls: list[ControlSignal] = []
    phases: list[PhaseRecord] = []
    diagnostics: list[StepDiagnostic] = []

    state, t = y0, 0.0
    if plan.wait_time > 0.0:
        wait_steps = round(plan.wait_time / step)
        waiting = free_evolve(spec, y0, plan.wait_time, wait_steps, 0.0, grid_points)
        records.append(waiting)
        controls.append(
            ControlSignal.zeros(
                0.0, step, wait_steps, plan.control_modes + 1, spec.m, stepper.coupling,
            ),
        )
        phases.append(PhaseRecord(PhaseKind.WAIT, 0.0, plan.wait_time))
        state, t = waiting.final, plan.wait_time

    def constant_target(mean: np.ndarray, at: float) -> SpectralState:
        return SpectralState.constant(scipy.linalg.expm(at * spec.A) @ mean, y0.mode_count)

    schedule = [(PhaseKind.APPROACH, None)]
    schedule += [(PhaseKind.STAIR, k) for k in range(plan.step_count)]
    schedule.append((PhaseKind.MATCH, None))
    for kind, index in schedule:
        if kind is PhaseKind.APPROACH:
            target_start = constant_target(plan.target(0), t)
        elif kind is PhaseKind.STAIR:
            target_start = constant_target(plan.target(index + 1), t)
        else:
            target_start = free_state_at(spec, yf0, t)
        outcome = stepper.step(state, target_start, t)
        records.append(outcome.trajectory)
        controls.append(outcome.control)
        phases.append(PhaseRecord(kind, t, t + plan.tau, index))
        diagnostics.append(
            StepDiagnostic(
                phase=kind,
                index=index,
                start=t,
                defect=outcome.defect,
                control_norm=outcome.control.l2_norm(),
                min_state=float(outcome.trajectory.minima.min()),
                end_defect=outcome.end_defect,
            ),
        )
        logger.debug(
            "%s step %s at t=%.4g: defect %.3e, |U|=%.3e",
            kind,
            index,
            t,
            outcome.defect,
            diagnostics[-1].control_norm,
        )
        state = outcome.final
        t = plan.wait_time + len(diagnostics) * plan.tau

    trajectory = TrajectoryRecord.join(records)
    control = ControlSignal.concatenate(controls)
    target_end = free_state_at(spec, yf0, plan.terminal_time)
    terminal_error = (trajectory.final - target_end).l2_norm()
    constraint = monitor_constraint(trajectory, plan.floor, certify_tol)
    notes = []
    if constraint.violated:
        notes.append(f"state dropped to {constraint.worst_minimum:.6g} below the floor {plan.floor}")
    result = StaircaseResult(
        plan=plan,
        trajectory=trajectory,
        control=control,
        constraint=constraint,
        terminal_error=terminal_error,
        accept_tol=accept_tol,
        phases=tuple(phases),
        diagnostics=tuple(diagnostics),
        transformed_minimum=transformed_minimum(spec, trajectory, grid_points),
        notes=tuple(notes),
    )
    logger.info(
        "Identity staircase done: terminal error %.3e, min state %.6g, feasible=%s",
        terminal_error,
        constraint.worst_minimum,
        result.feasible,
    )
    return result
