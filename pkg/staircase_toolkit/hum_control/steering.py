import logging
import warnings
from collections.abc import Sequence
from contextlib import contextmanager
from dataclasses import replace

import numpy as np

from staircase_toolkit.constants import GRAMIAN_FLOOR
from staircase_toolkit.constants import STEER_TOL
from staircase_toolkit.constants import STEPS_PER_TAU
from staircase_toolkit.evolution.models import TrajectoryRecord
from staircase_toolkit.evolution.propagation import controlled_evolve
from staircase_toolkit.evolution.propagation import free_evolve
from staircase_toolkit.exceptions import ConfigurationError
from staircase_toolkit.exceptions import ControlSynthesisError
from staircase_toolkit.exceptions import NearUncontrollableWarning
from staircase_toolkit.exceptions import NumericalFailure
from staircase_toolkit.exceptions import StructuralError
from staircase_toolkit.spectral_core.models import SpectralState
from staircase_toolkit.spectral_core.operations import coupling_matrix
from staircase_toolkit.system_model.models import SystemSpec

from .gramian import MinimalNormSteering
from .models import ControlSignal
from .models import CostReport
from .models import Envelope

logger = logging.getLogger(__name__)


@contextmanager
def near_uncontrollable_is_fatal():
    with warnings.catch_warnings():
        warnings.simplefilter("error", NearUncontrollableWarning)
        try:
            yield
        except NearUncontrollableWarning as exc:
            raise ControlSynthesisError(str(exc)) from exc


def free_state_at(spec: SystemSpec, start: SpectralState, elapsed: float) -> SpectralState:
    """Exact free state after ``elapsed``; the state itself when elapsed is 0."""
    if elapsed <= 0.0:
        return start
    return free_evolve(spec, start, elapsed, 1).final


def steer(
    spec: SystemSpec,
    state0: SpectralState,
    target: SpectralState,
    t0: float,
    tau: float,
    control_modes: int,
    *,
    steps: int = STEPS_PER_TAU,
    envelope: Envelope | str = Envelope.PLATEAU,
    reference_start: SpectralState | None = None,
    gramian_floor: float = GRAMIAN_FLOOR,
    steer_tol: float = STEER_TOL,
) -> tuple[ControlSignal, CostReport]:
    """Minimal-norm control taking state0 at t0 to ``target`` on modes 0..control_modes.

    Higher modes evolve under the control without being matched; their
    endpoint mismatch is reported as ``tail_defect``. The cost ratio is
    taken against ``reference_start`` when given, else against the free
    endpoint defect.
    """
    if target.coefficients.shape != state0.coefficients.shape:
        msg = f"target shape {target.coefficients.shape} differs from {state0.coefficients.shape}"
        raise StructuralError(msg)
    coupling = coupling_matrix(spec.omega, state0.basis)
    with near_uncontrollable_is_fatal():
        engine = MinimalNormSteering(
            spec, coupling, control_modes, tau, steps, envelope, gramian_floor,
        )
    matched = engine.state_modes
    free_end = free_evolve(spec, state0, tau, steps, t0).final
    defect = target.coefficients[:matched] - free_end.coefficients[:matched]
    control = engine.control_for(defect, t0)
    traj = controlled_evolve(spec, state0, control, tau, steps, t0)
    gap = target.coefficients - traj.final.coefficients
    controlled_defect = float(np.linalg.norm(gap[:matched]))
    if reference_start is not None:
        initial_defect = (state0 - reference_start).l2_norm()
    else:
        initial_defect = float(np.linalg.norm(defect))
    norm = control.l2_norm()
    report = CostReport(
        horizon=tau,
        control_norm=norm,
        initial_defect=initial_defect,
        ratio=norm / initial_defect if initial_defect > 0.0 else 0.0,
        controlled_defect=controlled_defect,
        tail_defect=float(np.linalg.norm(gap[matched:])),
        gramian_floor=engine.gramian.smallest_eigenvalue,
    )
    logger.info(
        "Steer over tau=%.4g on modes 0..%d: |U|=%.6e, endpoint defect %.3e, tail %.3e",
        tau,
        control_modes,
        norm,
        controlled_defect,
        report.tail_defect,
    )
    if controlled_defect > steer_tol:
        msg = f"steered endpoint misses the target by {controlled_defect:.3e} > {steer_tol:.1e}"
        raise ControlSynthesisError(msg)
    return control, report


def lr_steer(
    spec: SystemSpec,
    state0: SpectralState,
    target_traj: TrajectoryRecord,
    t0: float,
    total_T: float,
    stage_count: int,
    *,
    min_modes: int = 2,
    steps_per_stage: int = STEPS_PER_TAU,
    envelope: Envelope | str = Envelope.PLATEAU,
    gramian_floor: float = GRAMIAN_FLOOR,
) -> tuple[ControlSignal, CostReport]:
    """Alternate control and dissipation phases towards a free trajectory.

    Stage j spends its first half steering modes 0..min_modes * 2**j onto
    the target and its second half uncontrolled. A plain steer of the last
    stage's modes over the whole horizon, scaled down to the same control norm when it costs more,
    is reported alongside.
    """
    if stage_count < 1:
        msg = f"stage_count must be at least 1, got {stage_count}"
        raise ConfigurationError(msg)
    if abs(target_traj.times[0] - t0) > 1e-9 * max(1.0, abs(t0)):
        msg = f"target trajectory starts at {target_traj.times[0]}, not at {t0}"
        raise StructuralError(msg)
    half = max(1, (steps_per_stage + 1) // 2)
    stage_length = total_T / stage_count
    target_start = target_traj.initial
    coupling = coupling_matrix(spec.omega, state0.basis)
    state, start = state0, t0
    segments: list[ControlSignal] = []
    floors = []
    modes = min_modes
    for stage in range(stage_count):
        modes = min(min_modes * 2**stage, state0.mode_count - 1)
        with near_uncontrollable_is_fatal():
            engine = MinimalNormSteering(
                spec, coupling, modes, stage_length / 2, half, envelope, gramian_floor,
            )
        floors.append(engine.gramian.smallest_eigenvalue)
        middle = start + stage_length / 2
        target_mid = free_state_at(spec, target_start, middle - t0)
        free_end = free_evolve(spec, state, stage_length / 2, half, start).final
        defect = (target_mid.coefficients - free_end.coefficients)[: engine.state_modes]
        control = engine.control_for(defect, start)
        steered = controlled_evolve(spec, state, control, stage_length / 2, half, start)
        state = free_evolve(spec, steered.final, stage_length / 2, half, middle).final
        segments += [
            control,
            ControlSignal.zeros(middle, engine.step, half, engine.state_modes, spec.m, coupling),
        ]
        logger.debug("Stage %d: modes 0..%d, |U|=%.6e", stage, modes, control.l2_norm())
        start += stage_length

    control = ControlSignal.concatenate(segments)
    target_end = free_state_at(spec, target_start, total_T)
    gap = target_end.coefficients - state.coefficients
    norm = control.l2_norm()
    baseline_defect = baseline_norm = None
    try:
        baseline, _ = steer(
            spec,
            state0,
            target_end,
            t0,
            total_T,
            modes,
            steps=2 * half * stage_count,
            envelope=envelope,
            gramian_floor=gramian_floor,
            steer_tol=np.inf,
        )
    except NumericalFailure:
        logger.info("No plain steer baseline for modes 0..%d", modes)
    else:
        # Same cost budget as the alternating control.
        if baseline.l2_norm() > norm:
            baseline = replace(baseline, coefficients=baseline.coefficients * (norm / baseline.l2_norm()))
        reached = controlled_evolve(spec, state0, baseline, total_T, 2 * half * stage_count, t0).final
        baseline_norm = baseline.l2_norm()
        baseline_defect = (target_end - reached).l2_norm()
    initial_defect = (state0 - target_start).l2_norm()
    report = CostReport(
        horizon=total_T,
        control_norm=norm,
        initial_defect=initial_defect,
        ratio=norm / initial_defect if initial_defect > 0.0 else 0.0,
        controlled_defect=float(np.linalg.norm(gap[: modes + 1])),
        tail_defect=float(np.linalg.norm(gap[modes + 1 :])),
        gramian_floor=min(floors),
        baseline_defect=baseline_defect,
        baseline_norm=baseline_norm,
    )
    logger.info(
        "Alternating steer in %d stages: |U|=%.6e, terminal defect %.3e (plain steer %s)",
        stage_count,
        norm,
        np.hypot(report.controlled_defect, report.tail_defect),
        "n/a" if baseline_defect is None else f"{baseline_defect:.3e}",
    )
    return control, report


def cost_sweep(
    spec: SystemSpec,
    state0: SpectralState,
    target_start: SpectralState,
    taus: Sequence[float],
    control_modes: int,
    step_size: float,
    *,
    envelope: Envelope | str = Envelope.NONE,
    gramian_floor: float = GRAMIAN_FLOOR,
) -> list[CostReport]:
    """Steer state0 onto the free trajectory from target_start for each horizon.

    Each report carries the slope of log |U| against 1 / tau fitted over the
    whole sweep, or None with fewer than two horizons.
    """
    reports = []
    for tau in taus:
        steps = max(2, round(tau / step_size))
        _, report = steer(
            spec,
            state0,
            free_state_at(spec, target_start, tau),
            0.0,
            tau,
            control_modes,
            steps=steps,
            envelope=envelope,
            reference_start=target_start,
            gramian_floor=gramian_floor,
        )
        reports.append(report)
    if len(reports) < 2:  # noqa: PLR2004
        return reports
    inverse = 1.0 / np.array([report.horizon for report in reports])
    norms = np.array([report.control_norm for report in reports])
    if np.any(norms <= 0.0):
        return reports
    slope = float(np.polyfit(inverse, np.log(norms), 1)[0])
    logger.info("Cost sweep over %d horizons: log|U| vs 1/tau slope %.4g", len(reports), slope)
    return [replace(report, slope=slope) for report in reports]
