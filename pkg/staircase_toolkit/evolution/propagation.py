"""Exact per-mode propagation of free and controlled runs."""

import logging
from typing import TYPE_CHECKING

import numpy as np

from staircase_toolkit.exceptions import StructuralError
from staircase_toolkit.spectral_core.models import SpectralState
from staircase_toolkit.spectral_core.operations import sup_norm_on_grid
from staircase_toolkit.system_model.models import SystemSpec

from .models import ModeBlockDynamics
from .models import TrajectoryRecord

if TYPE_CHECKING:
    from staircase_toolkit.hum_control.models import ControlSignal

logger = logging.getLogger(__name__)


def _check_horizon(T: float, steps: int):
    if not T > 0.0:
        msg = f"horizon must be positive, got {T}"
        raise StructuralError(msg)
    if steps < 1:
        msg = f"steps must be at least 1, got {steps}"
        raise StructuralError(msg)


def _check_state(spec: SystemSpec, state0: SpectralState):
    spec.require_neumann()
    if state0.components != spec.n:
        msg = f"state has {state0.components} components, the system {spec.n}"
        raise StructuralError(msg)


def propagate(
    dynamics: ModeBlockDynamics,
    initial: np.ndarray,
    steps: int,
    forcing: np.ndarray | None = None,
) -> np.ndarray:
    """Coefficient stack (steps + 1, modes, n).

    ``forcing[k]`` is the (modes, n) source held constant on step k.
    """
    propagators = dynamics.propagators
    weights = dynamics.source_weights
    coefficients = np.empty((steps + 1, *initial.shape))
    coefficients[0] = initial
    current = initial
    for k in range(steps):
        current = np.einsum("pij,pj->pi", propagators, current)
        if forcing is not None:
            current = current + np.einsum("pij,pj->pi", weights, forcing[k])
        coefficients[k + 1] = current
    return coefficients


def free_evolve(
    spec: SystemSpec,
    state0: SpectralState,
    T: float,
    steps: int,
    t0: float = 0.0,
    grid_points: int | None = None,
) -> TrajectoryRecord:
    _check_horizon(T, steps)
    _check_state(spec, state0)
    dynamics = ModeBlockDynamics(spec, state0.mode_count, T / steps)
    coefficients = propagate(dynamics, state0.coefficients, steps)
    times = t0 + (T / steps) * np.arange(steps + 1)
    return TrajectoryRecord.from_coefficients(times, coefficients, grid_points)


def control_forcing(
    spec: SystemSpec,
    control: "ControlSignal",
    t0: float,
    step: float,
    steps: int,
) -> np.ndarray:
    """Source B u coupled through omega, per evolution step: (steps, modes, n).

    The control vanishes outside its own time support.
    """
    if control.channels != spec.m:
        msg = f"control has {control.channels} channels, the system {spec.m}"
        raise StructuralError(msg)
    offset = control.index_offset(t0, step)
    coupling = control.coupling.leading(control.control_modes)
    forcing = np.zeros((steps, control.coupling.mode_count, spec.n))
    first, last = max(offset, 0), min(offset + control.steps, steps)
    if first < last:
        window = control.coefficients[first - offset : last - offset]
        forcing[first:last] = np.einsum("pq,kqc,ic->kpi", coupling, window, spec.B)
    return forcing


def controlled_evolve(
    spec: SystemSpec,
    state0: SpectralState,
    control: "ControlSignal",
    T: float,
    steps: int,
    t0: float = 0.0,
    grid_points: int | None = None,
) -> TrajectoryRecord:
    _check_horizon(T, steps)
    _check_state(spec, state0)
    if control.coupling.mode_count != state0.mode_count:
        msg = (
            f"control coupling has {control.coupling.mode_count} modes, "
            f"the state {state0.mode_count}"
        )
        raise StructuralError(msg)
    step = T / steps
    forcing = control_forcing(spec, control, t0, step, steps)
    dynamics = ModeBlockDynamics(spec, state0.mode_count, step)
    coefficients = propagate(dynamics, state0.coefficients, steps, forcing)
    times = t0 + step * np.arange(steps + 1)
    return TrajectoryRecord.from_coefficients(times, coefficients, grid_points)


def empirical_response_ratio(
    controlled: TrajectoryRecord,
    free: TrajectoryRecord,
    control: "ControlSignal",
    grid_points: int | None = None,
) -> float:
    """max_t sup_x |Y - Y_free| divided by sup |U|; no claim on the true constant."""
    control_size = control.sup_norm()
    if control_size == 0.0:
        return 0.0
    gap = sup_norm_on_grid(controlled.coefficients - free.coefficients, grid_points)
    ratio = float(gap.max()) / control_size
    logger.debug("Empirical response ratio %.6e", ratio)
    return ratio
