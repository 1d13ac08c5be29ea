"""Independent finite-difference solver used to cross-check the spectral runs.

Second-order central differences with mirrored ghost points for the
Neumann condition, Heun (explicit RK2) in time.
"""

import logging
import math
from typing import TYPE_CHECKING

import numpy as np

from staircase_toolkit.exceptions import ConfigurationError
from staircase_toolkit.exceptions import StructuralError
from staircase_toolkit.system_model.models import SystemSpec

from .models import GridTrajectory

if TYPE_CHECKING:
    from staircase_toolkit.hum_control.models import ControlSignal

logger = logging.getLogger(__name__)


def stability_limit(spec: SystemSpec, grid_points: int) -> float:
    dx = 1.0 / (grid_points - 1)
    return dx**2 / (2.0 * float(np.max(np.diag(spec.D))))


def stable_step_count(spec: SystemSpec, T: float, grid_points: int) -> int:
    return max(1, math.ceil(T / stability_limit(spec, grid_points)))


def _laplacian(values: np.ndarray, dx: float) -> np.ndarray:
    padded = np.concatenate([values[1:2], values, values[-2:-1]])
    return (padded[2:] - 2.0 * values + padded[:-2]) / dx**2


def fd_oracle_evolve(
    spec: SystemSpec,
    samples0,
    T: float,
    grid_points: int,
    steps: int,
    control: "ControlSignal | None" = None,
    t0: float = 0.0,
    record_every: int = 1,
) -> GridTrajectory:
    """Evolve grid samples of shape (grid_points, n) over [t0, t0 + T]."""
    spec.require_neumann()
    values = np.array(samples0, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    if values.shape != (grid_points, spec.n):
        msg = f"initial samples must have shape {(grid_points, spec.n)}, got {values.shape}"
        raise StructuralError(msg)
    step = T / steps
    limit = stability_limit(spec, grid_points)
    if step > limit * (1.0 + 1e-12):
        msg = (
            f"explicit step {step:.3e} exceeds the stability limit {limit:.3e}; "
            f"use at least {stable_step_count(spec, T, grid_points)} steps"
        )
        raise ConfigurationError(msg)

    x = np.linspace(0.0, 1.0, grid_points)
    dx = x[1]
    D_t, A_t, B_t = spec.D.T, spec.A.T, spec.B.T

    def rate(current: np.ndarray, source: np.ndarray) -> np.ndarray:
        return _laplacian(current, dx) @ D_t + current @ A_t + source

    times = [t0]
    recorded = [values.copy()]
    source = np.zeros_like(values)
    for k in range(steps):
        t = t0 + k * step
        if control is not None:
            # the control is piecewise constant; sample it inside the step
            source = control.field_at(t + 0.5 * step, x) @ B_t
        first = rate(values, source)
        second = rate(values + step * first, source)
        values = values + 0.5 * step * (first + second)
        if (k + 1) % record_every == 0 or k + 1 == steps:
            times.append(t0 + (k + 1) * step)
            recorded.append(values.copy())
    logger.debug("Finite-difference run: %d steps of %.3e on %d points", steps, step, grid_points)
    return GridTrajectory(times=np.array(times), x=x, values=np.stack(recorded))
