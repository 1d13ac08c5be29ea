from __future__ import annotations

from collections.abc import Callable
from collections.abc import Sequence
from dataclasses import dataclass
from dataclasses import replace
from enum import StrEnum

import numpy as np

from staircase_toolkit.exceptions import StructuralError
from staircase_toolkit.spectral_core.models import ControlCoupling
from staircase_toolkit.spectral_core.models import NeumannBasis


class Envelope(StrEnum):
    NONE = "none"
    BUMP = "bump"
    PLATEAU = "plateau"


class GramianRule(StrEnum):
    SIMPSON = "simpson"
    INTEGRATOR = "integrator"


@dataclass(frozen=True, eq=False)
class ControlSignal:
    """Piecewise-constant control in the cosine basis restricted to omega.

    ``coefficients[k, q, c]`` is the value of mode q, channel c on the k-th
    step [t0 + k step, t0 + (k + 1) step), sampled at the step midpoint.
    """

    t0: float
    step: float
    coefficients: np.ndarray
    coupling: ControlCoupling
    envelope: Envelope = Envelope.NONE

    def __post_init__(self):
        coefficients = np.array(self.coefficients, dtype=float)
        if coefficients.ndim != 3:  # noqa: PLR2004
            msg = f"control coefficients must be (steps, modes, channels), got {coefficients.shape}"
            raise StructuralError(msg)
        if coefficients.shape[1] > self.coupling.mode_count:
            msg = (
                f"{coefficients.shape[1]} control modes exceed the "
                f"{self.coupling.mode_count} modes of the coupling"
            )
            raise StructuralError(msg)
        if not self.step > 0.0:
            msg = f"control step must be positive, got {self.step}"
            raise StructuralError(msg)
        if not np.all(np.isfinite(coefficients)):
            msg = "control coefficients contain non-finite values"
            raise StructuralError(msg)
        coefficients.setflags(write=False)
        object.__setattr__(self, "coefficients", coefficients)
        object.__setattr__(self, "t0", float(self.t0))
        object.__setattr__(self, "step", float(self.step))
        object.__setattr__(self, "envelope", Envelope(self.envelope))

    @classmethod
    def zeros(
        cls,
        t0: float,
        step: float,
        steps: int,
        control_modes: int,
        channels: int,
        coupling: ControlCoupling,
    ) -> ControlSignal:
        return cls(t0, step, np.zeros((steps, control_modes, channels)), coupling)

    @classmethod
    def sample(
        cls,
        func: Callable[[float], np.ndarray],
        t0: float,
        duration: float,
        steps: int,
        coupling: ControlCoupling,
    ) -> ControlSignal:
        """Sample ``func(t) -> (modes, channels)`` at the step midpoints."""
        step = duration / steps
        values = np.stack(
            [np.atleast_2d(func(t0 + (k + 0.5) * step)) for k in range(steps)],
        )
        return cls(t0, step, values, coupling)

    @classmethod
    def concatenate(cls, signals: Sequence[ControlSignal]) -> ControlSignal:
        """Join signals laid end to end; control modes are padded to the widest."""
        if not signals:
            msg = "nothing to concatenate"
            raise StructuralError(msg)
        first = signals[0]
        width = max(signal.control_modes for signal in signals)
        blocks = []
        expected_start = first.t0
        for signal in signals:
            if not np.isclose(signal.step, first.step, rtol=1e-12, atol=0.0):
                msg = f"control steps differ: {signal.step} and {first.step}"
                raise StructuralError(msg)
            if abs(signal.t0 - expected_start) > 1e-9 * max(1.0, abs(expected_start)):
                msg = f"control segment starts at {signal.t0}, expected {expected_start}"
                raise StructuralError(msg)
            if signal.channels != first.channels:
                msg = "control segments have different channel counts"
                raise StructuralError(msg)
            padded = np.zeros((signal.steps, width, signal.channels))
            padded[:, : signal.control_modes] = signal.coefficients
            blocks.append(padded)
            expected_start = signal.t_end
        envelopes = {signal.envelope for signal in signals}
        envelope = envelopes.pop() if len(envelopes) == 1 else Envelope.NONE
        return cls(first.t0, first.step, np.concatenate(blocks), first.coupling, envelope)

    @property
    def steps(self) -> int:
        return self.coefficients.shape[0]

    @property
    def control_modes(self) -> int:
        return self.coefficients.shape[1]

    @property
    def channels(self) -> int:
        return self.coefficients.shape[2]

    @property
    def duration(self) -> float:
        return self.steps * self.step

    @property
    def t_end(self) -> float:
        return self.t0 + self.duration

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.step * np.arange(self.steps + 1)

    @property
    def midpoints(self) -> np.ndarray:
        return self.t0 + self.step * (np.arange(self.steps) + 0.5)

    def gram(self) -> np.ndarray:
        return self.coupling.matrix[: self.control_modes, : self.control_modes]

    def l2_norm(self) -> float:
        """Norm in L2(omega x (t0, t_end)) of the reconstructed field."""
        energy = np.einsum("kqc,qr,krc->", self.coefficients, self.gram(), self.coefficients)
        return float(np.sqrt(max(energy * self.step, 0.0)))

    def field_at(self, t: float, x) -> np.ndarray:
        """Control field on the points x at time t, shape (len(x), channels)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        index = int(np.floor((t - self.t0) / self.step))
        if index < 0 or index >= self.steps:
            return np.zeros((x.size, self.channels))
        basis = NeumannBasis(self.control_modes)
        values = basis.evaluate(x) @ self.coefficients[index]
        return values * self.coupling.omega.indicator(x)[:, None]

    def sup_norm(self, grid_points: int = 513) -> float:
        x = np.linspace(self.coupling.omega.a, self.coupling.omega.b, grid_points)
        values = np.einsum(
            "gq,kqc->kgc",
            NeumannBasis(self.control_modes).evaluate(x),
            self.coefficients,
        )
        return float(np.abs(values).max()) if values.size else 0.0

    def scaled(self, factors) -> ControlSignal:
        """Multiply step k by ``factors[k]``."""
        factors = np.asarray(factors, dtype=float).reshape(-1, 1, 1)
        return replace(self, coefficients=self.coefficients * factors)

    def retimed(self, t0: float) -> ControlSignal:
        return replace(self, t0=t0)

    def index_offset(self, t0: float, step: float) -> int:
        """Index of this signal's first step on the grid t0 + k step.

        Raises StructuralError unless the grids coincide.
        """
        if not np.isclose(step, self.step, rtol=1e-9, atol=0.0):
            msg = f"control step {self.step} does not match the evolution step {step}"
            raise StructuralError(msg)
        offset = (self.t0 - t0) / step
        rounded = round(offset)
        if abs(offset - rounded) > 1e-6:
            msg = f"control starts at {self.t0}, off the evolution grid from {t0}"
            raise StructuralError(msg)
        return int(rounded)


@dataclass(frozen=True, eq=False)
class GramianOperator:
    """Controllability Gramian of the first ``state_modes`` modes.

    Rows and columns are ordered p * n + i for mode p and component i.
    """

    matrix: np.ndarray
    horizon: float
    state_modes: int
    rule: GramianRule
    envelope: Envelope
    smallest_eigenvalue: float
    weakest_direction: np.ndarray

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def as_dict(self) -> dict:
        return {
            "horizon": self.horizon,
            "state_modes": self.state_modes,
            "rule": str(self.rule),
            "envelope": str(self.envelope),
            "dimension": self.dimension,
            "smallest_eigenvalue": self.smallest_eigenvalue,
        }


@dataclass(frozen=True)
class CostReport:
    horizon: float
    control_norm: float
    initial_defect: float
    ratio: float
    controlled_defect: float
    tail_defect: float
    gramian_floor: float
    slope: float | None = None
    baseline_defect: float | None = None
    baseline_norm: float | None = None

    def as_dict(self) -> dict:
        return {
            "horizon": self.horizon,
            "control_norm": self.control_norm,
            "initial_defect": self.initial_defect,
            "ratio": self.ratio,
            "controlled_defect": self.controlled_defect,
            "tail_defect": self.tail_defect,
            "gramian_floor": self.gramian_floor,
            "slope": self.slope,
            "baseline_defect": self.baseline_defect,
            "baseline_norm": self.baseline_norm,
        }
