from __future__ import annotations

from dataclasses import dataclass
from dataclasses import field
from dataclasses import replace
from functools import cached_property

import numpy as np
import scipy.linalg

from staircase_toolkit.exceptions import StructuralError
from staircase_toolkit.spectral_core.models import NeumannBasis
from staircase_toolkit.spectral_core.models import SpectralState
from staircase_toolkit.spectral_core.operations import minima_on_grid
from staircase_toolkit.system_model.models import SystemSpec


@dataclass(frozen=True)
class ModeBlockDynamics:
    """Per-mode matrices M_p = -lambda_p D + A and their step exponentials."""

    spec: SystemSpec
    mode_count: int
    step: float

    @cached_property
    def matrices(self) -> np.ndarray:
        eigenvalues = NeumannBasis(self.mode_count).eigenvalues
        return -eigenvalues[:, None, None] * self.spec.D + self.spec.A

    @cached_property
    def _augmented_exponential(self) -> np.ndarray:
        # expm([[M h, I], [0, 0]]) = [[e^(M h), phi1(M h)], [0, I]]
        n = self.spec.n
        augmented = np.zeros((self.mode_count, 2 * n, 2 * n))
        augmented[:, :n, :n] = self.matrices * self.step
        augmented[:, :n, n:] = np.eye(n)
        return scipy.linalg.expm(augmented)

    @property
    def propagators(self) -> np.ndarray:
        """e^(M_p h), shape (modes, n, n)."""
        n = self.spec.n
        return self._augmented_exponential[:, :n, :n]

    @property
    def source_weights(self) -> np.ndarray:
        """h phi1(M_p h) = integral over (0, h) of e^(M_p (h - s)) ds."""
        n = self.spec.n
        return self.step * self._augmented_exponential[:, :n, n:]


@dataclass(frozen=True, eq=False)
class TrajectoryRecord:
    times: np.ndarray
    coefficients: np.ndarray
    minima: np.ndarray
    reference_distance: np.ndarray | None = None

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        if times.ndim != 1 or times.size < 1:
            msg = "a trajectory needs a one-dimensional, non-empty time grid"
            raise StructuralError(msg)
        if np.any(np.diff(times) <= 0.0):
            msg = "trajectory times must be strictly increasing"
            raise StructuralError(msg)
        if self.coefficients.shape[0] != times.size:
            msg = f"{self.coefficients.shape[0]} states for {times.size} times"
            raise StructuralError(msg)
        if not np.all(np.isfinite(self.coefficients)):
            msg = "trajectory states contain non-finite values"
            raise StructuralError(msg)
        object.__setattr__(self, "times", times)

    @classmethod
    def from_coefficients(
        cls,
        times,
        coefficients: np.ndarray,
        grid_points: int | None = None,
        reference: np.ndarray | None = None,
    ) -> TrajectoryRecord:
        coefficients = np.asarray(coefficients, dtype=float)
        distance = None
        if reference is not None:
            distance = np.linalg.norm(coefficients - reference, axis=(1, 2))
        return cls(
            times=times,
            coefficients=coefficients,
            minima=minima_on_grid(coefficients, grid_points),
            reference_distance=distance,
        )

    @property
    def steps(self) -> int:
        return self.times.size - 1

    @property
    def mode_count(self) -> int:
        return self.coefficients.shape[1]

    @property
    def components(self) -> int:
        return self.coefficients.shape[2]

    @property
    def initial(self) -> SpectralState:
        return self.state_at(0)

    @property
    def final(self) -> SpectralState:
        return self.state_at(-1)

    def state_at(self, index: int) -> SpectralState:
        return SpectralState(self.coefficients[index])

    def l2_norms(self) -> np.ndarray:
        return np.linalg.norm(self.coefficients, axis=(1, 2))

    def masses(self) -> np.ndarray:
        """Integral of each component over (0, 1), per time."""
        return self.coefficients[:, 0, :].copy()

    def tracking(self, reference: TrajectoryRecord) -> TrajectoryRecord:
        if not np.allclose(reference.times, self.times, rtol=0.0, atol=1e-9):
            msg = "reference trajectory is recorded on a different time grid"
            raise StructuralError(msg)
        distance = np.linalg.norm(self.coefficients - reference.coefficients, axis=(1, 2))
        return replace(self, reference_distance=distance)

    def rescaled(self, factors) -> TrajectoryRecord:
        """Multiply the state at each time by a positive factor."""
        factors = np.asarray(factors, dtype=float)
        distance = self.reference_distance
        if distance is not None:
            distance = distance * factors
        return TrajectoryRecord(
            times=self.times,
            coefficients=self.coefficients * factors[:, None, None],
            minima=self.minima * factors[:, None],
            reference_distance=distance,
        )

    def shifted(self, offset: float) -> TrajectoryRecord:
        return replace(self, times=self.times + offset)

    def chain(self, other: TrajectoryRecord) -> TrajectoryRecord:
        """Append a run that starts where this one ends."""
        return TrajectoryRecord.join([self, other])

    @classmethod
    def join(cls, records: list[TrajectoryRecord]) -> TrajectoryRecord:
        """Concatenate consecutive runs, dropping each repeated start point."""
        if not records:
            msg = "nothing to join"
            raise StructuralError(msg)
        first = records[0]
        for previous, current in zip(records, records[1:], strict=False):
            end = previous.times[-1]
            if abs(current.times[0] - end) > 1e-9 * max(1.0, abs(end)):
                msg = f"trajectory starting at {current.times[0]} does not continue one ending at {end}"
                raise StructuralError(msg)
            if current.coefficients.shape[1:] != first.coefficients.shape[1:]:
                msg = "joined trajectories have different mode or component counts"
                raise StructuralError(msg)
        heads = [slice(None)] + [slice(1, None)] * (len(records) - 1)
        distance = None
        if all(record.reference_distance is not None for record in records):
            distance = np.concatenate(
                [record.reference_distance[head] for record, head in zip(records, heads, strict=True)],
            )
        return cls(
            times=np.concatenate([r.times[head] for r, head in zip(records, heads, strict=True)]),
            coefficients=np.concatenate(
                [r.coefficients[head] for r, head in zip(records, heads, strict=True)],
            ),
            minima=np.concatenate([r.minima[head] for r, head in zip(records, heads, strict=True)]),
            reference_distance=distance,
        )


@dataclass(frozen=True)
class ConstraintReport:
    floor: float
    certify_tol: float
    violated: bool
    worst_minimum: float
    first_violation_time: float | None = None
    component_minima: tuple[float, ...] = field(default_factory=tuple)

    def as_dict(self) -> dict:
        return {
            "floor": self.floor,
            "certify_tol": self.certify_tol,
            "violated": self.violated,
            "worst_minimum": self.worst_minimum,
            "first_violation_time": self.first_violation_time,
            "component_minima": list(self.component_minima),
        }


@dataclass(frozen=True, eq=False)
class GridTrajectory:
    """Finite-difference samples, values[k, i, c] at times[k] and x[i]."""

    times: np.ndarray
    x: np.ndarray
    values: np.ndarray

    @property
    def final(self) -> np.ndarray:
        return self.values[-1]

    def minima(self) -> np.ndarray:
        return self.values.min(axis=1)
