from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from staircase_toolkit.exceptions import StructuralError
from staircase_toolkit.system_model.models import ControlWindow


@dataclass(frozen=True)
class NeumannBasis:
    """Cosine eigenbasis of -d2/dx2 on (0, 1) with Neumann conditions.

    e_0 = 1 and e_p(x) = sqrt(2) cos(p pi x), with eigenvalues (p pi)^2.
    """

    mode_count: int

    def __post_init__(self):
        if self.mode_count < 1:
            msg = f"mode_count must be positive, got {self.mode_count}"
            raise StructuralError(msg)

    @property
    def highest_mode(self) -> int:
        return self.mode_count - 1

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        return (np.arange(self.mode_count) * np.pi) ** 2

    def evaluate(self, x) -> np.ndarray:
        """Basis values with shape (len(x), mode_count)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        values = np.sqrt(2.0) * np.cos(np.pi * np.outer(x, np.arange(self.mode_count)))
        values[:, 0] = 1.0
        return values

    def default_grid_points(self) -> int:
        # eight points per shortest half-wavelength, endpoints included
        return max(4 * self.highest_mode, 8) + 1

    def grid(self, points: int | None = None) -> np.ndarray:
        return np.linspace(0.0, 1.0, points or self.default_grid_points())


@dataclass(frozen=True, eq=False)
class SpectralState:
    """Mode coefficients of an n-component field, shape (mode_count, n)."""

    coefficients: np.ndarray

    def __post_init__(self):
        coefficients = np.array(self.coefficients, dtype=float)
        if coefficients.ndim == 1:
            coefficients = coefficients.reshape(-1, 1)
        if coefficients.ndim != 2 or 0 in coefficients.shape:  # noqa: PLR2004
            msg = f"coefficients must be a non-empty 2-d array, got {coefficients.shape}"
            raise StructuralError(msg)
        if not np.all(np.isfinite(coefficients)):
            msg = "coefficients contain non-finite values"
            raise StructuralError(msg)
        coefficients.setflags(write=False)
        object.__setattr__(self, "coefficients", coefficients)

    @classmethod
    def zeros(cls, mode_count: int, components: int) -> SpectralState:
        return cls(np.zeros((mode_count, components)))

    @classmethod
    def constant(cls, values, mode_count: int) -> SpectralState:
        values = np.atleast_1d(np.asarray(values, dtype=float))
        coefficients = np.zeros((mode_count, values.size))
        coefficients[0] = values
        return cls(coefficients)

    @classmethod
    def from_modes(cls, modes, mode_count: int) -> SpectralState:
        """Pad a short list of leading mode rows with zeros."""
        modes = np.asarray(modes, dtype=float)
        if modes.ndim == 1:
            modes = modes.reshape(1, -1)
        if modes.shape[0] > mode_count:
            msg = f"{modes.shape[0]} mode rows do not fit in {mode_count} modes"
            raise StructuralError(msg)
        coefficients = np.zeros((mode_count, modes.shape[1]))
        coefficients[: modes.shape[0]] = modes
        return cls(coefficients)

    @property
    def mode_count(self) -> int:
        return self.coefficients.shape[0]

    @property
    def components(self) -> int:
        return self.coefficients.shape[1]

    @property
    def basis(self) -> NeumannBasis:
        return NeumannBasis(self.mode_count)

    @property
    def mean(self) -> np.ndarray:
        return self.coefficients[0].copy()

    def l2_norm(self) -> float:
        return float(np.linalg.norm(self.coefficients))

    def tail_norm(self, from_mode: int) -> float:
        return float(np.linalg.norm(self.coefficients[from_mode:]))

    def truncated(self, mode_count: int) -> SpectralState:
        if mode_count >= self.mode_count:
            return SpectralState.from_modes(self.coefficients, mode_count)
        return SpectralState(self.coefficients[:mode_count])

    def reconstruct(self, x) -> np.ndarray:
        """Field values with shape (len(x), components)."""
        return self.basis.evaluate(x) @ self.coefficients

    def _check_compatible(self, other: SpectralState):
        if self.coefficients.shape != other.coefficients.shape:
            msg = (
                f"incompatible states {self.coefficients.shape} "
                f"and {other.coefficients.shape}"
            )
            raise StructuralError(msg)

    def __add__(self, other: SpectralState) -> SpectralState:
        self._check_compatible(other)
        return SpectralState(self.coefficients + other.coefficients)

    def __sub__(self, other: SpectralState) -> SpectralState:
        self._check_compatible(other)
        return SpectralState(self.coefficients - other.coefficients)

    def __mul__(self, scalar: float) -> SpectralState:
        return SpectralState(float(scalar) * self.coefficients)

    __rmul__ = __mul__

    def __neg__(self) -> SpectralState:
        return SpectralState(-self.coefficients)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SpectralState):
            return NotImplemented
        return np.array_equal(self.coefficients, other.coefficients)

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True)
class ControlCoupling:
    """Gram matrix G[p, q] of the basis restricted to the control window."""

    omega: ControlWindow
    matrix: np.ndarray

    @property
    def mode_count(self) -> int:
        return self.matrix.shape[0]

    def leading(self, control_modes: int) -> np.ndarray:
        """Rows of all modes against the first control_modes columns."""
        return self.matrix[:, :control_modes]
