from __future__ import annotations

from dataclasses import dataclass
from dataclasses import field
from dataclasses import replace
from enum import StrEnum

import numpy as np

from staircase_toolkit.exceptions import StructuralError


class BoundaryCondition(StrEnum):
    NEUMANN = "neumann"
    # Only the Sturm-Liouville probe of minimal_time uses Dirichlet-type modes.
    DIRICHLET = "dirichlet"


@dataclass(frozen=True)
class ControlWindow:
    """Open control interval (a, b) inside (0, 1)."""

    a: float
    b: float

    def __post_init__(self):
        a, b = float(self.a), float(self.b)
        if not (0.0 <= a < b <= 1.0):
            msg = f"control window must satisfy 0 <= a < b <= 1, got ({a}, {b})"
            raise StructuralError(msg)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def length(self) -> float:
        return self.b - self.a

    @property
    def is_interior(self) -> bool:
        return self.a > 0.0 and self.b < 1.0

    def indicator(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return ((x > self.a) & (x < self.b)).astype(float)

    def complement_gaps(self) -> list[tuple[float, float]]:
        """Intervals of (0, 1) outside the closed window, longest first."""
        gaps = [(0.0, self.a), (self.b, 1.0)]
        gaps = [gap for gap in gaps if gap[1] - gap[0] > 0.0]
        return sorted(gaps, key=lambda gap: gap[1] - gap[0], reverse=True)


def _frozen_array(values, name: str) -> np.ndarray:
    array = np.array(values, dtype=float)
    if not np.all(np.isfinite(array)):
        msg = f"{name} has non-finite entries"
        raise StructuralError(msg)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class SystemSpec:
    """Data of the coupled system dY/dt - D Y_xx = A Y + B U 1_omega on (0, 1)."""

    D: np.ndarray
    A: np.ndarray
    B: np.ndarray
    omega: ControlWindow = field(default_factory=lambda: ControlWindow(0.0, 1.0))
    bc: BoundaryCondition = BoundaryCondition.NEUMANN

    def __post_init__(self):
        D = _frozen_array(self.D, "D")
        A = _frozen_array(self.A, "A")
        B = _frozen_array(self.B, "B")
        if B.ndim == 1:
            B = B.reshape(-1, 1)
            B.setflags(write=False)
        if D.ndim != 2 or D.shape[0] != D.shape[1] or D.shape[0] < 1:  # noqa: PLR2004
            msg = f"D must be a non-empty square matrix, got shape {D.shape}"
            raise StructuralError(msg)
        n = D.shape[0]
        if A.shape != (n, n):
            msg = f"A must have shape {(n, n)}, got {A.shape}"
            raise StructuralError(msg)
        if B.ndim != 2 or B.shape[0] != n or B.shape[1] < 1:  # noqa: PLR2004
            msg = f"B must have shape ({n}, m) with m >= 1, got {B.shape}"
            raise StructuralError(msg)
        omega = self.omega
        if not isinstance(omega, ControlWindow):
            omega = ControlWindow(*omega)
        object.__setattr__(self, "D", D)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "bc", BoundaryCondition(self.bc))

    @property
    def n(self) -> int:
        return self.D.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    def shifted(self, rate: float) -> SystemSpec:
        """Same system with A replaced by A - rate * I."""
        return replace(self, A=self.A - rate * np.eye(self.n))

    def with_coupling(self, A) -> SystemSpec:
        return replace(self, A=A)

    def require_neumann(self):
        if self.bc is not BoundaryCondition.NEUMANN:
            msg = f"operation needs Neumann boundary conditions, got {self.bc}"
            raise StructuralError(msg)


@dataclass(frozen=True)
class StructureReport:
    is_elliptic: bool
    ellipticity: float
    is_diagonal_D: bool  # noqa: N815
    is_scalar_D: bool  # noqa: N815
    is_quasipositive_A: bool  # noqa: N815
    A_spectrum: tuple[complex, ...]  # noqa: N815
    eigenvalues_nonneg_real: bool
    tol: float

    def as_dict(self) -> dict:
        return {
            "is_elliptic": self.is_elliptic,
            "ellipticity": self.ellipticity,
            "is_diagonal_D": self.is_diagonal_D,
            "is_scalar_D": self.is_scalar_D,
            "is_quasipositive_A": self.is_quasipositive_A,
            "A_spectrum": [[z.real, z.imag] for z in self.A_spectrum],
            "eigenvalues_nonneg_real": self.eigenvalues_nonneg_real,
            "tol": self.tol,
        }


@dataclass(frozen=True)
class KalmanVerdict:
    p_max: int
    satisfied_up_to_p_max: bool
    failed_at: int | None
    ranks: tuple[int, ...]
    # Only set when D is scalar: rank [A | B], which then decides every mode.
    reduced_rank: int | None = None
    exhaustive: bool = False

    def as_dict(self) -> dict:
        return {
            "p_max": self.p_max,
            "satisfied_up_to_p_max": self.satisfied_up_to_p_max,
            "failed_at": self.failed_at,
            "reduced_rank": self.reduced_rank,
            "exhaustive": self.exhaustive,
            "min_rank": min(self.ranks) if self.ranks else None,
        }
