from __future__ import annotations

from dataclasses import dataclass
from dataclasses import field
from dataclasses import replace
from enum import StrEnum

import numpy as np

from staircase_toolkit.constants import FEASIBILITY_AUDIT_FACTOR
from staircase_toolkit.constants import FEASIBILITY_KNOTS
from staircase_toolkit.constants import FEASIBILITY_SPACE_POINTS
from staircase_toolkit.exceptions import StructuralError
from staircase_toolkit.hum_control.models import ControlSignal
from staircase_toolkit.spectral_core.models import SpectralState
from staircase_toolkit.system_model.models import SystemSpec


class ObstructionVerdict(StrEnum):
    OBSTRUCTED = "obstructed"
    NOT_OBSTRUCTED = "not_obstructed"
    NOT_APPLICABLE = "not_applicable"


class FeasibilityVerdict(StrEnum):
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"
    INDETERMINATE = "indeterminate"


class SolverMethod(StrEnum):
    ACTIVE_SET = "active_set"
    NESTEROV = "nesterov"


@dataclass(frozen=True)
class MassObstruction:
    """Mass bounds for a two-component system whose total mass is conserved.

    ``lower_bound`` bounds the first component's mass of any controlled run
    from below, ``upper_bound`` bounds the target's from above.
    """

    verdict: ObstructionVerdict
    lower_bound: float | None = None
    upper_bound: float | None = None
    target_mass: float | None = None
    horizon: float | None = None
    reason: str = ""

    @property
    def obstructed(self) -> bool:
        return self.verdict is ObstructionVerdict.OBSTRUCTED

    @property
    def reachable_mass_interval(self) -> tuple[float, float] | None:
        if self.lower_bound is None:
            return None
        return (self.lower_bound, float("inf"))

    def as_dict(self) -> dict:
        return {
            "verdict": str(self.verdict),
            "lower_bound": self.lower_bound,
            "upper_bound": self.upper_bound,
            "target_mass": self.target_mass,
            "horizon": self.horizon,
            "reason": self.reason,
        }


@dataclass(frozen=True, eq=False)
class SturmLiouvilleBasis:
    """Modes p_n(r) = cos(mu_n r) of p'' + a p = -lambda p on [0, 1].

    p_n'(0) = 0 and p_n(1) = 0, so mu_n = (n - 1/2) pi. With the measure of
    the unit sphere in one dimension equal to 2, the cosines are already
    normalized: 2 * integral of p_n^2 over (0, 1) is 1.
    """

    potential: float
    mu: np.ndarray
    eigenvalues: np.ndarray
    alpha: np.ndarray
    sphere_measure: float = 2.0

    @property
    def size(self) -> int:
        return self.mu.size

    @property
    def indices(self) -> np.ndarray:
        return np.arange(1, self.size + 1)

    @property
    def identity_values(self) -> np.ndarray:
        """sphere_measure * alpha_n^2 / (2 (lambda_n + a)), equal to 1 for every mode."""
        return self.sphere_measure * self.alpha**2 / (2.0 * (self.eigenvalues + self.potential))

    def evaluate(self, r) -> np.ndarray:
        """Mode values with shape (len(r), size)."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        return np.cos(np.outer(np.abs(r), self.mu))

    def rows(self) -> list[dict]:
        return [
            {"n": int(n), "mu": mu, "eigenvalue": lam, "alpha": alpha, "identity": value}
            for n, mu, lam, alpha, value in zip(
                self.indices, self.mu, self.eigenvalues, self.alpha, self.identity_values, strict=True,
            )
        ]


@dataclass(frozen=True)
class BallRestriction:
    """The interval (center - radius, center + radius) inside (0, 1), seen in r = (x - center) / radius."""

    center: float
    radius: float

    def __post_init__(self):
        if not self.radius > 0.0:
            msg = f"probe radius must be positive, got {self.radius}"
            raise StructuralError(msg)
        if self.center - self.radius < -1e-12 or self.center + self.radius > 1.0 + 1e-12:
            msg = f"probe ball ({self.center - self.radius}, {self.center + self.radius}) leaves (0, 1)"
            raise StructuralError(msg)

    def points(self, r) -> np.ndarray:
        return self.center + self.radius * np.asarray(r, dtype=float)


@dataclass(frozen=True, eq=False)
class GammaCertificate:
    ratios: np.ndarray
    spread: float
    common_value: float | None
    is_constant: bool
    tol: float

    @property
    def certifies_positive_time(self) -> bool:
        """A zero minimal time would force every ratio to one common value, and that value to be 0."""
        if not self.is_constant:
            return True
        return abs(self.common_value) > self.tol

    def as_dict(self) -> dict:
        return {
            "gamma_candidates": self.ratios.tolist(),
            "spread": self.spread,
            "common_value": self.common_value,
            "is_constant": self.is_constant,
            "certifies_positive_time": self.certifies_positive_time,
            "tol": self.tol,
        }


@dataclass(frozen=True, eq=False)
class FeasibilityProblem:
    """Reach the free trajectory from ``target_start`` at ``horizon`` keeping Y >= -floor.

    An infinite ``floor`` drops the state constraint.
    """

    spec: SystemSpec
    initial: SpectralState
    target_start: SpectralState
    horizon: float
    floor: float = float("inf")
    knots: int = FEASIBILITY_KNOTS
    control_modes: int = 2
    space_points: int = FEASIBILITY_SPACE_POINTS
    audit_factor: int = FEASIBILITY_AUDIT_FACTOR
    method: SolverMethod = SolverMethod.ACTIVE_SET

    def __post_init__(self):
        if not self.horizon > 0.0:
            msg = f"horizon must be positive, got {self.horizon}"
            raise StructuralError(msg)
        if self.knots < 1 or self.space_points < 2 or self.audit_factor < 1:  # noqa: PLR2004
            msg = "knots, space points and audit factor must be positive"
            raise StructuralError(msg)
        if self.initial.coefficients.shape != self.target_start.coefficients.shape:
            msg = "initial and target data have different shapes"
            raise StructuralError(msg)
        if self.initial.components != self.spec.n:
            msg = f"data have {self.initial.components} components, the system {self.spec.n}"
            raise StructuralError(msg)
        if not 0 <= self.control_modes < self.initial.mode_count:
            msg = f"control_modes must lie in [0, {self.initial.mode_count - 1}]"
            raise StructuralError(msg)
        object.__setattr__(self, "method", SolverMethod(self.method))

    @property
    def constrained(self) -> bool:
        return np.isfinite(self.floor)

    def with_horizon(self, horizon: float) -> FeasibilityProblem:
        return replace(self, horizon=horizon)

    def refined(self) -> FeasibilityProblem:
        """Same problem with twice the modes and twice the time knots."""
        modes = 2 * self.initial.mode_count
        return replace(
            self,
            initial=self.initial.truncated(modes),
            target_start=self.target_start.truncated(modes),
            knots=2 * self.knots,
        )


@dataclass(frozen=True, eq=False)
class FeasibilityResult:
    verdict: FeasibilityVerdict
    horizon: float
    min_state: float
    endpoint_defect: float
    control: ControlSignal | None = None
    iterations: int = 0
    tightening_rounds: int = 0
    message: str = ""

    @property
    def feasible(self) -> bool:
        return self.verdict is FeasibilityVerdict.FEASIBLE

    @property
    def control_norm(self) -> float | None:
        return None if self.control is None else self.control.l2_norm()

    def as_dict(self) -> dict:
        return {
            "verdict": str(self.verdict),
            "horizon": self.horizon,
            "min_state": self.min_state,
            "endpoint_defect": self.endpoint_defect,
            "control_norm": self.control_norm,
            "iterations": self.iterations,
            "tightening_rounds": self.tightening_rounds,
            "message": self.message,
        }


@dataclass(frozen=True)
class OracleCall:
    horizon: float
    verdict: FeasibilityVerdict
    min_state: float
    endpoint_defect: float
    control_norm: float | None

    @classmethod
    def from_result(cls, result: FeasibilityResult) -> OracleCall:
        return cls(
            horizon=result.horizon,
            verdict=result.verdict,
            min_state=result.min_state,
            endpoint_defect=result.endpoint_defect,
            control_norm=result.control_norm,
        )

    def row(self) -> dict:
        return {
            "horizon": self.horizon,
            "status": str(self.verdict),
            "min_state": self.min_state,
            "endpoint_defect": self.endpoint_defect,
            "control_norm": self.control_norm,
        }


@dataclass(frozen=True)
class BisectionResult:
    estimate: float
    bracket: tuple[float, float]
    calls: tuple[OracleCall, ...] = field(default_factory=tuple)
    # (feasible horizon, larger infeasible horizon) pairs seen among the calls
    non_monotone: tuple[tuple[float, float], ...] = field(default_factory=tuple)

    @property
    def width(self) -> float:
        return self.bracket[1] - self.bracket[0]

    def as_dict(self) -> dict:
        return {
            "T_bar_estimate": self.estimate,
            "bracket": list(self.bracket),
            "width": self.width,
            "oracle_calls": len(self.calls),
            "non_monotone": [list(pair) for pair in self.non_monotone],
        }
