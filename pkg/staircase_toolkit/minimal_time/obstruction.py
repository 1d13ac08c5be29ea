"""Mass calculus ruling out exactly nonnegative control.

For two components with the control acting on the second one only, a
coupling with zero column sums keeps the total mass of a free run
constant. With A[0, 0] = 0 and A[0, 1] >= 0 the first component's mass
is nondecreasing along any run with y2 >= 0.
"""

import logging

import numpy as np
import scipy.linalg

from staircase_toolkit.constants import RANK_TOL
from staircase_toolkit.spectral_core.models import SpectralState
from staircase_toolkit.system_model.models import BoundaryCondition
from staircase_toolkit.system_model.models import SystemSpec

from .models import MassObstruction
from .models import ObstructionVerdict

logger = logging.getLogger(__name__)


def _pattern_mismatch(spec: SystemSpec, tol: float) -> str | None:
    if spec.bc is not BoundaryCondition.NEUMANN:
        return "masses are only tracked under Neumann conditions"
    if spec.n != 2:  # noqa: PLR2004
        return f"the mass calculus needs two components, got {spec.n}"
    A = spec.A
    scale = max(1.0, float(np.abs(A).max()))
    if np.any(np.abs(spec.B[0]) > tol):
        return "the control must act on the second component only"
    if abs(A[0, 0]) > tol * scale:
        return "the first component must not feed back on itself"
    if A[0, 1] < -tol * scale:
        return "the second component must feed the first with a nonnegative rate"
    if np.any(np.abs(A.sum(axis=0)) > tol * scale):
        return "the coupling must conserve the total mass of free runs"
    if A[1, 0] < -tol * scale:
        return "the coupling must be quasipositive"
    return None


def mass_obstruction(
    spec: SystemSpec,
    y0: SpectralState,
    yf0: SpectralState,
    T: float | None = None,
    tol: float = RANK_TOL,
) -> MassObstruction:
    """Compare the least reachable first-component mass with the target's.

    Without a horizon the target mass is bounded by the conserved total;
    with one it is computed exactly from the free mean dynamics.
    """
    reason = _pattern_mismatch(spec, tol)
    if reason is not None:
        logger.info("Mass obstruction not applicable: %s", reason)
        return MassObstruction(ObstructionVerdict.NOT_APPLICABLE, horizon=T, reason=reason)

    start_mean, target_mean = y0.mean, yf0.mean
    lower = float(start_mean[0])
    upper = float(target_mean.sum())
    target_mass = None
    if T is not None:
        target_mass = float((scipy.linalg.expm(T * spec.A) @ target_mean)[0])
        upper = min(upper, target_mass)
    obstructed = lower > upper + tol * max(1.0, abs(upper))
    verdict = ObstructionVerdict.OBSTRUCTED if obstructed else ObstructionVerdict.NOT_OBSTRUCTED
    reason = (
        f"controlled first-component mass stays >= {lower:.6g}, target mass is <= {upper:.6g}"
    )
    logger.info("Mass obstruction: %s (%s)", verdict, reason)
    return MassObstruction(
        verdict=verdict,
        lower_bound=lower,
        upper_bound=upper,
        target_mass=target_mass,
        horizon=T,
        reason=reason,
    )
