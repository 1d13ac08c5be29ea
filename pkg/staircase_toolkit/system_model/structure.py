import logging

import numpy as np
import scipy.linalg

from staircase_toolkit.constants import RANK_TOL

from .models import StructureReport
from .models import SystemSpec

logger = logging.getLogger(__name__)


def validate_structure(spec: SystemSpec, tol: float = RANK_TOL) -> StructureReport:
    """Check ellipticity, diagonal diffusion and quasipositivity of the coupling.

    Dimension errors are raised when the :class:`SystemSpec` is built, so any
    spec reaching this function is consistent.
    """
    D, A = spec.D, spec.A
    off_diagonal = ~np.eye(spec.n, dtype=bool)

    ellipticity = float(np.linalg.eigvalsh((D + D.T) / 2.0).min())
    scale = max(1.0, float(np.abs(D).max()))
    is_diagonal = bool(np.all(np.abs(D[off_diagonal]) <= tol * scale))
    diagonal = np.diag(D)
    is_scalar = is_diagonal and bool(np.ptp(diagonal) <= tol * scale)

    a_scale = max(1.0, float(np.abs(A).max()))
    is_quasipositive = bool(np.all(A[off_diagonal] >= -tol * a_scale))
    spectrum = scipy.linalg.eigvals(A)
    nonneg_real = bool(np.all(spectrum.real >= -tol * a_scale))

    report = StructureReport(
        is_elliptic=ellipticity > tol,
        ellipticity=ellipticity,
        is_diagonal_D=is_diagonal,
        is_scalar_D=is_scalar,
        is_quasipositive_A=is_quasipositive,
        A_spectrum=tuple(complex(z) for z in spectrum),
        eigenvalues_nonneg_real=nonneg_real,
        tol=tol,
    )
    logger.debug("structure of n=%d system: %s", spec.n, report)
    return report


def symmetric_part_max_eigenvalue(A: np.ndarray) -> float:
    return float(np.linalg.eigvalsh((A + A.T) / 2.0).max())
