import logging

import numpy as np

from staircase_toolkit.exceptions import StructuralError
from staircase_toolkit.spectral_core.models import SpectralState
from staircase_toolkit.system_model.models import SystemSpec

from .models import BallRestriction
from .models import GammaCertificate
from .models import SturmLiouvilleBasis
from .sturm_liouville import default_probe_ball
from .sturm_liouville import restrict_to_ball
from .sturm_liouville import sl_basis

logger = logging.getLogger(__name__)


def gamma_certificate(
    y0_restricted,
    yf0_restricted,
    basis: SturmLiouvilleBasis,
    n_max: int | None = None,
    tol: float = 1e-9,
) -> GammaCertificate:
    """Ratios (y0_n - yf0_n) / (-alpha_n) over the first n_max modes.

    Reaching the target in arbitrarily short time would force all ratios
    to share one value gamma, and that value to vanish. A spread, or a
    common nonzero value, therefore certifies a positive minimal time.
    """
    y0_restricted = np.asarray(y0_restricted, dtype=float)
    yf0_restricted = np.asarray(yf0_restricted, dtype=float)
    count = min(n_max or basis.size, basis.size, y0_restricted.size, yf0_restricted.size)
    if count < 1:
        msg = "the certificate needs at least one mode"
        raise StructuralError(msg)
    ratios = (y0_restricted[:count] - yf0_restricted[:count]) / -basis.alpha[:count]
    spread = float(ratios.max() - ratios.min())
    is_constant = spread <= tol * max(1.0, float(np.abs(ratios).max()))
    certificate = GammaCertificate(
        ratios=ratios,
        spread=spread,
        common_value=float(ratios.mean()) if is_constant else None,
        is_constant=is_constant,
        tol=tol,
    )
    logger.info(
        "Gamma certificate over %d modes: spread %.6g, positive time certified: %s",
        count,
        spread,
        certificate.certifies_positive_time,
    )
    return certificate


def probe_certificate(
    spec: SystemSpec,
    y0: SpectralState,
    yf0: SpectralState,
    n_max: int = 20,
    component: int = 0,
    ball: BallRestriction | None = None,
) -> tuple[GammaCertificate, SturmLiouvilleBasis, BallRestriction]:
    """Certificate for one component read on a ball outside the control window."""
    ball = ball or default_probe_ball(spec.omega)
    basis = sl_basis(float(spec.A[component, component]), n_max)
    certificate = gamma_certificate(
        restrict_to_ball(y0, ball, component, basis),
        restrict_to_ball(yf0, ball, component, basis),
        basis,
        n_max,
    )
    return certificate, basis, ball
