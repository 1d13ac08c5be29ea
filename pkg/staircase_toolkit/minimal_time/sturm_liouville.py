"""Radial Sturm-Liouville modes on a one-dimensional probe ball."""

import csv
import logging
from pathlib import Path

import numpy as np
import scipy.integrate

from staircase_toolkit.exceptions import StructuralError
from staircase_toolkit.spectral_core.models import SpectralState
from staircase_toolkit.system_model.models import ControlWindow

from .models import BallRestriction
from .models import SturmLiouvilleBasis

logger = logging.getLogger(__name__)

SL_CSV_FIELDS = ["n", "mu", "eigenvalue", "alpha", "identity"]


def sl_basis(a: float, n_max: int, tol: float = 1e-9) -> SturmLiouvilleBasis:
    """Closed-form modes of p'' + a p = -lambda p, p'(0) = 0, p(1) = 0.

    Raises :class:`StructuralError` when the flux identity drifts from 1 by
    more than ``tol``.
    """
    if n_max < 1:
        msg = f"n_max must be at least 1, got {n_max}"
        raise StructuralError(msg)
    n = np.arange(1, n_max + 1)
    mu = (n - 0.5) * np.pi
    basis = SturmLiouvilleBasis(
        potential=float(a),
        mu=mu,
        eigenvalues=mu**2 - a,
        alpha=np.where(n % 2 == 0, mu, -mu),
    )
    drift = float(np.abs(basis.identity_values - 1.0).max())
    if drift > tol:
        msg = f"flux identity off by {drift:.3e}"
        raise StructuralError(msg)
    nonpositive = np.flatnonzero(basis.eigenvalues <= 0.0)
    if nonpositive.size:
        logger.info(
            "Potential a=%.6g leaves %d nonpositive Sturm-Liouville eigenvalue(s)",
            a,
            nonpositive.size,
        )
    return basis


def export_sl_basis(basis: SturmLiouvilleBasis, path: Path) -> Path:
    with Path(path).open("w", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=SL_CSV_FIELDS, lineterminator="\n")
        writer.writeheader()
        for row in basis.rows():
            writer.writerow(
                {key: value if key == "n" else f"{value:.12e}" for key, value in row.items()},
            )
    return Path(path)


def default_probe_ball(omega: ControlWindow) -> BallRestriction:
    """Largest interval of (0, 1) left uncovered by the control window."""
    gaps = omega.complement_gaps()
    if not gaps:
        msg = f"control window {omega} leaves no room for a probe ball"
        raise StructuralError(msg)
    left, right = gaps[0]
    return BallRestriction(center=(left + right) / 2.0, radius=(right - left) / 2.0)


def restrict_to_ball(
    state: SpectralState,
    ball: BallRestriction,
    component: int,
    basis: SturmLiouvilleBasis,
    samples: int = 2001,
) -> np.ndarray:
    """Integrals of y(c + R r) p_n(|r|) over r in (-1, 1).

    The p_n are orthonormal for this inner product, so these are the mode
    coefficients of the even part of the field read on the ball.
    """
    if samples % 2 == 0:
        samples += 1
    r = np.linspace(-1.0, 1.0, samples)
    values = state.reconstruct(ball.points(r))[:, component]
    integrand = values[:, None] * basis.evaluate(r)
    return scipy.integrate.simpson(integrand, x=r, axis=0)
