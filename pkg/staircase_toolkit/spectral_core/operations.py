import logging

import numpy as np
import scipy.integrate

from staircase_toolkit.exceptions import ResolutionError
from staircase_toolkit.exceptions import StructuralError
from staircase_toolkit.system_model.models import ControlWindow

from .models import ControlCoupling
from .models import NeumannBasis
from .models import SpectralState

logger = logging.getLogger(__name__)


def project(field_samples, basis: NeumannBasis) -> SpectralState:
    """Project samples on a uniform grid of [0, 1] onto the basis.

    Samples have shape (points,) or (points, n); the coefficients are
    composite Simpson quadratures of field * e_p.
    """
    samples = np.asarray(field_samples, dtype=float)
    if samples.ndim == 1:
        samples = samples[:, None]
    points = samples.shape[0]
    if points < max(4 * basis.highest_mode, 3):
        msg = (
            f"{points} grid points cannot resolve {basis.mode_count} modes; "
            f"need at least {max(4 * basis.highest_mode, 3)}"
        )
        raise ResolutionError(msg)
    x = np.linspace(0.0, 1.0, points)
    products = basis.evaluate(x)[:, :, None] * samples[:, None, :]
    return SpectralState(scipy.integrate.simpson(products, x=x, axis=0))


def _window_integrals(frequency: np.ndarray, omega: ControlWindow) -> np.ndarray:
    """Integral of cos(k pi x) over (a, b), for an array of integers k."""
    # np.sinc(z) = sin(pi z) / (pi z), so b * sinc(k b) = sin(k pi b) / (k pi)
    return omega.b * np.sinc(frequency * omega.b) - omega.a * np.sinc(frequency * omega.a)


def coupling_matrix(omega: ControlWindow, basis: NeumannBasis) -> ControlCoupling:
    if not isinstance(omega, ControlWindow):
        omega = ControlWindow(*omega)
    modes = np.arange(basis.mode_count)
    p, q = np.meshgrid(modes, modes, indexing="ij")
    # cos(p) cos(q) = (cos(p - q) + cos(p + q)) / 2
    weights = np.where(modes == 0, 1.0 / np.sqrt(2.0), 1.0)
    matrix = np.outer(weights, weights) * (
        _window_integrals(p - q, omega) + _window_integrals(p + q, omega)
    )
    matrix = (matrix + matrix.T) / 2.0
    smallest = float(np.linalg.eigvalsh(matrix).min())
    if smallest < -1e-10:
        msg = f"coupling matrix is not positive semidefinite (eigenvalue {smallest})"
        raise StructuralError(msg)
    return ControlCoupling(omega=omega, matrix=matrix)


def _grid_values(coefficients: np.ndarray, grid_points: int | None) -> np.ndarray:
    basis = NeumannBasis(coefficients.shape[-2])
    points = grid_points or basis.default_grid_points()
    if points < 4 * basis.highest_mode:
        msg = f"{points} grid points are too few for {basis.mode_count} modes"
        raise ResolutionError(msg)
    return np.einsum("gp,...pn->...gn", basis.evaluate(basis.grid(points)), coefficients)


def min_on_grid(state: SpectralState, grid_points: int | None = None) -> np.ndarray:
    """Componentwise minima of the reconstruction on a uniform grid."""
    return _grid_values(state.coefficients, grid_points).min(axis=0)


def minima_on_grid(coefficients: np.ndarray, grid_points: int | None = None) -> np.ndarray:
    """Batched min_on_grid for coefficient stacks of shape (times, modes, n)."""
    return _grid_values(coefficients, grid_points).min(axis=-2)


def sup_norm_on_grid(coefficients: np.ndarray, grid_points: int | None = None) -> np.ndarray:
    """Largest absolute value over the grid and components, per leading index."""
    values = np.abs(_grid_values(coefficients, grid_points))
    return values.max(axis=(-2, -1))


def random_nonnegative_state(
    rng: np.random.Generator,
    mode_count: int,
    components: int,
    active_modes: int = 6,
) -> SpectralState:
    """Random band-limited field that is nonnegative everywhere.

    The mean of each component dominates sqrt(2) times the sum of the
    absolute values of the other coefficients.
    """
    active = min(active_modes, mode_count - 1)
    coefficients = np.zeros((mode_count, components))
    coefficients[1 : active + 1] = rng.normal(size=(active, components)) / (
        1.0 + np.arange(1, active + 1)[:, None]
    )
    floor = np.sqrt(2.0) * np.abs(coefficients[1:]).sum(axis=0)
    coefficients[0] = floor + rng.uniform(0.0, 1.0, size=components)
    return SpectralState(coefficients)
