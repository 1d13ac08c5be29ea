import numpy as np
import pytest
import scipy.integrate

from staircase_toolkit.exceptions import ResolutionError
from staircase_toolkit.exceptions import StructuralError
from staircase_toolkit.spectral_core.models import NeumannBasis
from staircase_toolkit.spectral_core.models import SpectralState
from staircase_toolkit.spectral_core.operations import min_on_grid
from staircase_toolkit.spectral_core.operations import minima_on_grid
from staircase_toolkit.spectral_core.operations import project
from staircase_toolkit.spectral_core.operations import random_nonnegative_state
from staircase_toolkit.spectral_core.operations import sup_norm_on_grid

from .factories import SpectralStateFactory
from .factories import band_limited_state


def test_basis_is_orthonormal():
    basis = NeumannBasis(17)
    x = np.linspace(0.0, 1.0, 4097)
    values = basis.evaluate(x)

    gram = scipy.integrate.trapezoid(values[:, :, None] * values[:, None, :], x=x, axis=0)

    np.testing.assert_allclose(gram, np.eye(17), atol=1e-10)


def test_eigenvalues_increase_from_zero():
    eigenvalues = NeumannBasis(6).eigenvalues

    assert eigenvalues[0] == 0.0
    assert np.all(np.diff(eigenvalues) > 0)
    assert eigenvalues[2] == pytest.approx(4 * np.pi**2)


def test_basis_needs_a_mode():
    with pytest.raises(StructuralError):
        NeumannBasis(0)


def test_project_constant():
    state = project(np.full(129, 3.0), NeumannBasis(17))

    assert state.coefficients[0, 0] == pytest.approx(3.0)
    np.testing.assert_allclose(state.coefficients[1:, 0], 0.0, atol=1e-12)


def test_project_single_cosine():
    x = np.linspace(0.0, 1.0, 257)
    state = project(np.sqrt(2.0) * np.cos(np.pi * x), NeumannBasis(17))

    expected = np.zeros(17)
    expected[1] = 1.0
    np.testing.assert_allclose(state.coefficients[:, 0], expected, atol=1e-8)


def test_project_linear_field_against_closed_form():
    x = np.linspace(0.0, 1.0, 2048)
    state = project(x, NeumannBasis(65))

    p = np.arange(1, 65)
    expected = np.sqrt(2.0) * ((-1.0) ** p - 1.0) / (p * np.pi) ** 2
    assert state.coefficients[0, 0] == pytest.approx(0.5)
    np.testing.assert_allclose(state.coefficients[1:, 0], expected, atol=1e-6)


def test_project_rejects_coarse_grid():
    with pytest.raises(ResolutionError):
        project(np.ones(60), NeumannBasis(17))


def test_project_reconstruct_round_trip_on_band_limited_field():
    rng = np.random.default_rng(0)
    state = band_limited_state(rng, 9, 2)
    x = np.linspace(0.0, 1.0, 1025)

    recovered = project(state.reconstruct(x), NeumannBasis(9))

    np.testing.assert_allclose(recovered.coefficients, state.coefficients, atol=1e-9)


@pytest.mark.parametrize("seed", range(5))
def test_parseval(seed: int):
    rng = np.random.default_rng(seed)
    state = band_limited_state(rng, 17, 3)
    x = np.linspace(0.0, 1.0, 8193)

    energy = scipy.integrate.trapezoid((state.reconstruct(x) ** 2).sum(axis=1), x=x)

    assert energy == pytest.approx(state.l2_norm() ** 2, rel=1e-9)


@pytest.mark.parametrize(
    ("coefficients", "expected"),
    [
        (np.vstack([[3.0, 1.0], np.zeros((16, 2))]), [3.0, 1.0]),
        (np.vstack([[0.0], [1.0], np.zeros((15, 1))]), [-np.sqrt(2.0)]),
        (np.zeros((17, 2)), [0.0, 0.0]),
    ],
)
def test_min_on_grid(coefficients, expected):
    np.testing.assert_allclose(min_on_grid(SpectralState(coefficients)), expected, atol=1e-12)


def test_min_on_grid_rejects_coarse_grid():
    with pytest.raises(ResolutionError):
        min_on_grid(SpectralStateFactory(), grid_points=64)


def test_batched_minima_match_single_state():
    rng = np.random.default_rng(1)
    stack = rng.normal(size=(4, 9, 2))

    batched = minima_on_grid(stack)

    for index in range(4):
        np.testing.assert_allclose(batched[index], min_on_grid(SpectralState(stack[index])))


def test_sup_norm_of_single_mode():
    coefficients = np.zeros((9, 1))
    coefficients[1, 0] = -2.0

    assert sup_norm_on_grid(coefficients) == pytest.approx(2.0 * np.sqrt(2.0))


def test_state_arithmetic_and_helpers():
    state = SpectralStateFactory()
    double = 2 * state

    assert double - state == state
    assert (-state).mean.tolist() == [-3.0, -1.0]
    assert state.truncated(4).mode_count == 4  # noqa: PLR2004
    assert state.truncated(40).coefficients.shape == (40, 2)
    with pytest.raises(StructuralError):
        _ = state + SpectralState.zeros(5, 2)


def test_from_modes_pads_with_zeros():
    state = SpectralState.from_modes([[1.0, 2.0], [0.5, 0.0]], 5)

    assert state.coefficients.shape == (5, 2)
    assert state.coefficients[1, 0] == 0.5  # noqa: PLR2004
    assert state.tail_norm(2) == 0.0


@pytest.mark.parametrize("seed", range(5))
def test_random_nonnegative_state_is_nonnegative(seed: int):
    state = random_nonnegative_state(np.random.default_rng(seed), 33, 3)

    assert np.all(min_on_grid(state) >= 0.0)
