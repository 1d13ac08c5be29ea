import math

import numpy as np
import pytest

from staircase_toolkit.evolution.monitoring import monitor_constraint
from staircase_toolkit.evolution.propagation import controlled_evolve
from staircase_toolkit.evolution.propagation import empirical_response_ratio
from staircase_toolkit.evolution.propagation import free_evolve
from staircase_toolkit.exceptions import StructuralError
from staircase_toolkit.hum_control.models import ControlSignal
from staircase_toolkit.spectral_core.models import NeumannBasis
from staircase_toolkit.spectral_core.models import SpectralState
from staircase_toolkit.spectral_core.operations import coupling_matrix
from staircase_toolkit.spectral_core.operations import random_nonnegative_state
from staircase_toolkit.system_model.models import ControlWindow
from staircase_toolkit.system_model.tests.factories import ConservativePairSpecFactory
from staircase_toolkit.system_model.tests.factories import SystemSpecFactory
from staircase_toolkit.system_model.tests.factories import random_quasipositive_spec


def test_heat_mode_decays_exactly():
    state0 = SpectralState.from_modes([[0.0], [1.0]], 9)

    traj = free_evolve(SystemSpecFactory(), state0, T=0.1, steps=10)

    assert traj.final.coefficients[1, 0] == pytest.approx(math.exp(-(np.pi**2) * 0.1), rel=1e-12)
    assert traj.final.coefficients[1, 0] == pytest.approx(0.37272, abs=1e-5)


def test_zero_state_stays_zero():
    traj = free_evolve(ConservativePairSpecFactory(), SpectralState.zeros(9, 2), T=1.0, steps=5)

    assert not traj.coefficients.any()


def test_conservative_pair_keeps_total_mass():
    state0 = SpectralState.constant([3.0, 1.0], 17)

    traj = free_evolve(ConservativePairSpecFactory(), state0, T=2.0, steps=40)

    np.testing.assert_allclose(traj.masses().sum(axis=1), 4.0, atol=1e-9)


def test_decoupled_mean_is_conserved_exactly():
    state0 = SpectralState.from_modes([[2.0], [0.5]], 9)

    traj = free_evolve(SystemSpecFactory(), state0, T=3.0, steps=30)

    np.testing.assert_allclose(traj.masses()[:, 0], 2.0, rtol=0.0, atol=1e-14)


def test_zero_control_matches_free_run_bit_for_bit():
    spec = ConservativePairSpecFactory()
    state0 = random_nonnegative_state(np.random.default_rng(3), 17, 2)
    coupling = coupling_matrix(spec.omega, NeumannBasis(17))
    control = ControlSignal.zeros(0.0, 0.05, 20, 3, 1, coupling)

    free = free_evolve(spec, state0, T=1.0, steps=20)
    controlled = controlled_evolve(spec, state0, control, T=1.0, steps=20)

    np.testing.assert_array_equal(controlled.coefficients, free.coefficients)


def test_constant_control_on_single_mode():
    spec = SystemSpecFactory(A=[[-1.0]], omega=ControlWindow(0.0, 1.0))
    coupling = coupling_matrix(spec.omega, NeumannBasis(1))
    control = ControlSignal(0.0, 0.1, np.ones((10, 1, 1)), coupling)

    traj = controlled_evolve(spec, SpectralState.zeros(1, 1), control, T=1.0, steps=10)

    assert traj.final.coefficients[0, 0] == pytest.approx(1.0 - math.exp(-1.0), rel=1e-12)


def test_control_is_zero_outside_its_support():
    spec = ConservativePairSpecFactory()
    state0 = SpectralState.constant([1.0, 1.0], 9)
    coupling = coupling_matrix(spec.omega, NeumannBasis(9))
    control = ControlSignal(0.5, 0.05, np.ones((10, 2, 1)), coupling)

    free = free_evolve(spec, state0, T=1.0, steps=20)
    controlled = controlled_evolve(spec, state0, control, T=1.0, steps=20)

    np.testing.assert_array_equal(controlled.coefficients[:11], free.coefficients[:11])
    assert not np.allclose(controlled.final.coefficients, free.final.coefficients)


@pytest.mark.parametrize(("t0", "step"), [(0.01, 0.05), (0.0, 0.04)])
def test_misaligned_control_is_rejected(t0, step):
    spec = ConservativePairSpecFactory()
    coupling = coupling_matrix(spec.omega, NeumannBasis(9))
    control = ControlSignal(t0, step, np.ones((5, 2, 1)), coupling)

    with pytest.raises(StructuralError):
        controlled_evolve(spec, SpectralState.zeros(9, 2), control, T=1.0, steps=20)


def test_channel_mismatch_is_rejected():
    spec = ConservativePairSpecFactory()
    coupling = coupling_matrix(spec.omega, NeumannBasis(9))
    control = ControlSignal(0.0, 0.05, np.ones((20, 2, 2)), coupling)

    with pytest.raises(StructuralError):
        controlled_evolve(spec, SpectralState.zeros(9, 2), control, T=1.0, steps=20)


def test_nonpositive_horizon_is_rejected():
    with pytest.raises(StructuralError):
        free_evolve(SystemSpecFactory(), SpectralState.zeros(3, 1), T=0.0, steps=4)


def test_controlled_run_is_second_order_in_time():
    spec = ConservativePairSpecFactory()
    basis = NeumannBasis(3)
    coupling = coupling_matrix(spec.omega, basis)
    state0 = SpectralState.from_modes([[1.0, 0.5], [0.2, -0.1], [0.05, 0.1]], 3)

    def smooth(t: float) -> np.ndarray:
        return np.array([[np.sin(2 * np.pi * t)], [np.cos(3 * t)], [t**2]])

    def endpoint(steps: int) -> np.ndarray:
        control = ControlSignal.sample(smooth, 0.0, 1.0, steps, coupling)
        return controlled_evolve(spec, state0, control, T=1.0, steps=steps).final.coefficients

    coarse, medium, fine = endpoint(128), endpoint(256), endpoint(512)
    order = np.log2(np.linalg.norm(coarse - medium) / np.linalg.norm(medium - fine))

    assert order >= 1.9  # noqa: PLR2004


def test_positivity_is_preserved_on_random_quasipositive_systems():
    rng = np.random.default_rng(2024)
    for _ in range(100):
        n = int(rng.integers(1, 5))
        spec = random_quasipositive_spec(rng, n)
        state0 = random_nonnegative_state(rng, 33, n)

        traj = free_evolve(spec, state0, T=2.0, steps=20)

        assert traj.minima.min() >= -1e-6
        assert not monitor_constraint(traj, 0.0).violated


def test_energy_decays_for_dissipative_coupling():
    spec = SystemSpecFactory(
        D=np.diag([1.0, 0.5]),
        A=[[-1.0, 0.5], [0.5, -1.0]],
        B=[[1.0], [0.0]],
    )
    state0 = SpectralState(np.random.default_rng(5).normal(size=(17, 2)))

    norms = free_evolve(spec, state0, T=1.0, steps=50).l2_norms()

    assert np.all(np.diff(norms) <= 1e-9)


def test_first_component_mass_is_nondecreasing_while_second_stays_nonnegative():
    spec = ConservativePairSpecFactory()
    basis = NeumannBasis(9)
    coupling = coupling_matrix(spec.omega, basis)
    control = ControlSignal.sample(
        lambda t: np.array([[0.1 * np.sin(5 * t)], [0.1 * np.cos(7 * t)]]),
        0.0,
        1.0,
        40,
        coupling,
    )

    traj = controlled_evolve(spec, SpectralState.constant([1.0, 2.0], 9), control, T=1.0, steps=40)

    assert traj.minima[:, 1].min() >= 0.0
    assert np.all(np.diff(traj.masses()[:, 0]) >= -1e-9)


def test_response_ratio_is_reported():
    spec = ConservativePairSpecFactory()
    coupling = coupling_matrix(spec.omega, NeumannBasis(9))
    state0 = SpectralState.constant([1.0, 1.0], 9)
    control = ControlSignal(0.0, 0.05, np.full((20, 1, 1), 0.5), coupling)

    free = free_evolve(spec, state0, T=1.0, steps=20)
    controlled = controlled_evolve(spec, state0, control, T=1.0, steps=20)

    ratio = empirical_response_ratio(controlled, free, control)
    assert 0.0 < ratio < np.inf
    zero = ControlSignal.zeros(0.0, 0.05, 20, 1, 1, coupling)
    assert empirical_response_ratio(free, free, zero) == 0.0
