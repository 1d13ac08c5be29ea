import numpy as np
import pytest
import scipy.integrate

from staircase_toolkit.evolution.finite_difference import fd_oracle_evolve
from staircase_toolkit.evolution.finite_difference import stable_step_count
from staircase_toolkit.evolution.propagation import free_evolve
from staircase_toolkit.exceptions import ConfigurationError
from staircase_toolkit.exceptions import StructuralError
from staircase_toolkit.spectral_core.models import SpectralState
from staircase_toolkit.spectral_core.operations import random_nonnegative_state
from staircase_toolkit.system_model.tests.factories import ConservativePairSpecFactory
from staircase_toolkit.system_model.tests.factories import SystemSpecFactory
from staircase_toolkit.system_model.tests.factories import random_quasipositive_spec

GRID_POINTS = 256


def _endpoint_gap(spec, state0: SpectralState, T: float) -> float:
    x = np.linspace(0.0, 1.0, GRID_POINTS)
    steps = stable_step_count(spec, T, GRID_POINTS)
    oracle = fd_oracle_evolve(
        spec, state0.reconstruct(x), T, GRID_POINTS, steps, record_every=steps,
    )
    spectral = free_evolve(spec, state0, T, steps=10).final.reconstruct(x)
    return float(np.sqrt(scipy.integrate.trapezoid(((oracle.final - spectral) ** 2).sum(axis=1), x=x)))


@pytest.mark.parametrize(
    ("spec", "state0", "T"),
    [
        (SystemSpecFactory(), SpectralState.from_modes([[0.0], [1.0]], 9), 0.1),
        (ConservativePairSpecFactory(), SpectralState.constant([3.0, 1.0], 9), 0.5),
        (
            random_quasipositive_spec(np.random.default_rng(11), 3),
            random_nonnegative_state(np.random.default_rng(12), 9, 3),
            0.05,
        ),
    ],
    ids=["heat-mode", "conservative-pair", "random-quasipositive"],
)
def test_oracle_agrees_with_spectral_endpoint(spec, state0, T):
    assert _endpoint_gap(spec, state0, T) <= 1e-3


def test_constant_state_without_coupling_stays_constant():
    spec = SystemSpecFactory()
    samples = np.full((65, 1), 2.5)

    oracle = fd_oracle_evolve(spec, samples, 0.01, 65, stable_step_count(spec, 0.01, 65))

    np.testing.assert_allclose(oracle.values, 2.5, rtol=0.0, atol=1e-12)


def test_unstable_step_is_rejected():
    spec = SystemSpecFactory()

    with pytest.raises(ConfigurationError):
        fd_oracle_evolve(spec, np.ones(65), 0.1, 65, steps=10)


def test_samples_must_match_grid():
    spec = SystemSpecFactory()

    with pytest.raises(StructuralError):
        fd_oracle_evolve(spec, np.ones(64), 0.001, 65, steps=100)


def test_stable_step_count_meets_the_limit():
    assert stable_step_count(SystemSpecFactory(), 1.0, 257) == 131072  # noqa: PLR2004


def test_recording_stride_keeps_the_endpoint():
    spec = SystemSpecFactory()
    steps = stable_step_count(spec, 0.01, 33)

    oracle = fd_oracle_evolve(spec, np.ones(33), 0.01, 33, steps, record_every=7)

    assert oracle.times[-1] == pytest.approx(0.01)
    assert oracle.values.shape[0] == len(oracle.times)
