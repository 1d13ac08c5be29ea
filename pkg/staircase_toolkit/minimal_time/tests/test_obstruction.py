import math

import numpy as np
import pytest

from staircase_toolkit.minimal_time.models import ObstructionVerdict
from staircase_toolkit.minimal_time.obstruction import mass_obstruction
from staircase_toolkit.spectral_core.models import SpectralState
from staircase_toolkit.system_model.tests.factories import ConservativePairSpecFactory
from staircase_toolkit.system_model.tests.factories import NilpotentPairSpecFactory
from staircase_toolkit.system_model.tests.factories import SystemSpecFactory


def constant(values):
    return SpectralState.constant(values, 9)


@pytest.mark.parametrize(
    ("y0", "yf0", "verdict", "lower", "upper"),
    [
        ([3.0, 1.0], [1.0, 1.0], ObstructionVerdict.OBSTRUCTED, 3.0, 2.0),
        ([1.0, 1.0], [2.0, 1.0], ObstructionVerdict.NOT_OBSTRUCTED, 1.0, 3.0),
        ([1.0, 1.0], [1.0, 1.0], ObstructionVerdict.NOT_OBSTRUCTED, 1.0, 2.0),
    ],
)
def test_conservative_pair_mass_bounds(y0, yf0, verdict, lower, upper):
    result = mass_obstruction(ConservativePairSpecFactory(), constant(y0), constant(yf0))

    assert result.verdict is verdict
    assert result.lower_bound == pytest.approx(lower)
    assert result.upper_bound == pytest.approx(upper)
    assert result.reachable_mass_interval == (pytest.approx(lower), math.inf)


def test_horizon_gives_the_exact_target_mass():
    result = mass_obstruction(
        ConservativePairSpecFactory(), constant([1.0, 1.0]), constant([1.0, 1.0]), T=0.5,
    )

    assert result.target_mass == pytest.approx(2.0 - math.exp(-0.5))
    assert result.upper_bound == pytest.approx(result.target_mass)
    assert result.verdict is ObstructionVerdict.NOT_OBSTRUCTED


def test_horizon_can_reveal_an_obstruction():
    # 1.5 fits under the conserved total 2, not under the mass 2 - exp(-0.5) ~ 1.39
    result = mass_obstruction(
        ConservativePairSpecFactory(), constant([1.5, 0.0]), constant([1.0, 1.0]), T=0.5,
    )

    assert result.obstructed


@pytest.mark.parametrize(
    "spec",
    [
        SystemSpecFactory(),
        NilpotentPairSpecFactory(),
        ConservativePairSpecFactory(B=np.array([[1.0], [1.0]])),
    ],
    ids=["scalar", "mass-creating", "control-on-first"],
)
def test_pattern_mismatch_is_not_applicable(spec):
    data = SpectralState.constant(np.ones(spec.n), 9)

    result = mass_obstruction(spec, data, data)

    assert result.verdict is ObstructionVerdict.NOT_APPLICABLE
    assert result.reason
    assert result.lower_bound is None
    assert result.reachable_mass_interval is None
