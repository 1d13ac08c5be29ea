import factory
import numpy as np

from staircase_toolkit.minimal_time.models import FeasibilityProblem
from staircase_toolkit.spectral_core.models import SpectralState
from staircase_toolkit.system_model.tests.factories import SystemSpecFactory


def cosine_pair(sign: float, mode_count: int = 17) -> SpectralState:
    """1 + sign * e_1: the two data differ outside the control window."""
    coefficients = np.zeros((mode_count, 1))
    coefficients[0, 0] = 1.0
    coefficients[1, 0] = sign
    return SpectralState(coefficients)


class FeasibilityProblemFactory(factory.Factory):
    """Scalar heat, 1 + e_1 toward the free run from 1 - e_1, state kept above -0.5."""

    spec = factory.SubFactory(SystemSpecFactory)
    initial = factory.LazyFunction(lambda: cosine_pair(1.0))
    target_start = factory.LazyFunction(lambda: cosine_pair(-1.0))
    horizon = 1.0
    floor = 0.5

    class Meta:
        model = FeasibilityProblem
