import numpy as np

from staircase_toolkit.spectral_core.models import SpectralState


def constant_state(values, mode_count: int = 17) -> SpectralState:
    return SpectralState.constant(np.asarray(values, dtype=float), mode_count)


def bumped_state(values, component: int, amplitude: float, mode_count: int = 17) -> SpectralState:
    """Constant field plus ``amplitude`` times the first cosine mode on one component."""
    coefficients = constant_state(values, mode_count).coefficients.copy()
    coefficients[1, component] = amplitude
    return SpectralState(coefficients)
