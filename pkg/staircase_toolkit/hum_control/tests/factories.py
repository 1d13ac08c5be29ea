import factory
import numpy as np

from staircase_toolkit.system_model.models import ControlWindow
from staircase_toolkit.system_model.models import SystemSpec


class DampedScalarSpecFactory(factory.Factory):
    """y' = y_xx - y with full-support control; mode 0 is the scalar ODE y' = -y + u."""

    D = factory.LazyFunction(lambda: np.eye(1))
    A = factory.LazyFunction(lambda: np.array([[-1.0]]))
    B = factory.LazyFunction(lambda: np.ones((1, 1)))
    omega = factory.LazyFunction(lambda: ControlWindow(0.0, 1.0))

    class Meta:
        model = SystemSpec
