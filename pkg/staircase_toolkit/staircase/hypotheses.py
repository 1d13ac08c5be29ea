from staircase_toolkit.constants import CERTIFY_TOL
from staircase_toolkit.exceptions import HypothesisError
from staircase_toolkit.exceptions import StructuralError
from staircase_toolkit.spectral_core.models import SpectralState
from staircase_toolkit.spectral_core.operations import min_on_grid
from staircase_toolkit.system_model.models import SystemSpec


def require(condition: bool, message: str):  # noqa: FBT001
    if not condition:
        raise HypothesisError(message)


def check_data(
    spec: SystemSpec,
    y0: SpectralState,
    yf0: SpectralState,
    certify_tol: float = CERTIFY_TOL,
    grid_points: int | None = None,
):
    for name, state in (("initial", y0), ("target", yf0)):
        if state.components != spec.n:
            msg = f"{name} state has {state.components} components, the system {spec.n}"
            raise StructuralError(msg)
        worst = float(min_on_grid(state, grid_points).min())
        require(worst >= -certify_tol, f"{name} data must be nonnegative, minimum is {worst:.6g}")
    if y0.mode_count != yf0.mode_count:
        msg = f"initial and target data have {y0.mode_count} and {yf0.mode_count} modes"
        raise StructuralError(msg)
