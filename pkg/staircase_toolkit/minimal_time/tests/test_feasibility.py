import numpy as np
import pytest

from staircase_toolkit.exceptions import StructuralError
from staircase_toolkit.minimal_time.feasibility import feasibility
from staircase_toolkit.minimal_time.feasibility import least_distance
from staircase_toolkit.minimal_time.models import FeasibilityVerdict
from staircase_toolkit.minimal_time.models import SolverMethod
from staircase_toolkit.spectral_core.models import SpectralState
from staircase_toolkit.system_model.tests.factories import SystemSpecFactory

from .factories import FeasibilityProblemFactory


@pytest.mark.parametrize("horizon", [0.01, 0.1, 1.0])
def test_unconstrained_problem_is_always_feasible(horizon):
    problem = FeasibilityProblemFactory(horizon=horizon, floor=float("inf"))

    result = feasibility(problem)

    assert result.feasible
    assert result.endpoint_defect <= 1e-6
    assert result.control is not None
    assert result.tightening_rounds == 0


def test_short_horizon_is_infeasible():
    result = feasibility(FeasibilityProblemFactory(horizon=0.01))

    assert result.verdict is FeasibilityVerdict.INFEASIBLE
    assert result.control is None


def test_long_horizon_is_feasible():
    result = feasibility(FeasibilityProblemFactory(horizon=2.0))

    assert result.feasible
    assert result.min_state >= -0.5 - 1e-6
    assert result.endpoint_defect <= 1e-6
    assert result.control.steps == 16  # noqa: PLR2004


def test_unconstrained_short_horizon_dives_below_the_floor():
    result = feasibility(FeasibilityProblemFactory(horizon=0.01, floor=float("inf")))

    assert result.min_state < -0.5


def test_initial_state_below_the_floor():
    problem = FeasibilityProblemFactory(
        initial=SpectralState.constant([-1.0], 17),
        target_start=SpectralState.constant([1.0], 17),
    )

    result = feasibility(problem)

    assert result.verdict is FeasibilityVerdict.INFEASIBLE
    assert "below the floor" in result.message


def test_endpoint_out_of_reach():
    problem = FeasibilityProblemFactory(spec=SystemSpecFactory(B=np.zeros((1, 1))))

    result = feasibility(problem)

    assert result.verdict is FeasibilityVerdict.INFEASIBLE
    assert result.endpoint_defect > 1e-6


@pytest.mark.parametrize("method", list(SolverMethod))
def test_least_distance_solution(method):
    G = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    h = np.array([-1.0, -1.0, 1.0])

    outcome = least_distance(G, h, method)

    assert outcome.verdict is FeasibilityVerdict.FEASIBLE
    np.testing.assert_allclose(outcome.solution, [0.5, 0.5], atol=1e-6)


@pytest.mark.parametrize("method", list(SolverMethod))
def test_least_distance_detects_an_empty_set(method):
    G = np.array([[1.0], [-1.0]])
    h = np.array([1.0, 1.0])

    outcome = least_distance(G, h, method)

    assert outcome.verdict is FeasibilityVerdict.INFEASIBLE
    assert outcome.solution is None


def test_nesterov_iteration_cap_is_indeterminate():
    G = np.array([[1.0, 0.0], [0.0, 1e-3], [1.0, 1.0]])
    h = np.array([-1.0, 1.0, 1.0])

    outcome = least_distance(G, h, SolverMethod.NESTEROV, max_iter=3, kkt_tol=1e-12)

    assert outcome.verdict is FeasibilityVerdict.INDETERMINATE
    assert outcome.iterations == 3  # noqa: PLR2004


def test_horizon_must_be_positive():
    with pytest.raises(StructuralError):
        FeasibilityProblemFactory(horizon=0.0)


def test_control_modes_must_fit_the_state():
    with pytest.raises(StructuralError):
        FeasibilityProblemFactory(control_modes=17)


def test_refined_problem_doubles_modes_and_knots():
    problem = FeasibilityProblemFactory()

    refined = problem.refined()

    assert refined.initial.mode_count == 34  # noqa: PLR2004
    assert refined.knots == 32  # noqa: PLR2004
    np.testing.assert_array_equal(refined.initial.coefficients[:17], problem.initial.coefficients)
    assert problem.with_horizon(0.3).horizon == 0.3  # noqa: PLR2004
