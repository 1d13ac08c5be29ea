import numpy as np
import pytest

from staircase_toolkit.hum_control.steering import free_state_at
from staircase_toolkit.staircase.general import ladder_states
from staircase_toolkit.staircase.general import plan_general
from staircase_toolkit.staircase.general import run_general
from staircase_toolkit.staircase.identity import plan_identity
from staircase_toolkit.staircase.identity import run_identity
from staircase_toolkit.staircase.models import PhaseKind
from staircase_toolkit.system_model.tests.factories import ConservativePairSpecFactory
from staircase_toolkit.system_model.tests.factories import NilpotentPairSpecFactory
from staircase_toolkit.system_model.tests.factories import SystemSpecFactory

from .factories import bumped_state
from .factories import constant_state


def identity_run(spec, y0, yf0, **options):
    plan = plan_identity(spec, y0, yf0, **options)
    return run_identity(spec, plan, y0, yf0)


def general_run(spec, y0, yf0, epsilon):
    plan = plan_general(spec, y0, yf0, epsilon=epsilon)
    return run_general(spec, plan, y0, yf0)


@pytest.fixture(scope="module")
def identity_demo():
    return identity_run(
        NilpotentPairSpecFactory(), bumped_state([3.0, 1.0], 0, 0.2), constant_state([1.0, 1.0]),
    )


@pytest.fixture(scope="module")
def conservative_pair_run():
    return general_run(
        ConservativePairSpecFactory(), constant_state([1.0, 1.0]), constant_state([2.0, 1.0]), 0.1,
    )


def test_equal_constant_data_stay_put():
    state = constant_state([2.0])

    result = identity_run(SystemSpecFactory(), state, state)

    assert result.control.l2_norm() < 1e-8
    assert result.constraint.worst_minimum == pytest.approx(2.0, rel=1e-9)
    assert result.terminal_error < 1e-9
    assert result.feasible


def test_scalar_heat_staircase_through_constants():
    result = identity_run(SystemSpecFactory(), bumped_state([1.0], 0, 0.5), constant_state([2.0]))
    plan = result.plan

    assert result.feasible
    assert result.transformed_minimum == pytest.approx(result.constraint.worst_minimum)
    assert result.transformed_minimum > 0.0
    assert result.transformed_minimum >= plan.zeta - plan.calibration * plan.delta - 1e-6


def test_identity_demo_reaches_the_target_nonnegatively(identity_demo):
    assert identity_demo.terminal_error <= 1e-3
    assert identity_demo.constraint.worst_minimum >= -1e-6
    assert not identity_demo.constraint.violated
    assert identity_demo.feasible


def test_identity_phases_tile_the_horizon(identity_demo):
    plan, phases = identity_demo.plan, identity_demo.phases
    kinds = [phase.kind for phase in phases]

    assert phases[0].start == 0.0
    assert phases[-1].end == pytest.approx(plan.terminal_time)
    for previous, current in zip(phases, phases[1:], strict=False):
        assert current.start == pytest.approx(previous.end)
        assert current.end > current.start
    assert kinds.count(PhaseKind.STAIR) == plan.step_count
    assert kinds[-1] is PhaseKind.MATCH
    assert kinds[1 if plan.wait_time > 0 else 0] is PhaseKind.APPROACH
    assert identity_demo.control.t0 == 0.0
    assert identity_demo.control.t_end == pytest.approx(plan.terminal_time)
    assert identity_demo.trajectory.times[-1] == pytest.approx(plan.terminal_time)
    assert len(identity_demo.diagnostics) == plan.step_count + 2


def test_general_run_keeps_the_relaxed_floor(conservative_pair_run):
    result = conservative_pair_run

    assert result.terminal_error <= 1e-3
    assert result.constraint.worst_minimum >= -0.1 - 1e-6
    assert result.feasible
    assert result.transformed_minimum is None
    assert [phase.index for phase in result.phases] == list(range(result.plan.step_count))


def test_relaxed_floor_reaches_the_obstructed_target():
    result = general_run(
        ConservativePairSpecFactory(), constant_state([3.0, 1.0]), constant_state([1.0, 1.0]), 1.5,
    )

    assert result.feasible
    assert result.constraint.worst_minimum >= -1.5 - 1e-6
    # the first component must lose mass, so the controlled one dips below zero
    assert result.trajectory.minima[:, 1].min() < 0.0


def test_equal_data_need_almost_no_control():
    state = constant_state([1.0, 1.0])

    result = general_run(ConservativePairSpecFactory(), state, state, 0.1)

    assert result.control.l2_norm() < 1e-8
    assert result.terminal_error < 1e-9


def test_ladder_rungs_stay_as_close_as_their_seeds():
    spec = ConservativePairSpecFactory()
    y0, yf0 = bumped_state([1.0, 1.0], 1, 0.3), constant_state([2.0, 1.0])
    plan = plan_general(spec, y0, yf0, epsilon=0.5)

    rungs = ladder_states(spec, plan, rescaled=True)
    gaps = np.linalg.norm(rungs[1:] - rungs[:-1], axis=(2, 3))

    assert gaps.shape == (plan.step_count, plan.step_count + 1)
    assert np.all(gaps <= gaps[:, :1] + 1e-12)
    np.testing.assert_allclose(
        ladder_states(spec, plan)[-1, -1],
        free_state_at(spec, yf0, plan.terminal_time).coefficients,
        atol=1e-10,
    )
