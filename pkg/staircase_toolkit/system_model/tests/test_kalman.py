from fractions import Fraction

import numpy as np
import pytest

from staircase_toolkit.system_model.kalman import exact_kalman_rank
from staircase_toolkit.system_model.kalman import kalman_condition_all_modes
from staircase_toolkit.system_model.kalman import kalman_matrix
from staircase_toolkit.system_model.kalman import kalman_rank

from .factories import ConservativePairSpecFactory
from .factories import SystemSpecFactory
from .factories import random_integer_spec


def test_conservative_pair_rank_at_zero():
    spec = ConservativePairSpecFactory()

    np.testing.assert_allclose(kalman_matrix(spec, 0.0), [[1.0, 0.0], [-1.0, 1.0]])
    assert kalman_rank(spec, 0.0) == 2  # noqa: PLR2004


def test_zero_control_matrix_has_rank_zero():
    spec = ConservativePairSpecFactory(B=np.zeros((2, 1)))

    assert kalman_rank(spec, 0.0) == 0
    assert kalman_rank(spec, np.pi**2) == 0


def test_rank_matches_exact_oracle_on_hand_example():
    spec = ConservativePairSpecFactory(
        D=np.diag([1.0, 2.0]),
        A=np.array([[0.0, 1.0], [1.0, 0.0]]),
        B=np.array([[1.0], [0.0]]),
    )

    assert kalman_rank(spec, np.pi**2) == exact_kalman_rank(spec, mode=1)
    assert exact_kalman_rank(spec, mode=1) == 2  # noqa: PLR2004


def test_exact_rank_with_rational_lambda():
    spec = ConservativePairSpecFactory(D=np.diag([1.0, 4.0]), A=np.zeros((2, 2)), B=np.ones((2, 1)))

    assert exact_kalman_rank(spec, Fraction(0)) == 1
    assert exact_kalman_rank(spec, Fraction(1, 3)) == 2  # noqa: PLR2004


def test_exact_rank_needs_one_selector():
    with pytest.raises(ValueError, match="exactly one"):
        exact_kalman_rank(SystemSpecFactory())


def test_rank_invariant_under_column_permutation():
    rng = np.random.default_rng(3)
    B = rng.normal(size=(3, 3))
    spec = SystemSpecFactory(D=np.diag([1.0, 2.0, 3.0]), A=rng.normal(size=(3, 3)), B=B)
    permuted = SystemSpecFactory(D=spec.D, A=spec.A, B=B[:, [2, 0, 1]])

    for lam in (0.0, np.pi**2, 9 * np.pi**2):
        assert kalman_rank(spec, lam) == kalman_rank(permuted, lam)


def test_numerical_rank_agrees_with_exact_oracle():
    rng = np.random.default_rng(20240607)
    mismatches = []
    for _ in range(200):
        spec = random_integer_spec(rng)
        for mode in (0, 1, 2):
            numeric = kalman_rank(spec, (mode * np.pi) ** 2)
            exact = exact_kalman_rank(spec, mode=mode)
            if numeric != exact:
                mismatches.append((spec, mode, numeric, exact))

    assert mismatches == []


def test_conservative_pair_all_modes():
    verdict = kalman_condition_all_modes(ConservativePairSpecFactory(), p_max=50)

    assert verdict.satisfied_up_to_p_max
    assert verdict.failed_at is None
    assert verdict.reduced_rank == 2  # noqa: PLR2004
    assert verdict.exhaustive


def test_unequal_diffusion_fails_at_mode_zero():
    spec = ConservativePairSpecFactory(D=np.diag([1.0, 4.0]), A=np.zeros((2, 2)), B=np.ones((2, 1)))

    verdict = kalman_condition_all_modes(spec, p_max=10)

    assert not verdict.satisfied_up_to_p_max
    assert verdict.failed_at == 0
    assert not verdict.exhaustive
    assert verdict.ranks[1:] == (2,) * 10


def test_scalar_system_satisfied_for_all_modes():
    verdict = kalman_condition_all_modes(SystemSpecFactory(), p_max=200)

    assert verdict.satisfied_up_to_p_max
    assert verdict.reduced_rank == 1
    assert verdict.as_dict()["min_rank"] == 1


def test_p_max_must_be_positive():
    with pytest.raises(ValueError, match="p_max"):
        kalman_condition_all_modes(SystemSpecFactory(), p_max=0)
