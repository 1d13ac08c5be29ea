import pytest

from staircase_toolkit.exceptions import BracketError
from staircase_toolkit.minimal_time.bisection import bisect_minimal_time
from staircase_toolkit.minimal_time.bisection import non_monotone_pairs
from staircase_toolkit.minimal_time.bisection import presweep
from staircase_toolkit.minimal_time.bisection import seed_bracket
from staircase_toolkit.minimal_time.models import FeasibilityResult
from staircase_toolkit.minimal_time.models import FeasibilityVerdict
from staircase_toolkit.minimal_time.models import OracleCall

from .factories import FeasibilityProblemFactory


def threshold_oracle(threshold):
    def oracle(problem):
        verdict = (
            FeasibilityVerdict.FEASIBLE if problem.horizon >= threshold else FeasibilityVerdict.INFEASIBLE
        )
        return FeasibilityResult(verdict, problem.horizon, 0.0, 0.0)

    return oracle


def call(horizon, verdict):
    return OracleCall(horizon, verdict, 0.0, 0.0, None)


@pytest.fixture
def template():
    return FeasibilityProblemFactory()


def test_bisection_brackets_the_switch(template):
    result = bisect_minimal_time(template, 0.01, 2.0, 10, oracle=threshold_oracle(0.3))

    lo, hi = result.bracket
    assert lo < 0.3 <= hi  # noqa: PLR2004
    assert result.width == pytest.approx(1.99 / 2**10)
    assert lo < result.estimate < hi
    assert len(result.calls) == 12  # noqa: PLR2004
    assert result.non_monotone == ()


@pytest.mark.parametrize(
    ("T_lo", "T_hi"),
    [(0.5, 2.0), (0.01, 0.2), (1.0, 0.5), (0.0, 1.0)],
    ids=["feasible-low-end", "infeasible-high-end", "reversed", "zero"],
)
def test_bad_brackets(template, T_lo, T_hi):
    with pytest.raises(BracketError):
        bisect_minimal_time(template, T_lo, T_hi, oracle=threshold_oracle(0.3))


def test_presweep_seeds_the_bracket(template):
    calls = presweep(template, [0.8, 0.1, 0.4, 0.2], oracle=threshold_oracle(0.3))

    assert [c.horizon for c in calls] == [0.1, 0.2, 0.4, 0.8]
    assert seed_bracket(calls) == (0.2, 0.4)


def test_seed_needs_both_verdicts():
    with pytest.raises(BracketError):
        seed_bracket([call(0.1, FeasibilityVerdict.INFEASIBLE)])
    with pytest.raises(BracketError):
        seed_bracket([call(0.1, FeasibilityVerdict.FEASIBLE)])


def test_non_monotone_findings_are_reported(template):
    prior = [call(0.2, FeasibilityVerdict.FEASIBLE), call(0.25, FeasibilityVerdict.INFEASIBLE)]

    result = bisect_minimal_time(template, 0.01, 2.0, 3, oracle=threshold_oracle(0.3), prior_calls=prior)

    assert (0.2, 0.25) in result.non_monotone
    assert non_monotone_pairs(prior) == ((0.2, 0.25),)


def test_scalar_heat_minimal_time_is_positive(template):
    result = bisect_minimal_time(template, 0.01, 2.0, 6)

    assert result.estimate > 0.01  # noqa: PLR2004
    assert result.width == pytest.approx(1.99 / 2**6)
    assert all(c.verdict is not FeasibilityVerdict.INDETERMINATE for c in result.calls[:2])
    assert result.as_dict()["oracle_calls"] == 8  # noqa: PLR2004


def test_estimate_is_stable_when_modes_and_knots_double(template):
    coarse = bisect_minimal_time(template, 0.01, 2.0, 10)
    fine = bisect_minimal_time(template.refined(), 0.01, 2.0, 10)

    assert abs(fine.estimate - coarse.estimate) / coarse.estimate < 0.1  # noqa: PLR2004
