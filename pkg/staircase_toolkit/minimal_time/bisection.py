"""Bisection on the horizon for the smallest constrained-feasible time.

Feasibility is assumed monotone in the horizon. Every oracle call is kept,
and any feasible horizon lying below an infeasible one is reported.
"""

import logging
from collections.abc import Callable
from collections.abc import Iterable

from staircase_toolkit.exceptions import BracketError

from .feasibility import feasibility
from .models import BisectionResult
from .models import FeasibilityProblem
from .models import FeasibilityResult
from .models import FeasibilityVerdict
from .models import OracleCall

logger = logging.getLogger(__name__)

Oracle = Callable[[FeasibilityProblem], FeasibilityResult]


def presweep(
    template: FeasibilityProblem,
    horizons: Iterable[float],
    oracle: Oracle = feasibility,
) -> list[OracleCall]:
    return [OracleCall.from_result(oracle(template.with_horizon(T))) for T in sorted(horizons)]


def non_monotone_pairs(calls: Iterable[OracleCall]) -> tuple[tuple[float, float], ...]:
    ordered = sorted(calls, key=lambda call: call.horizon)
    pairs = []
    for index, call in enumerate(ordered):
        if call.verdict is not FeasibilityVerdict.FEASIBLE:
            continue
        pairs.extend(
            (call.horizon, later.horizon)
            for later in ordered[index + 1 :]
            if later.verdict is FeasibilityVerdict.INFEASIBLE
        )
    return tuple(pairs)


def seed_bracket(calls: Iterable[OracleCall]) -> tuple[float, float]:
    """Largest infeasible horizon below the smallest feasible one."""
    ordered = sorted(calls, key=lambda call: call.horizon)
    feasible = [call.horizon for call in ordered if call.verdict is FeasibilityVerdict.FEASIBLE]
    if not feasible:
        msg = "no feasible horizon among the sweep"
        raise BracketError(msg)
    upper = feasible[0]
    below = [
        call.horizon
        for call in ordered
        if call.horizon < upper and call.verdict is FeasibilityVerdict.INFEASIBLE
    ]
    if not below:
        msg = f"no infeasible horizon below the smallest feasible one, {upper}"
        raise BracketError(msg)
    return below[-1], upper


def bisect_minimal_time(
    template: FeasibilityProblem,
    T_lo: float,
    T_hi: float,
    iterations: int = 10,
    *,
    oracle: Oracle = feasibility,
    prior_calls: Iterable[OracleCall] = (),
) -> BisectionResult:
    if not 0.0 < T_lo < T_hi:
        msg = f"bracket needs 0 < T_lo < T_hi, got ({T_lo}, {T_hi})"
        raise BracketError(msg)
    calls = list(prior_calls)

    def call(T: float) -> FeasibilityVerdict:
        record = OracleCall.from_result(oracle(template.with_horizon(T)))
        calls.append(record)
        return record.verdict

    if call(T_lo) is not FeasibilityVerdict.INFEASIBLE:
        msg = f"T_lo = {T_lo} is not infeasible ({calls[-1].verdict})"
        raise BracketError(msg)
    if call(T_hi) is not FeasibilityVerdict.FEASIBLE:
        msg = f"T_hi = {T_hi} is not feasible ({calls[-1].verdict})"
        raise BracketError(msg)

    lo, hi = T_lo, T_hi
    for _ in range(iterations):
        mid = (lo + hi) / 2.0
        verdict = call(mid)
        if verdict is FeasibilityVerdict.FEASIBLE:
            hi = mid
        else:
            if verdict is FeasibilityVerdict.INDETERMINATE:
                logger.warning("Indeterminate feasibility at T=%.6g counted as infeasible", mid)
            lo = mid
    findings = non_monotone_pairs(calls)
    for feasible_at, infeasible_at in findings:
        logger.info("Non-monotone feasibility: feasible at T=%.6g, infeasible at T=%.6g", feasible_at, infeasible_at)
    result = BisectionResult(
        estimate=(lo + hi) / 2.0,
        bracket=(lo, hi),
        calls=tuple(calls),
        non_monotone=findings,
    )
    logger.info("Minimal time bracket [%.6g, %.6g] after %d oracle calls", lo, hi, len(calls))
    return result
