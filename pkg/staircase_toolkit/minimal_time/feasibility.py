"""State-constrained reachability at a fixed horizon.

The control is piecewise constant on ``knots`` time intervals and spanned
by the first cosine modes restricted to the control window. In whitened
coordinates its L2 norm is Euclidean, so the minimal-norm control subject
to the endpoint and to Y >= -floor on the constraint grid is a
least-distance program. The endpoint equations are removed through their
null space and the remaining program is solved through its nonnegative
least-squares dual.
"""

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.optimize

from staircase_toolkit.constants import CERTIFY_TOL
from staircase_toolkit.constants import FEASIBILITY_KKT_TOL
from staircase_toolkit.constants import FEASIBILITY_MAX_ITER
from staircase_toolkit.constants import STEER_TOL
from staircase_toolkit.evolution.models import ModeBlockDynamics
from staircase_toolkit.evolution.propagation import controlled_evolve
from staircase_toolkit.evolution.propagation import propagate
from staircase_toolkit.exceptions import ConfigurationError
from staircase_toolkit.hum_control.models import ControlSignal
from staircase_toolkit.hum_control.steering import free_state_at
from staircase_toolkit.spectral_core.models import ControlCoupling
from staircase_toolkit.spectral_core.operations import coupling_matrix
from staircase_toolkit.spectral_core.operations import min_on_grid

from .models import FeasibilityProblem
from .models import FeasibilityResult
from .models import FeasibilityVerdict
from .models import SolverMethod

logger = logging.getLogger(__name__)

MAX_TIGHTENING_ROUNDS = 4
# residual below which the dual certifies an empty constraint set
INFEASIBLE_RESIDUAL = 1e-10


@dataclass(frozen=True)
class LdpOutcome:
    """Verdict and minimizer of min |z| subject to G z >= h."""

    verdict: FeasibilityVerdict
    solution: np.ndarray | None
    iterations: int


@dataclass(frozen=True, eq=False)
class _Discretization:
    """Affine maps from whitened control coordinates to constraint values and endpoint modes."""

    whitening: np.ndarray
    grid_base: np.ndarray
    grid_response: np.ndarray
    endpoint_gap: np.ndarray
    endpoint_response: np.ndarray
    coupling: ControlCoupling


def _discretize(problem: FeasibilityProblem) -> _Discretization:
    spec, initial = problem.spec, problem.initial
    basis = initial.basis
    modes, knots = initial.mode_count, problem.knots
    matched = problem.control_modes + 1
    step = problem.horizon / knots

    coupling = coupling_matrix(spec.omega, basis)
    try:
        factor = scipy.linalg.cholesky(coupling.matrix[:matched, :matched], lower=True)
    except scipy.linalg.LinAlgError as exc:
        msg = "control window Gram matrix is not positive definite"
        raise ConfigurationError(msg) from exc
    whitening = scipy.linalg.solve_triangular(factor.T, np.eye(matched)) / np.sqrt(step)

    dynamics = ModeBlockDynamics(spec, modes, step)
    base = propagate(dynamics, initial.coefficients, knots)
    # state jump after one interval of each unit whitened control
    forcing = np.einsum("pq,qr,ic->pirc", coupling.leading(matched), whitening, spec.B)
    jumps = np.empty((knots, modes, spec.n, matched, spec.m))
    jumps[0] = np.einsum("pij,pjrc->pirc", dynamics.source_weights, forcing)
    for lag in range(1, knots):
        jumps[lag] = np.einsum("pij,pjrc->pirc", dynamics.propagators, jumps[lag - 1])
    response = np.zeros((knots, modes, spec.n, knots, matched, spec.m))
    for k in range(knots):
        for j in range(k + 1):
            response[k, :, :, j] = jumps[k - j]
    variables = knots * matched * spec.m

    values = basis.evaluate(basis.grid(problem.space_points))
    grid_base = np.einsum("xp,kpi->kxi", values, base[1:]).reshape(-1)
    grid_response = np.einsum("xp,kpijrc->kxijrc", values, response).reshape(-1, variables)

    target_end = free_state_at(spec, problem.target_start, problem.horizon)
    endpoint_gap = (target_end.coefficients - base[-1])[:matched].reshape(-1)
    endpoint_response = response[-1, :matched].reshape(-1, variables)
    return _Discretization(
        whitening=whitening,
        grid_base=grid_base,
        grid_response=grid_response,
        endpoint_gap=endpoint_gap,
        endpoint_response=endpoint_response,
        coupling=coupling,
    )


def _normalized_rows(G: np.ndarray, h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    scale = np.linalg.norm(np.column_stack([G, h]), axis=1)
    scale[scale == 0.0] = 1.0
    return G / scale[:, None], h / scale


def _ldp_active_set(G: np.ndarray, h: np.ndarray) -> LdpOutcome:
    """min |z| subject to G z >= h, through the nonnegative least-squares dual."""
    dimension = G.shape[1]
    stacked = np.vstack([G.T, h[None, :]])
    rhs = np.zeros(dimension + 1)
    rhs[-1] = 1.0
    try:
        weights, _ = scipy.optimize.nnls(stacked, rhs, maxiter=50 * stacked.shape[1])
    except RuntimeError:
        return LdpOutcome(FeasibilityVerdict.INDETERMINATE, None, 0)
    residual = stacked @ weights - rhs
    if np.linalg.norm(residual) <= INFEASIBLE_RESIDUAL:
        return LdpOutcome(FeasibilityVerdict.INFEASIBLE, None, 0)
    return LdpOutcome(FeasibilityVerdict.FEASIBLE, -residual[:-1] / residual[-1], 0)


def _ldp_nesterov(
    G: np.ndarray,
    h: np.ndarray,
    max_iter: int,
    kkt_tol: float,
) -> LdpOutcome:
    """Accelerated projected gradient on the dual max_{l >= 0} h.l - |G^T l|^2 / 2."""
    lipschitz = scipy.linalg.norm(G, 2) ** 2
    if lipschitz == 0.0:
        verdict = FeasibilityVerdict.FEASIBLE if np.all(h <= 0.0) else FeasibilityVerdict.INFEASIBLE
        solution = np.zeros(G.shape[1]) if verdict is FeasibilityVerdict.FEASIBLE else None
        return LdpOutcome(verdict, solution, 0)
    multipliers = np.zeros(h.size)
    momentum, t = multipliers.copy(), 1.0
    for iteration in range(1, max_iter + 1):
        gradient = G @ (G.T @ momentum) - h
        updated = np.maximum(0.0, momentum - gradient / lipschitz)
        t_next = (1.0 + np.sqrt(1.0 + 4.0 * t * t)) / 2.0
        momentum = updated + ((t - 1.0) / t_next) * (updated - multipliers)
        multipliers, t = updated, t_next

        z = G.T @ multipliers
        slack = G @ z - h
        kkt = max(float(np.maximum(0.0, -slack).max()), float(np.abs(multipliers * slack).max()))
        if kkt <= kkt_tol:
            return LdpOutcome(FeasibilityVerdict.FEASIBLE, z, iteration)
        size = np.linalg.norm(multipliers)
        if iteration % 100 == 0 and size > 0.0:
            direction = multipliers / size
            # Farkas: G^T d = 0, h.d > 0 with d >= 0 empties the constraint set
            if np.linalg.norm(G.T @ direction) <= kkt_tol and h @ direction > kkt_tol:
                return LdpOutcome(FeasibilityVerdict.INFEASIBLE, None, iteration)
    return LdpOutcome(FeasibilityVerdict.INDETERMINATE, None, max_iter)


def least_distance(
    G: np.ndarray,
    h: np.ndarray,
    method: SolverMethod | str = SolverMethod.ACTIVE_SET,
    *,
    max_iter: int = FEASIBILITY_MAX_ITER,
    kkt_tol: float = FEASIBILITY_KKT_TOL,
) -> LdpOutcome:
    if SolverMethod(method) is SolverMethod.NESTEROV:
        return _ldp_nesterov(G, h, max_iter, kkt_tol)
    return _ldp_active_set(G, h)


def _control_from(problem: FeasibilityProblem, disc: _Discretization, w: np.ndarray) -> ControlSignal:
    matched = problem.control_modes + 1
    whitened = w.reshape(problem.knots, matched, problem.spec.m)
    coefficients = np.einsum("qr,krc->kqc", disc.whitening, whitened)
    return ControlSignal(0.0, problem.horizon / problem.knots, coefficients, disc.coupling)


def _audit(problem: FeasibilityProblem, control: ControlSignal) -> tuple[float, float]:
    """Minimum state and endpoint defect on the refined grid."""
    factor = problem.audit_factor
    fine = ControlSignal(
        0.0, control.step / factor, np.repeat(control.coefficients, factor, axis=0), control.coupling,
    )
    run = controlled_evolve(
        problem.spec,
        problem.initial,
        fine,
        problem.horizon,
        problem.knots * factor,
        0.0,
        problem.space_points * factor,
    )
    matched = problem.control_modes + 1
    target_end = free_state_at(problem.spec, problem.target_start, problem.horizon)
    defect = np.linalg.norm((run.final.coefficients - target_end.coefficients)[:matched])
    return float(run.minima.min()), float(defect)


def feasibility(
    problem: FeasibilityProblem,
    *,
    steer_tol: float = STEER_TOL,
    certify_tol: float = CERTIFY_TOL,
    max_iter: int = FEASIBILITY_MAX_ITER,
    kkt_tol: float = FEASIBILITY_KKT_TOL,
    max_rounds: int = MAX_TIGHTENING_ROUNDS,
) -> FeasibilityResult:
    if problem.constrained:
        start = float(min_on_grid(problem.initial, problem.space_points * problem.audit_factor).min())
        if start < -problem.floor - certify_tol:
            result = FeasibilityResult(
                FeasibilityVerdict.INFEASIBLE,
                problem.horizon,
                start,
                float("nan"),
                message="initial state is already below the floor",
            )
            _log(result)
            return result
    disc = _discretize(problem)
    E, gap = disc.endpoint_response, disc.endpoint_gap
    particular, *_ = scipy.linalg.lstsq(E, gap)
    unreachable = float(np.linalg.norm(E @ particular - gap))
    if unreachable > steer_tol:
        result = FeasibilityResult(
            FeasibilityVerdict.INFEASIBLE,
            problem.horizon,
            float("nan"),
            unreachable,
            message="endpoint modes are out of reach of the control",
        )
        _log(result)
        return result
    null = scipy.linalg.null_space(E)

    w, iterations, rounds, margin = particular, 0, 0, 0.0
    control = _control_from(problem, disc, w)
    min_state, defect = _audit(problem, control)
    while problem.constrained and min_state < -problem.floor - certify_tol:
        if rounds > max_rounds:
            result = FeasibilityResult(
                FeasibilityVerdict.INDETERMINATE,
                problem.horizon,
                min_state,
                defect,
                control,
                iterations,
                rounds - 1,
                "audit grid violation persisted after tightening",
            )
            _log(result)
            return result
        if rounds:
            margin += -problem.floor - min_state
        G = disc.grid_response @ null
        h = -problem.floor + margin - disc.grid_base - disc.grid_response @ particular
        G, h = _normalized_rows(G, h)
        outcome = least_distance(G, h, problem.method, max_iter=max_iter, kkt_tol=kkt_tol)
        iterations += outcome.iterations
        if outcome.verdict is not FeasibilityVerdict.FEASIBLE:
            result = FeasibilityResult(
                outcome.verdict,
                problem.horizon,
                min_state,
                defect,
                None,
                iterations,
                rounds,
                "constraint set is empty" if outcome.verdict is FeasibilityVerdict.INFEASIBLE
                else "dual iteration did not converge",
            )
            _log(result)
            return result
        w = particular + null @ outcome.solution
        control = _control_from(problem, disc, w)
        min_state, defect = _audit(problem, control)
        rounds += 1

    verdict = FeasibilityVerdict.FEASIBLE if defect <= steer_tol else FeasibilityVerdict.INDETERMINATE
    result = FeasibilityResult(
        verdict,
        problem.horizon,
        min_state,
        defect,
        control,
        iterations,
        max(rounds - 1, 0),
        "" if verdict is FeasibilityVerdict.FEASIBLE else "endpoint defect above tolerance",
    )
    _log(result)
    return result


def _log(result: FeasibilityResult):
    logger.info(
        "Feasibility at T=%.6g: %s (min state %.6g, endpoint defect %.3e, |U|=%s)",
        result.horizon,
        result.verdict,
        result.min_state,
        result.endpoint_defect,
        "-" if result.control is None else f"{result.control_norm:.6e}",
    )
