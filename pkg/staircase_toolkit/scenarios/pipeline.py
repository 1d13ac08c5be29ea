"""Task pipeline of a scenario run.

Each task runner returns a :class:`TaskRecord`; exceptions raised by the
numerical core are turned into statuses through their exit codes, so one
failing task never stops the others.
"""

from __future__ import annotations

import logging
import math
import warnings
from collections.abc import Callable
from dataclasses import replace
from functools import partial
from pathlib import Path

from django.conf import settings
from django.utils import timezone

from staircase_toolkit import __version__
from staircase_toolkit.evolution.monitoring import monitor_constraint
from staircase_toolkit.evolution.propagation import controlled_evolve
from staircase_toolkit.evolution.propagation import free_evolve
from staircase_toolkit.exceptions import BracketError
from staircase_toolkit.exceptions import NearUncontrollableWarning
from staircase_toolkit.exceptions import ToolkitError
from staircase_toolkit.exceptions import ToolkitValidationError
from staircase_toolkit.hum_control.steering import cost_sweep
from staircase_toolkit.hum_control.steering import free_state_at
from staircase_toolkit.hum_control.steering import lr_steer
from staircase_toolkit.hum_control.steering import steer
from staircase_toolkit.minimal_time.bisection import bisect_minimal_time
from staircase_toolkit.minimal_time.bisection import presweep
from staircase_toolkit.minimal_time.bisection import seed_bracket
from staircase_toolkit.minimal_time.certificate import gamma_certificate
from staircase_toolkit.minimal_time.feasibility import feasibility
from staircase_toolkit.minimal_time.models import FeasibilityProblem
from staircase_toolkit.minimal_time.models import ObstructionVerdict
from staircase_toolkit.minimal_time.obstruction import mass_obstruction
from staircase_toolkit.minimal_time.sturm_liouville import default_probe_ball
from staircase_toolkit.minimal_time.sturm_liouville import export_sl_basis
from staircase_toolkit.minimal_time.sturm_liouville import restrict_to_ball
from staircase_toolkit.minimal_time.sturm_liouville import sl_basis
from staircase_toolkit.staircase.general import plan_general
from staircase_toolkit.staircase.general import run_general
from staircase_toolkit.staircase.identity import plan_identity
from staircase_toolkit.staircase.identity import run_identity
from staircase_toolkit.staircase.models import StaircaseResult
from staircase_toolkit.system_model.kalman import kalman_condition_all_modes
from staircase_toolkit.system_model.structure import validate_structure

from .config import UNHASHED_KEYS
from .config import config_hash
from .config import load_scenario
from .config import read_scenario_file
from .exporters import ArtifactWriter
from .exporters import dumps
from .models import NumericalOptions
from .models import RunManifest
from .models import ScenarioConfig
from .models import TaskName
from .models import TaskRecord
from .models import TaskStatus
from .models import combined_exit_code

logger = logging.getLogger(__name__)

Runner = Callable[[ScenarioConfig, NumericalOptions, ArtifactWriter], TaskRecord]
RUNNERS: dict[TaskName, Runner] = {}

PHASE_FIELDS = ["kind", "index", "start", "end"]
DIAGNOSTIC_FIELDS = ["phase", "index", "start", "defect", "control_norm", "min_state", "end_defect"]
COST_FIELDS = ["tau", "control_norm", "ratio", "gramian_floor"]
ORACLE_FIELDS = ["horizon", "status", "min_state", "endpoint_defect", "control_norm"]
KALMAN_FIELDS = ["p", "eigenvalue", "rank"]


def runner(name: TaskName):
    def register(func: Runner) -> Runner:
        RUNNERS[name] = func
        return func

    return register


def recording_steps(horizon: float, tau: float, steps_per_tau: int) -> int:
    return max(steps_per_tau, math.ceil(steps_per_tau * horizon / tau))


@runner(TaskName.VALIDATE)
def _validate(config, options, writer):
    report = validate_structure(config.spec, options.rank_tol)
    writer.json("structure.json", report.as_dict())
    return TaskRecord(
        TaskName.VALIDATE,
        TaskStatus.SUCCEEDED,
        {
            "is_elliptic": report.is_elliptic,
            "ellipticity": report.ellipticity,
            "is_diagonal_D": report.is_diagonal_D,
            "is_scalar_D": report.is_scalar_D,
            "is_quasipositive_A": report.is_quasipositive_A,
            "eigenvalues_nonneg_real": report.eigenvalues_nonneg_real,
        },
    )


@runner(TaskName.KALMAN)
def _kalman(config, options, writer):
    verdict = kalman_condition_all_modes(config.spec, config.parameters.p_max, options.rank_tol)
    writer.json("kalman.json", verdict.as_dict())
    writer.csv(
        "kalman_ranks.csv",
        KALMAN_FIELDS,
        [{"p": p, "eigenvalue": (p * math.pi) ** 2, "rank": rank} for p, rank in enumerate(verdict.ranks)],
    )
    message = "" if verdict.satisfied_up_to_p_max else f"rank drops at mode {verdict.failed_at}"
    return TaskRecord(
        TaskName.KALMAN,
        TaskStatus.SUCCEEDED,
        {
            "p_max": verdict.p_max,
            "satisfied": verdict.satisfied_up_to_p_max,
            "failed_at": verdict.failed_at,
            "exhaustive": verdict.exhaustive,
        },
        message,
    )


@runner(TaskName.FREE)
def _free(config, options, writer):
    parameters = config.parameters
    steps = recording_steps(parameters.horizon, parameters.tau, parameters.steps)
    trajectory = free_evolve(config.spec, config.initial, parameters.horizon, steps, grid_points=options.grid_points)
    constraint = monitor_constraint(trajectory, 0.0, options.certify_tol)
    writer.trajectory("free_trajectory.csv", trajectory)
    writer.json("free_constraint.json", constraint.as_dict())
    return TaskRecord(
        TaskName.FREE,
        TaskStatus.SUCCEEDED,
        {
            "horizon": parameters.horizon,
            "worst_minimum": constraint.worst_minimum,
            "violated": constraint.violated,
            "final_l2_norm": trajectory.final.l2_norm(),
        },
        "free run leaves the nonnegative cone" if constraint.violated else "",
    )


@runner(TaskName.STEER)
def _steer(config, options, writer):
    spec, parameters = config.spec, config.parameters
    tau = parameters.tau
    if parameters.stages > 1:
        target_run = free_evolve(spec, config.target, tau, parameters.stages * parameters.steps)
        control, report = lr_steer(
            spec,
            config.initial,
            target_run,
            0.0,
            tau,
            parameters.stages,
            min_modes=parameters.control_modes,
            steps_per_stage=parameters.steps,
            envelope=parameters.envelope,
            gramian_floor=options.gramian_floor,
        )
    else:
        control, report = steer(
            spec,
            config.initial,
            free_state_at(spec, config.target, tau),
            0.0,
            tau,
            parameters.control_modes,
            steps=parameters.steps,
            envelope=parameters.envelope,
            reference_start=config.target,
            gramian_floor=options.gramian_floor,
            steer_tol=options.steer_tol,
        )
    trajectory = controlled_evolve(
        spec, config.initial, control, tau, control.steps, grid_points=options.grid_points,
    )
    reference = free_evolve(spec, config.target, tau, control.steps, grid_points=options.grid_points)
    trajectory = trajectory.tracking(reference)
    writer.trajectory("steer_trajectory.csv", trajectory)
    writer.control("steer_control.csv", control)
    writer.json("steer_cost.json", report.as_dict())
    return TaskRecord(
        TaskName.STEER,
        TaskStatus.SUCCEEDED,
        {
            "tau": tau,
            "stages": parameters.stages,
            "control_norm": report.control_norm,
            "ratio": report.ratio,
            "controlled_defect": report.controlled_defect,
            "tail_defect": report.tail_defect,
            "terminal_error": float(trajectory.reference_distance[-1]),
            "gramian_floor": report.gramian_floor,
        },
    )


@runner(TaskName.COST_SWEEP)
def _cost_sweep(config, options, writer):
    parameters = config.parameters
    taus = parameters.tau_values
    reports = []
    if taus:
        reports = cost_sweep(
            config.spec,
            config.initial,
            config.target,
            taus,
            parameters.control_modes,
            min(taus) / parameters.steps,
            envelope=parameters.envelope,
            gramian_floor=options.gramian_floor,
        )
    writer.csv(
        "cost_sweep.csv",
        COST_FIELDS,
        [
            {
                "tau": report.horizon,
                "control_norm": report.control_norm,
                "ratio": report.ratio,
                "gramian_floor": report.gramian_floor,
            }
            for report in reports
        ],
    )
    writer.json("cost_sweep.json", {"reports": [report.as_dict() for report in reports]})
    ordered = sorted(reports, key=lambda report: report.horizon)
    norms = [report.control_norm for report in ordered]
    return TaskRecord(
        TaskName.COST_SWEEP,
        TaskStatus.SUCCEEDED,
        {
            "horizons": len(reports),
            "slope": reports[0].slope if reports else None,
            "strictly_decreasing": all(a > b for a, b in zip(norms, norms[1:], strict=False)),
            "largest_norm": max(norms, default=None),
        },
    )


def _staircase_record(name: TaskName, prefix: str, result: StaircaseResult, writer) -> TaskRecord:
    writer.json(f"{prefix}.json", result.as_dict())
    writer.trajectory(f"{prefix}_trajectory.csv", result.trajectory)
    writer.control(f"{prefix}_control.csv", result.control)
    writer.csv(
        f"{prefix}_phases.csv",
        PHASE_FIELDS,
        [{"kind": str(p.kind), "index": p.index, "start": p.start, "end": p.end} for p in result.phases],
    )
    writer.csv(
        f"{prefix}_steps.csv",
        DIAGNOSTIC_FIELDS,
        [
            {
                "phase": str(d.phase),
                "index": d.index,
                "start": d.start,
                "defect": d.defect,
                "control_norm": d.control_norm,
                "min_state": d.min_state,
                "end_defect": d.end_defect,
            }
            for d in result.diagnostics
        ],
    )
    plan = result.plan
    summary = {
        "tau": plan.tau,
        "step_count": plan.step_count,
        "delta": plan.delta,
        "floor": plan.floor,
        "terminal_time": plan.terminal_time,
        "terminal_error": result.terminal_error,
        "worst_minimum": result.constraint.worst_minimum,
        "control_norm": result.control.l2_norm(),
        "matched": result.matched,
        "feasible": result.feasible,
    }
    if result.feasible:
        return TaskRecord(name, TaskStatus.SUCCEEDED, summary)
    problems = []
    if not result.matched:
        problems.append(f"terminal error {result.terminal_error:.3e} above {result.accept_tol:.1e}")
    if result.constraint.violated:
        problems.append(f"state reaches {result.constraint.worst_minimum:.6g} below the floor {plan.floor:.6g}")
    return TaskRecord(name, TaskStatus.NOT_CONVERGED, summary, "; ".join(problems))


@runner(TaskName.STAIRCASE_IDENTITY)
def _staircase_identity(config, options, writer):
    parameters = config.parameters
    plan = plan_identity(
        config.spec,
        config.initial,
        config.target,
        parameters.tau,
        control_modes=parameters.control_modes,
        steps=parameters.steps,
        envelope=parameters.envelope,
        certify_tol=options.certify_tol,
        gramian_floor=options.gramian_floor,
        grid_points=options.grid_points,
        rank_tol=options.rank_tol,
    )
    result = run_identity(
        config.spec,
        plan,
        config.initial,
        config.target,
        accept_tol=options.accept_tol,
        certify_tol=options.certify_tol,
        gramian_floor=options.gramian_floor,
        grid_points=options.grid_points,
    )
    return _staircase_record(TaskName.STAIRCASE_IDENTITY, "staircase_identity", result, writer)


@runner(TaskName.STAIRCASE_GENERAL)
def _staircase_general(config, options, writer):
    parameters = config.parameters
    plan = plan_general(
        config.spec,
        config.initial,
        config.target,
        parameters.tau,
        parameters.epsilon,
        zeta_floor=parameters.zeta_floor,
        control_modes=parameters.control_modes,
        steps=parameters.steps,
        envelope=parameters.envelope,
        certify_tol=options.certify_tol,
        gramian_floor=options.gramian_floor,
        grid_points=options.grid_points,
        rank_tol=options.rank_tol,
    )
    result = run_general(
        config.spec,
        plan,
        config.initial,
        config.target,
        accept_tol=options.accept_tol,
        certify_tol=options.certify_tol,
        gramian_floor=options.gramian_floor,
        grid_points=options.grid_points,
    )
    record = _staircase_record(TaskName.STAIRCASE_GENERAL, "staircase_general", result, writer)
    return replace(record, summary={**record.summary, "epsilon": parameters.epsilon, "shift": plan.shift})


@runner(TaskName.MINIMAL_TIME)
def _minimal_time(config, options, writer):
    parameters = config.parameters
    oracle = partial(
        feasibility,
        steer_tol=options.steer_tol,
        certify_tol=options.certify_tol,
        max_iter=options.feasibility_max_iter,
        kkt_tol=options.feasibility_kkt_tol,
    )
    template = FeasibilityProblem(
        spec=config.spec,
        initial=config.initial,
        target_start=config.target,
        horizon=parameters.t_hi,
        floor=parameters.floor_m,
        knots=parameters.knots,
        control_modes=parameters.control_modes,
    )
    prior = []
    bracket = (parameters.t_lo, parameters.t_hi)
    if parameters.t_grid:
        prior = presweep(template, parameters.t_grid, oracle)
        bracket = seed_bracket(prior)
    result = bisect_minimal_time(
        template, *bracket, parameters.bisection_iterations, oracle=oracle, prior_calls=prior,
    )
    writer.csv("minimal_time_oracle.csv", ORACLE_FIELDS, [call.row() for call in result.calls])

    ball = default_probe_ball(config.spec.omega)
    basis = sl_basis(float(config.spec.A[0, 0]), parameters.sl_modes)
    certificate = gamma_certificate(
        restrict_to_ball(config.initial, ball, 0, basis, parameters.probe_samples),
        restrict_to_ball(config.target, ball, 0, basis, parameters.probe_samples),
        basis,
    )
    export_sl_basis(basis, writer.path_for("sturm_liouville.csv"))

    payload = {
        "bisection": result.as_dict(),
        "certificate": certificate.as_dict(),
        "probe_ball": {"center": ball.center, "radius": ball.radius},
    }
    summary = {
        "estimate": result.estimate,
        "bracket_low": result.bracket[0],
        "bracket_high": result.bracket[1],
        "oracle_calls": len(result.calls),
        "non_monotone": len(result.non_monotone),
        "certificate_spread": certificate.spread,
        "certifies_positive_time": certificate.certifies_positive_time,
    }
    if parameters.refine:
        # Twice the modes and knots; reported, the estimate above stands either way.
        try:
            refined = bisect_minimal_time(
                template.refined(), *bracket, parameters.bisection_iterations, oracle=oracle,
            )
        except BracketError as exc:
            summary["refined_error"] = str(exc)
        else:
            writer.csv("minimal_time_oracle_refined.csv", ORACLE_FIELDS, [call.row() for call in refined.calls])
            payload["refined"] = refined.as_dict()
            summary["refined_estimate"] = refined.estimate
            summary["relative_change"] = abs(refined.estimate - result.estimate) / result.estimate
    writer.json("minimal_time.json", payload)
    return TaskRecord(TaskName.MINIMAL_TIME, TaskStatus.SUCCEEDED, summary)


@runner(TaskName.OBSTRUCTION)
def _obstruction(config, options, writer):
    verdict = mass_obstruction(config.spec, config.initial, config.target, tol=options.rank_tol)
    at_horizon = mass_obstruction(
        config.spec, config.initial, config.target, config.parameters.horizon, tol=options.rank_tol,
    )
    writer.json("obstruction.json", {"any_horizon": verdict.as_dict(), "at_horizon": at_horizon.as_dict()})
    summary = {
        "verdict": str(verdict.verdict),
        "lower_bound": verdict.lower_bound,
        "upper_bound": verdict.upper_bound,
        "verdict_at_horizon": str(at_horizon.verdict),
        "target_mass_at_horizon": at_horizon.target_mass,
    }
    if verdict.verdict is ObstructionVerdict.OBSTRUCTED:
        message = (
            f"controlled first-component mass stays >= {verdict.lower_bound:.6g}, "
            f"the target's is <= {verdict.upper_bound:.6g}"
        )
        return TaskRecord(TaskName.OBSTRUCTION, TaskStatus.INFEASIBLE, summary, message)
    return TaskRecord(TaskName.OBSTRUCTION, TaskStatus.SUCCEEDED, summary, verdict.reason)


def run_task(name: TaskName, config: ScenarioConfig, options: NumericalOptions, writer: ArtifactWriter) -> TaskRecord:
    first_artifact = len(writer.artifacts)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", NearUncontrollableWarning)
        try:
            record = RUNNERS[name](config, options, writer)
        except ToolkitError as exc:
            record = TaskRecord(name, TaskStatus.from_exit_code(exc.exit_code), message=str(exc))
        except Exception as exc:
            logger.exception("Task %s crashed", name)
            record = TaskRecord(name, TaskStatus.FAILED, message=f"{type(exc).__name__}: {exc}")
    found = [str(w.message) for w in caught if issubclass(w.category, NearUncontrollableWarning)]
    if found:
        record = replace(record, summary={**record.summary, "warnings": found})
    record = replace(record, artifacts=tuple(writer.artifacts[first_artifact:]))
    logger.info("Task %s: %s %s", name, record.status, record.message)
    return record


def default_options() -> NumericalOptions:
    return NumericalOptions.from_settings(settings)


def _write_manifest(manifest: RunManifest) -> RunManifest:
    root = Path(manifest.output_dir)
    root.mkdir(parents=True, exist_ok=True)
    (root / "manifest.json").write_text(dumps(manifest.as_dict()))
    return manifest


def _default_output_dir(config_path: Path) -> Path:
    return Path("results") / Path(config_path).stem


def run_scenario(
    config_path,
    overrides: dict[str, str] | None = None,
    options: NumericalOptions | None = None,
) -> RunManifest:
    """Run every task of a scenario and write its artifacts and manifest."""
    options = options or default_options()
    overrides = overrides or {}
    config_path = Path(config_path)
    started = timezone.now()
    try:
        config = load_scenario(config_path, options, overrides)
    except ToolkitValidationError as exc:
        logger.error("Scenario %s rejected: %s", config_path, exc)  # noqa: TRY400
        finished = timezone.now()
        return _write_manifest(
            RunManifest(
                config_path=str(config_path),
                config_hash="",
                version=__version__,
                output_dir=str(overrides.get("OUTPUT_DIR", _default_output_dir(config_path))),
                started=started.isoformat(),
                finished=finished.isoformat(),
                duration=(finished - started).total_seconds(),
                exit_code=exc.exit_code,
                message=str(exc),
            ),
        )

    writer = ArtifactWriter(config.output_dir)
    mapping = {key: value for key, value in config.mapping.items() if key not in UNHASHED_KEYS}
    writer.json("scenario.json", {"mapping": mapping, "parameters": config.parameters.as_dict()})
    records = tuple(run_task(name, config, options, writer) for name in config.tasks)
    finished = timezone.now()
    manifest = RunManifest(
        config_path=str(config_path),
        config_hash=config_hash(config.mapping),
        version=__version__,
        output_dir=str(config.output_dir),
        started=started.isoformat(),
        finished=finished.isoformat(),
        duration=(finished - started).total_seconds(),
        exit_code=combined_exit_code(record.exit_code for record in records),
        tasks=records,
        artifacts=tuple(writer.artifacts),
    )
    logger.info("Scenario %s finished with exit code %d", config.name, manifest.exit_code)
    return _write_manifest(manifest)


def base_mapping(config_path, overrides: dict[str, str]) -> dict[str, str]:
    mapping, _ = read_scenario_file(Path(config_path))
    return {**mapping, **overrides}
