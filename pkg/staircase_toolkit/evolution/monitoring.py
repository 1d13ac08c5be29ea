import logging

import numpy as np

from staircase_toolkit.constants import CERTIFY_TOL

from .models import ConstraintReport
from .models import TrajectoryRecord

logger = logging.getLogger(__name__)


def monitor_constraint(
    traj: TrajectoryRecord,
    floor: float,
    certify_tol: float = CERTIFY_TOL,
) -> ConstraintReport:
    below = traj.minima < floor - certify_tol
    violated_times = np.flatnonzero(below.any(axis=1))
    first = float(traj.times[violated_times[0]]) if violated_times.size else None
    report = ConstraintReport(
        floor=float(floor),
        certify_tol=certify_tol,
        violated=bool(violated_times.size),
        worst_minimum=float(traj.minima.min()),
        first_violation_time=first,
        component_minima=tuple(float(value) for value in traj.minima.min(axis=0)),
    )
    if report.violated:
        logger.info(
            "State drops below %.6g at t = %.6g (worst minimum %.6g)",
            floor,
            first,
            report.worst_minimum,
        )
    return report
