"""Numerical defaults shared by the toolkit.

Settings expose each value as a ``TOOLKIT_*`` variable; the core functions
take them as keyword defaults so they stay usable without Django.
"""

RANK_TOL = 1e-10
P_MAX = 200

MODES = 32
GRID_POINTS = 512

CERTIFY_TOL = 1e-6
STEER_TOL = 1e-6
ACCEPT_TOL = 1e-3
GRAMIAN_FLOOR = 1e-12

TAU = 0.5
STEPS_PER_TAU = 40
CONTROL_MODES = 2
CALIBRATION_SAFETY = 2.0
SHIFT_MARGIN = 0.05
ZERO_MEAN_THRESHOLD = 1e-8
WAIT_TIME_CAP = 100.0

FEASIBILITY_MAX_ITER = 100_000
FEASIBILITY_KKT_TOL = 1e-7
FEASIBILITY_SPACE_POINTS = 128
FEASIBILITY_AUDIT_FACTOR = 4
FEASIBILITY_KNOTS = 16
