import logging
from fractions import Fraction

import numpy as np
import sympy

from staircase_toolkit.constants import P_MAX
from staircase_toolkit.constants import RANK_TOL

from .models import KalmanVerdict
from .models import SystemSpec
from .structure import validate_structure

logger = logging.getLogger(__name__)

_LAMBDA = sympy.Symbol("lambda")


def kalman_matrix(spec: SystemSpec, lam: float) -> np.ndarray:
    """Block matrix [M^(n-1) B | ... | M B | B] with M = -lam D + A."""
    M = -lam * spec.D + spec.A
    blocks = [spec.B]
    for _ in range(spec.n - 1):
        blocks.append(M @ blocks[-1])
    return np.block(blocks[::-1])


def numerical_rank(matrix: np.ndarray, tol: float = RANK_TOL) -> int:
    # Column scaling leaves the rank unchanged and removes the spread of
    # magnitudes between the powers of M.
    norms = np.linalg.norm(matrix, axis=0)
    scaled = matrix[:, norms > 0] / norms[norms > 0]
    if scaled.size == 0:
        return 0
    sigma = np.linalg.svd(scaled, compute_uv=False)
    if sigma[0] == 0.0:
        return 0
    return int(np.sum(sigma > tol * sigma[0]))


def kalman_rank(spec: SystemSpec, lam: float, tol: float = RANK_TOL) -> int:
    return numerical_rank(kalman_matrix(spec, lam), tol)


def _rational(value) -> sympy.Rational:
    if isinstance(value, sympy.Rational):
        return value
    if isinstance(value, int | np.integer):
        return sympy.Integer(int(value))
    if isinstance(value, Fraction):
        return sympy.Rational(value.numerator, value.denominator)
    return sympy.Rational(float(value))


def _fraction_free_rank(rows: list[list[sympy.Poly]]) -> int:
    """Rank by Bareiss elimination; every division is exact."""
    if not rows:
        return 0
    mat = [list(row) for row in rows]
    n_rows, n_cols = len(mat), len(mat[0])
    previous = sympy.Poly(1, _LAMBDA, domain="QQ")
    rank = 0
    for col in range(n_cols):
        pivot_row = next(
            (r for r in range(rank, n_rows) if not mat[r][col].is_zero),
            None,
        )
        if pivot_row is None:
            continue
        mat[rank], mat[pivot_row] = mat[pivot_row], mat[rank]
        pivot = mat[rank][col]
        for r in range(rank + 1, n_rows):
            factor = mat[r][col]
            for c in range(col + 1, n_cols):
                mat[r][c] = (pivot * mat[r][c] - factor * mat[rank][c]).exquo(
                    previous,
                )
            mat[r][col] = sympy.Poly(0, _LAMBDA, domain="QQ")
        previous = pivot
        rank += 1
        if rank == n_rows:
            break
    return rank


def exact_kalman_rank(
    spec: SystemSpec,
    lam: float | Fraction | None = None,
    *,
    mode: int | None = None,
) -> int:
    """Kalman rank in exact arithmetic.

    Either a rational ``lam`` is substituted, or ``mode`` selects
    lam = (mode * pi)^2. For mode >= 1 that value is transcendental, so the
    rank there equals the rank over the field of rational functions in lam.
    """
    if (lam is None) == (mode is None):
        msg = "give exactly one of lam or mode"
        raise ValueError(msg)
    generic = mode is not None and mode > 0
    if mode == 0:
        lam = 0

    def entry(value) -> sympy.Poly:
        return sympy.Poly(_rational(value), _LAMBDA, domain="QQ")

    n, m = spec.n, spec.m
    if generic:
        M = [
            [
                sympy.Poly(
                    -_LAMBDA * _rational(spec.D[i, j]) + _rational(spec.A[i, j]),
                    _LAMBDA,
                    domain="QQ",
                )
                for j in range(n)
            ]
            for i in range(n)
        ]
    else:
        M = [
            [entry(-_rational(lam) * _rational(spec.D[i, j]) + _rational(spec.A[i, j]))
             for j in range(n)]
            for i in range(n)
        ]
    blocks = [[[entry(spec.B[i, c]) for c in range(m)] for i in range(n)]]
    zero = sympy.Poly(0, _LAMBDA, domain="QQ")
    for _ in range(n - 1):
        last = blocks[-1]
        product = [
            [sum((M[i][k] * last[k][c] for k in range(n)), zero) for c in range(m)]
            for i in range(n)
        ]
        blocks.append(product)
    rows = [
        [value for block in blocks[::-1] for value in block[i]]
        for i in range(n)
    ]
    return _fraction_free_rank(rows)


def kalman_condition_all_modes(
    spec: SystemSpec,
    p_max: int = P_MAX,
    tol: float = RANK_TOL,
) -> KalmanVerdict:
    if p_max < 1:
        msg = f"p_max must be at least 1, got {p_max}"
        raise ValueError(msg)
    ranks = tuple(
        kalman_rank(spec, (p * np.pi) ** 2, tol) for p in range(p_max + 1)
    )
    failed_at = next((p for p, rank in enumerate(ranks) if rank < spec.n), None)

    reduced_rank = None
    exhaustive = False
    if validate_structure(spec, tol).is_scalar_D:
        # With D = cI the Krylov space of -lam c I + A equals that of A.
        reduced_rank = kalman_rank(spec, 0.0, tol)
        exhaustive = True

    verdict = KalmanVerdict(
        p_max=p_max,
        satisfied_up_to_p_max=failed_at is None,
        failed_at=failed_at,
        ranks=ranks,
        reduced_rank=reduced_rank,
        exhaustive=exhaustive,
    )
    if failed_at is None:
        logger.info("Kalman condition holds for modes 0..%d", p_max)
    else:
        logger.info("Kalman condition fails at mode %d", failed_at)
    return verdict
