import logging
import warnings

import numpy as np
import scipy.integrate
import scipy.linalg

from staircase_toolkit.constants import GRAMIAN_FLOOR
from staircase_toolkit.evolution.models import ModeBlockDynamics
from staircase_toolkit.exceptions import ControlSynthesisError
from staircase_toolkit.exceptions import NearUncontrollableWarning
from staircase_toolkit.exceptions import StructuralError
from staircase_toolkit.spectral_core.models import ControlCoupling
from staircase_toolkit.spectral_core.models import NeumannBasis
from staircase_toolkit.system_model.models import SystemSpec

from .envelopes import envelope_values
from .models import ControlSignal
from .models import Envelope
from .models import GramianOperator
from .models import GramianRule

logger = logging.getLogger(__name__)


def _check_levels(basis: NeumannBasis, coupling: ControlCoupling, control_modes: int) -> int:
    state_modes = control_modes + 1
    if control_modes < 0 or state_modes > min(basis.mode_count, coupling.mode_count):
        msg = (
            f"cannot control modes 0..{control_modes} with {basis.mode_count} "
            f"basis modes and a {coupling.mode_count}-mode coupling"
        )
        raise StructuralError(msg)
    return state_modes


def _gram_blocks(coupling: ControlCoupling, state_modes: int) -> np.ndarray:
    return coupling.matrix[:state_modes, :state_modes]


def _assemble(weights: np.ndarray, gram: np.ndarray, responses: np.ndarray) -> np.ndarray:
    """Sum over k of weights[k] G[p, q] Y_k[p] Y_k[q]^T, flattened to (p n, q n)."""
    blocks = np.einsum("k,pq,kpic,kqjc->piqj", weights, gram, responses, responses)
    size = responses.shape[1] * responses.shape[2]
    matrix = blocks.reshape(size, size)
    return (matrix + matrix.T) / 2.0


def integrator_responses(spec: SystemSpec, state_modes: int, tau: float, steps: int) -> np.ndarray:
    """Endpoint response P^(K-1-k) h phi1(M h) B of a unit source on step k.

    Shape (steps, state_modes, n, m).
    """
    dynamics = ModeBlockDynamics(spec, state_modes, tau / steps)
    responses = np.empty((steps, state_modes, spec.n, spec.m))
    current = dynamics.source_weights @ spec.B
    for k in range(steps - 1, -1, -1):
        responses[k] = current
        current = dynamics.propagators @ current
    return responses


def _finish(
    matrix: np.ndarray,
    *,
    tau: float,
    state_modes: int,
    rule: GramianRule,
    envelope: Envelope,
    floor: float,
) -> GramianOperator:
    eigenvalues, eigenvectors = scipy.linalg.eigh(matrix)
    gramian = GramianOperator(
        matrix=matrix,
        horizon=tau,
        state_modes=state_modes,
        rule=rule,
        envelope=envelope,
        smallest_eigenvalue=float(eigenvalues[0]),
        weakest_direction=eigenvectors[:, 0],
    )
    logger.debug(
        "Gramian (%s, %d modes, tau=%.4g): eigenvalues in [%.3e, %.3e]",
        rule,
        state_modes,
        tau,
        eigenvalues[0],
        eigenvalues[-1],
    )
    if eigenvalues[0] < floor:
        warnings.warn(
            NearUncontrollableWarning(
                f"Gramian smallest eigenvalue {eigenvalues[0]:.3e} is below {floor:.1e}",
                float(eigenvalues[0]),
                eigenvectors[:, 0],
            ),
            stacklevel=3,
        )
    return gramian


def build_gramian(
    spec: SystemSpec,
    basis: NeumannBasis,
    coupling: ControlCoupling,
    control_modes: int,
    tau: float,
    quad_steps: int,
    *,
    rule: GramianRule | str = GramianRule.SIMPSON,
    envelope: Envelope | str = Envelope.NONE,
    floor: float = GRAMIAN_FLOOR,
) -> GramianOperator:
    """Gramian of modes 0..control_modes driven by control modes 0..control_modes.

    ``simpson`` integrates the continuous Gramian over quad_steps panels
    (rounded up to even); ``integrator`` is the exact Gramian of the
    exponential stepper with quad_steps steps.
    """
    spec.require_neumann()
    state_modes = _check_levels(basis, coupling, control_modes)
    rule, envelope = GramianRule(rule), Envelope(envelope)
    gram = _gram_blocks(coupling, state_modes)
    if rule is GramianRule.INTEGRATOR:
        step = tau / quad_steps
        responses = integrator_responses(spec, state_modes, tau, quad_steps)
        sigma = (np.arange(quad_steps) + 0.5) / quad_steps
        matrix = _assemble(envelope_values(envelope, sigma) / step, gram, responses)
    else:
        panels = quad_steps + quad_steps % 2
        dynamics = ModeBlockDynamics(spec, state_modes, tau / panels)
        # responses[j] = e^(M (tau - s_j)) B on the nodes s_j = j tau / panels
        responses = np.empty((panels + 1, state_modes, spec.n, spec.m))
        current = np.broadcast_to(spec.B, (state_modes, spec.n, spec.m)).copy()
        for j in range(panels, -1, -1):
            responses[j] = current
            current = dynamics.propagators @ current
        sigma = np.linspace(0.0, 1.0, panels + 1)
        integrand = np.einsum(
            "k,pq,kpic,kqjc->kpiqj",
            envelope_values(envelope, sigma),
            gram,
            responses,
            responses,
        )
        blocks = scipy.integrate.simpson(integrand, dx=tau / panels, axis=0)
        size = state_modes * spec.n
        matrix = blocks.reshape(size, size)
        matrix = (matrix + matrix.T) / 2.0
    return _finish(
        matrix, tau=tau, state_modes=state_modes, rule=rule, envelope=envelope, floor=floor,
    )


class MinimalNormSteering:
    """Minimal-norm steering of the first modes over one horizon.

    Controls are exact for the exponential stepper of ``controlled_evolve``
    with the same number of steps; the norm minimized is the field norm in
    L2(omega x (0, tau)), weighted by 1 / envelope.
    """

    def __init__(
        self,
        spec: SystemSpec,
        coupling: ControlCoupling,
        control_modes: int,
        tau: float,
        steps: int,
        envelope: Envelope | str = Envelope.NONE,
        floor: float = GRAMIAN_FLOOR,
    ):
        spec.require_neumann()
        self.spec = spec
        self.coupling = coupling
        self.control_modes = control_modes
        self.state_modes = _check_levels(NeumannBasis(coupling.mode_count), coupling, control_modes)
        self.tau = tau
        self.steps = steps
        self.step = tau / steps
        self.envelope = Envelope(envelope)
        self.responses = integrator_responses(spec, self.state_modes, tau, steps)
        self.weights = envelope_values(self.envelope, (np.arange(steps) + 0.5) / steps)
        self.gram = _gram_blocks(coupling, self.state_modes)
        self.gramian = _finish(
            _assemble(self.weights / self.step, self.gram, self.responses),
            tau=tau,
            state_modes=self.state_modes,
            rule=GramianRule.INTEGRATOR,
            envelope=self.envelope,
            floor=floor,
        )
        try:
            self._factor = scipy.linalg.cho_factor(self.gramian.matrix)
        except np.linalg.LinAlgError as exc:
            msg = f"Gramian over tau={tau} is not positive definite"
            raise ControlSynthesisError(msg) from exc

    def multiplier(self, defect: np.ndarray) -> np.ndarray:
        """Solve W eta = defect with one step of iterative refinement."""
        defect = np.asarray(defect, dtype=float).reshape(-1)
        eta = scipy.linalg.cho_solve(self._factor, defect)
        residual = defect - self.gramian.matrix @ eta
        return eta + scipy.linalg.cho_solve(self._factor, residual)

    def control_for(self, defect: np.ndarray, t0: float = 0.0) -> ControlSignal:
        """Control moving the endpoint of modes 0..control_modes by ``defect``.

        ``defect`` has shape (state_modes, n).
        """
        eta = self.multiplier(defect).reshape(self.state_modes, self.spec.n)
        coefficients = np.einsum("kqic,qi->kqc", self.responses, eta)
        coefficients *= (self.weights / self.step)[:, None, None]
        return ControlSignal(t0, self.step, coefficients, self.coupling, self.envelope)

    def endpoint_matrix(self) -> np.ndarray:
        """Linear map from flattened control coefficients (k, q, c) to the endpoint."""
        blocks = np.einsum("pq,kpic->pikqc", self.gram, self.responses)
        return blocks.reshape(self.state_modes * self.spec.n, -1)

    def norm_of(self, coefficients: np.ndarray) -> float:
        energy = np.einsum("kqc,qr,krc->", coefficients, self.gram, coefficients)
        return float(np.sqrt(max(energy * self.step, 0.0)))
