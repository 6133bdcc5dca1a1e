"""The denoiser-regularized fixed-point operator, its squared-norm loss, and
cost accounting.

For a fidelity g and denoiser D with weight tau, the residual operator is

    G(x) = grad g(x) + tau * (x - D(x))

and the scalar loss driving the monotone solver is phi(x) = 0.5 * ||G(x)||^2
with gradient  A^T A G(x) + tau * (I - J_D(x))^T G(x)  for quadratic g.
"""

from dataclasses import dataclass, replace

import numpy as np


@dataclass
class EvalCounters:
    """Evaluation counts accumulated over one solver run.

    Hessian products of the quadratic fidelity are realized as one operator
    forward plus one adjoint, so they show up in those two counters rather
    than in a counter of their own.
    """

    denoiser_applies: int = 0
    vjp_evals: int = 0
    operator_forwards: int = 0
    operator_adjoints: int = 0
    grad_phi_evals: int = 0

    def snapshot(self):
        return replace(self)


class REDProblem:
    """Bundles fidelity, denoiser, and regularization weight tau.

    Immutable and shareable; evaluation methods are pure and report their
    costs into a caller-owned EvalCounters when one is passed.
    """

    def __init__(self, fidelity, denoiser, tau):
        if tau <= 0:
            raise ValueError("tau must be positive")
        if fidelity.op.n != denoiser.n:
            raise ValueError(
                f"fidelity domain dimension {fidelity.op.n} != denoiser dimension {denoiser.n}"
            )
        self.fidelity = fidelity
        self.denoiser = denoiser
        self.tau = float(tau)

    @property
    def n(self):
        return self.denoiser.n

    def operator_g(self, x, counters=None):
        """G(x); costs one denoiser apply, one forward, one adjoint."""
        x = np.asarray(x, dtype=np.float64).reshape(-1)
        if x.size != self.n:
            raise ValueError(f"expected dimension {self.n}, got {x.size}")
        gx = self.fidelity.gradient(x) + self.tau * (x - self.denoiser.apply(x))
        if counters is not None:
            counters.denoiser_applies += 1
            counters.operator_forwards += 1
            counters.operator_adjoints += 1
        return gx

    def phi(self, x, counters=None):
        """phi(x) = 0.5 * ||G(x)||^2."""
        g = self.operator_g(x, counters)
        return 0.5 * float(g @ g)

    def eval_state(self, x, counters=None):
        """(phi(x), grad phi(x), G(x)) from a single G evaluation.

        grad phi = fidelity Hessian applied to G plus tau times the residual
        VJP at x in the direction G.
        """
        x = np.asarray(x, dtype=np.float64).reshape(-1)
        g = self.operator_g(x, counters)
        grad = self.fidelity.hessian_vp(g) + self.tau * self.denoiser.residual_vjp(x, g)
        if counters is not None:
            counters.operator_forwards += 1
            counters.operator_adjoints += 1
            counters.vjp_evals += 1
            counters.grad_phi_evals += 1
        return 0.5 * float(g @ g), grad, g

    def phi_and_grad(self, x, counters=None):
        phi, grad, _ = self.eval_state(x, counters)
        return phi, grad

    def grad_phi(self, x, counters=None):
        return self.eval_state(x, counters)[1]

    def regularizer_value(self, x, counters=None):
        """Diagnostic (tau/2) <x, x - D(x)>.

        Matches an explicit regularizer only for denoisers that admit one;
        reported as-is for the others.
        """
        x = np.asarray(x, dtype=np.float64).reshape(-1)
        r = x - self.denoiser.apply(x)
        if counters is not None:
            counters.denoiser_applies += 1
        return 0.5 * self.tau * float(x @ r)


def normalized_residual(g_norm_sq, g0_norm_sq):
    """||G(x)||^2 / ||G(x0)||^2; undefined when the start is already a zero."""
    if g0_norm_sq <= 0.0:
        raise ValueError("start point is already a zero of G; residual undefined")
    return g_norm_sq / g0_norm_sq
