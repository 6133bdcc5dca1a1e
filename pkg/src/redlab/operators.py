"""Linear measurement operators and spectral-norm estimation.

Operators map flat row-major vectors; imaging operators reshape internally.
Every operator exposes `forward`, `adjoint`, and the composition `gram`
(adjoint of forward), and is immutable after construction.
"""

from dataclasses import dataclass

import numpy as np

from .images import CyclicConvolver, Kernel2D
from .rng import RngState, gaussian_samples


class LinearOperator:
    """Base for linear maps R^n -> R^m with an explicit adjoint.

    Subclasses set `n` and `m` in their constructor and implement
    `forward` and `adjoint` on flat float64 vectors.
    """

    n = 0
    m = 0

    def forward(self, x):
        raise NotImplementedError

    def adjoint(self, u):
        raise NotImplementedError

    def gram(self, v):
        """A^T A v; the Hessian map of the least-squares fidelity."""
        return self.adjoint(self.forward(v))

    def _check_domain(self, x):
        x = np.asarray(x, dtype=np.float64).reshape(-1)
        if x.size != self.n:
            raise ValueError(f"expected domain dimension {self.n}, got {x.size}")
        return x

    def _check_range(self, u):
        u = np.asarray(u, dtype=np.float64).reshape(-1)
        if u.size != self.m:
            raise ValueError(f"expected range dimension {self.m}, got {u.size}")
        return u


class MatrixOperator(LinearOperator):
    """Dense matrix wrapped as an operator; mainly for tests and tiny cases."""

    def __init__(self, matrix):
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.ndim != 2:
            raise ValueError("matrix must be 2D")
        if not np.all(np.isfinite(matrix)):
            raise ValueError("matrix entries must be finite")
        matrix = matrix.copy()
        matrix.flags.writeable = False
        self.matrix = matrix
        self.m, self.n = matrix.shape

    def forward(self, x):
        return self.matrix @ self._check_domain(x)

    def adjoint(self, u):
        return self.matrix.T @ self._check_range(u)


class DeblurOperator(LinearOperator):
    """Periodic 2D convolution with a fixed blur kernel; square (m == n)."""

    def __init__(self, shape, kernel):
        h, w = int(shape[0]), int(shape[1])
        if h < 1 or w < 1:
            raise ValueError("image shape must be positive")
        if not isinstance(kernel, Kernel2D):
            raise ValueError("kernel must be a Kernel2D")
        if kernel.size > min(h, w):
            raise ValueError(
                f"kernel size {kernel.size} exceeds image extent {h}x{w}"
            )
        self.shape = (h, w)
        self.kernel = kernel
        self._conv = CyclicConvolver((h, w), kernel)
        self.n = h * w
        self.m = h * w

    def forward(self, x):
        x = self._check_domain(x)
        return self._conv.apply(x.reshape(self.shape)).reshape(-1)

    def adjoint(self, u):
        u = self._check_range(u)
        return self._conv.apply_adjoint(u.reshape(self.shape)).reshape(-1)


class CompressiveSensingOperator(LinearOperator):
    """Dense random projection with orthonormal rows (so A A^T == I_m)."""

    def __init__(self, matrix, seed):
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[0] >= matrix.shape[1]:
            raise ValueError("expected an m x n matrix with m < n")
        matrix = matrix.copy()
        matrix.flags.writeable = False
        self.matrix = matrix
        self.seed = int(seed)
        self.m, self.n = matrix.shape

    def forward(self, x):
        return self.matrix @ self._check_domain(x)

    def adjoint(self, u):
        return self.matrix.T @ self._check_range(u)


def build_cs_operator(m, n, seed):
    """Seeded Gaussian sensing matrix, variance 1/m, rows orthonormalized.

    Orthonormalization is a reduced QR of the transpose with the sign of
    each column fixed so the factor is unique; the rows of the result span
    the same subspace as the sampled rows.
    """
    m = int(m)
    n = int(n)
    if m < 1 or m >= n:
        raise ValueError("need 1 <= m < n for an undersampled operator")
    rng = RngState(seed)
    raw = gaussian_samples(rng, m * n).reshape(m, n) / np.sqrt(m)
    q, r = np.linalg.qr(raw.T, mode="reduced")
    signs = np.sign(np.diag(r))
    signs[signs == 0.0] = 1.0
    return CompressiveSensingOperator((q * signs).T, seed)


@dataclass
class SpectralEstimate:
    """Power-iteration estimate of the largest eigenvalue of A^T A."""

    value: float
    iterations: int
    converged: bool


def spectral_norm_sq(op, iters=200, tol=1e-9, rng=None):
    """Estimate lambda_max(A^T A) by power iteration with Rayleigh quotients.

    Stops when the relative change of the estimate drops below `tol`;
    otherwise runs `iters` rounds and reports the result as unconverged.
    The estimate is monotone non-decreasing across iterations.
    """
    if iters < 1:
        raise ValueError("iters must be at least 1")
    if rng is None:
        rng = RngState(0)
    v = gaussian_samples(rng, op.n)
    nv = np.linalg.norm(v)
    if nv == 0.0:
        raise RuntimeError("degenerate start vector")
    v = v / nv
    estimate = 0.0
    for k in range(1, iters + 1):
        w = op.gram(v)
        rayleigh = float(v @ w)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            # Probe direction annihilated; the quotient cannot improve.
            return SpectralEstimate(max(estimate, rayleigh), k, True)
        if k > 1 and abs(rayleigh - estimate) <= tol * max(abs(rayleigh), 1e-300):
            return SpectralEstimate(rayleigh, k, True)
        estimate = rayleigh
        v = w / nw
    return SpectralEstimate(estimate, iters, False)
