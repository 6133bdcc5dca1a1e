"""Denoisers with analytic residual Jacobian products, plus a Lipschitz estimator.

Every denoiser D maps flat vectors of dimension n and exposes products with
the Jacobian of its residual map R(x) = x - D(x):

    residual_vjp(x, v) = (I - J_D(x))^T v
    residual_jvp(x, v) = (I - J_D(x)) v

The `smooth` flag marks denoisers whose products match finite differences
everywhere; `symmetric_jacobian` marks those where the two products agree.
The family spans certified-nonexpansive (smoothing, DCT shrinkage) through
deliberately expansive (scaled variants, a seeded random convnet).
"""

from dataclasses import dataclass

import numpy as np

from .images import CyclicConvolver, conv2d_wrap, dct2_vals, gaussian_kernel, idct2_vals
from .rng import RngState, gaussian_samples


class Denoiser:
    """Base class; subclasses set n and the flags, and implement the maps."""

    n = 0
    symmetric_jacobian = False
    smooth = False
    nominal_lipschitz = None

    def apply(self, x):
        raise NotImplementedError

    def residual(self, x):
        """R(x) = x - D(x)."""
        x = self._check(x)
        return x - self.apply(x)

    def residual_vjp(self, x, v):
        raise NotImplementedError

    def residual_jvp(self, x, v):
        # Transpose products coincide exactly when the Jacobian is symmetric.
        if self.symmetric_jacobian:
            return self.residual_vjp(x, v)
        raise RuntimeError(
            "denoiser has a non-symmetric Jacobian and no forward-mode product"
        )

    def _check(self, x):
        x = np.asarray(x, dtype=np.float64).reshape(-1)
        if x.size != self.n:
            raise ValueError(f"expected dimension {self.n}, got {x.size}")
        return x


class IdentityDenoiser(Denoiser):
    """D(x) = x; the residual map and all its products vanish."""

    symmetric_jacobian = True
    smooth = True
    nominal_lipschitz = 1.0

    def __init__(self, n):
        n = int(n)
        if n < 1:
            raise ValueError("dimension must be positive")
        self.n = n

    def apply(self, x):
        return self._check(x).copy()

    def residual_vjp(self, x, v):
        self._check(x)
        self._check(v)
        return np.zeros(self.n)


class LinearSmoothingDenoiser(Denoiser):
    """Periodic Gaussian smoothing: D(x) = W x with W symmetric, ||W|| <= 1.

    The kernel is normalized, non-negative, truncated at four standard
    deviations, so its largest DFT magnitude sits at DC and equals one.
    """

    symmetric_jacobian = True
    smooth = True
    nominal_lipschitz = 1.0

    def __init__(self, shape, sigma):
        if sigma <= 0:
            raise ValueError("sigma must be positive")
        h, w = int(shape[0]), int(shape[1])
        radius = int(np.ceil(4.0 * sigma))
        size = 2 * radius + 1
        if size > min(h, w):
            raise ValueError(
                f"smoothing kernel size {size} exceeds image extent {h}x{w}"
            )
        self.shape = (h, w)
        self.sigma = float(sigma)
        self.kernel = gaussian_kernel(size, sigma)
        self._conv = CyclicConvolver((h, w), self.kernel)
        self.n = h * w

    def _smooth_vals(self, x):
        return self._conv.apply(x.reshape(self.shape)).reshape(-1)

    def apply(self, x):
        return self._smooth_vals(self._check(x))

    def residual_vjp(self, x, v):
        self._check(x)
        v = self._check(v)
        # Constant symmetric Jacobian W, so the product is v - W v at any x.
        return v - self._smooth_vals(v)


def _smoothed_soft_threshold(c, lam, mu):
    """C^2 soft threshold of coefficients c; returns (values, derivative).

    Outside |c| in (lam - mu, lam + mu) this is the exact soft threshold.
    Inside, the magnitude follows the quartic bridge p(u) = mu*(2w^3 - w^4)
    with w = (u + mu) / (2 mu) and u = |c| - lam, which matches value, slope,
    and curvature at both ends.  The derivative lies in [0, 1].
    """
    a = np.abs(c)
    u = a - lam
    out = np.zeros_like(c)
    deriv = np.zeros_like(c)
    if mu == 0.0:
        # Kink convention: derivative 0 on the threshold boundary itself.
        on = u > 0.0
        out[on] = np.sign(c[on]) * u[on]
        deriv[on] = 1.0
        return out, deriv
    hi = u >= mu
    mid = (~hi) & (u > -mu)
    out[hi] = np.sign(c[hi]) * u[hi]
    deriv[hi] = 1.0
    w = (u[mid] + mu) / (2.0 * mu)
    out[mid] = np.sign(c[mid]) * mu * (2.0 * w**3 - w**4)
    deriv[mid] = 3.0 * w**2 - 2.0 * w**3
    return out, deriv


class DctSoftThresholdDenoiser(Denoiser):
    """Shrinkage of orthonormal DCT coefficients; diagonal symmetric Jacobian.

    smoothing_mu == 0 gives the exact soft threshold (non-smooth at the
    threshold, flagged accordingly); smoothing_mu > 0 gives a twice
    continuously differentiable variant and must stay below the threshold
    so the transition bands do not overlap at zero.
    """

    symmetric_jacobian = True
    nominal_lipschitz = 1.0

    def __init__(self, shape, threshold, smoothing_mu=0.0):
        if threshold <= 0:
            raise ValueError("threshold must be positive")
        if smoothing_mu < 0:
            raise ValueError("smoothing_mu must be non-negative")
        if smoothing_mu > 0 and smoothing_mu >= threshold:
            raise ValueError("smoothing_mu must be smaller than the threshold")
        h, w = int(shape[0]), int(shape[1])
        self.shape = (h, w)
        self.threshold = float(threshold)
        self.smoothing_mu = float(smoothing_mu)
        self.smooth = smoothing_mu > 0
        self.n = h * w

    def apply(self, x):
        x = self._check(x)
        c = dct2_vals(x.reshape(self.shape)).reshape(-1)
        s, _ = _smoothed_soft_threshold(c, self.threshold, self.smoothing_mu)
        return idct2_vals(s.reshape(self.shape)).reshape(-1)

    def residual_vjp(self, x, v):
        x = self._check(x)
        v = self._check(v)
        c = dct2_vals(x.reshape(self.shape)).reshape(-1)
        _, d = _smoothed_soft_threshold(c, self.threshold, self.smoothing_mu)
        cv = dct2_vals(v.reshape(self.shape)).reshape(-1)
        jv = idct2_vals((d * cv).reshape(self.shape)).reshape(-1)
        return v - jv


class ScaledDenoiser(Denoiser):
    """D(x) = s * inner(x); s > 1 over a Lipschitz-1 inner is certified expansive."""

    def __init__(self, inner, scale):
        if scale <= 0:
            raise ValueError("scale must be positive")
        self.inner = inner
        self.scale = float(scale)
        self.n = inner.n
        self.symmetric_jacobian = inner.symmetric_jacobian
        self.smooth = inner.smooth
        if inner.nominal_lipschitz is not None:
            self.nominal_lipschitz = self.scale * inner.nominal_lipschitz

    def apply(self, x):
        return self.scale * self.inner.apply(x)

    def residual_vjp(self, x, v):
        v = self._check(v)
        inner_jv = v - self.inner.residual_vjp(x, v)
        return v - self.scale * inner_jv

    def residual_jvp(self, x, v):
        v = self._check(v)
        inner_jv = v - self.inner.residual_jvp(x, v)
        return v - self.scale * inner_jv


class RandomConvnetDenoiser(Denoiser):
    """D(x) = x - N(x) with N a seeded small convnet; smooth, non-symmetric.

    N chains 3x3 periodic convolutions with tanh between layers (none after
    the last), single channel in and out.  Weights are fixed Gaussian draws
    scaled by weight_scale / sqrt(9 * fan_in), so weight_scale tunes the
    network gain and with it the expansiveness of D.  Jacobian products are
    exact reverse- and forward-mode sweeps through the conv/tanh chain.
    """

    symmetric_jacobian = False
    smooth = True

    def __init__(self, shape, layers, channels, weight_scale, seed):
        if layers not in (2, 3):
            raise ValueError("layers must be 2 or 3")
        channels = int(channels)
        if channels < 1:
            raise ValueError("channels must be positive")
        if weight_scale <= 0:
            raise ValueError("weight_scale must be positive")
        h, w = int(shape[0]), int(shape[1])
        if min(h, w) < 3:
            raise ValueError("image extent must be at least 3 for 3x3 kernels")
        self.shape = (h, w)
        self.layers = layers
        self.channels = channels
        self.weight_scale = float(weight_scale)
        self.seed = int(seed)
        self.n = h * w
        rng = RngState(seed)

        def draw(count, fan_in):
            scale = weight_scale / np.sqrt(9.0 * fan_in)
            return scale * gaussian_samples(rng, count * 9).reshape(count, 3, 3)

        self._w_in = draw(channels, 1)
        self._w_mid = None
        if layers == 3:
            self._w_mid = draw(channels * channels, channels).reshape(
                channels, channels, 3, 3
            )
        self._w_out = draw(channels, channels)
        for arr in (self._w_in, self._w_mid, self._w_out):
            if arr is not None:
                arr.flags.writeable = False

    def _forward(self, x2):
        """Run N, keeping post-tanh activations for the Jacobian sweeps."""
        c = self.channels
        a1 = [np.tanh(conv2d_wrap(x2, self._w_in[i])) for i in range(c)]
        if self.layers == 2:
            out = np.zeros(self.shape)
            for i in range(c):
                out += conv2d_wrap(a1[i], self._w_out[i])
            return out, (a1, None)
        a2 = []
        for j in range(c):
            z = np.zeros(self.shape)
            for i in range(c):
                z += conv2d_wrap(a1[i], self._w_mid[j, i])
            a2.append(np.tanh(z))
        out = np.zeros(self.shape)
        for j in range(c):
            out += conv2d_wrap(a2[j], self._w_out[j])
        return out, (a1, a2)

    def apply(self, x):
        x = self._check(x)
        out, _ = self._forward(x.reshape(self.shape))
        return x - out.reshape(-1)

    def residual_vjp(self, x, v):
        # R = N, so this is J_N(x)^T v: reverse sweep with 180-degree
        # rotated kernels as the conv adjoints.
        x = self._check(x)
        v = self._check(v)
        c = self.channels
        _, (a1, a2) = self._forward(x.reshape(self.shape))
        g = v.reshape(self.shape)
        if self.layers == 2:
            g1 = [
                conv2d_wrap(g, self._w_out[i][::-1, ::-1]) * (1.0 - a1[i] ** 2)
                for i in range(c)
            ]
        else:
            g2 = [
                conv2d_wrap(g, self._w_out[j][::-1, ::-1]) * (1.0 - a2[j] ** 2)
                for j in range(c)
            ]
            g1 = []
            for i in range(c):
                acc = np.zeros(self.shape)
                for j in range(c):
                    acc += conv2d_wrap(g2[j], self._w_mid[j, i][::-1, ::-1])
                g1.append(acc * (1.0 - a1[i] ** 2))
        gx = np.zeros(self.shape)
        for i in range(c):
            gx += conv2d_wrap(g1[i], self._w_in[i][::-1, ::-1])
        return gx.reshape(-1)

    def residual_jvp(self, x, v):
        # J_N(x) v: forward sweep reusing the stored tanh outputs.
        x = self._check(x)
        v = self._check(v)
        c = self.channels
        _, (a1, a2) = self._forward(x.reshape(self.shape))
        t = v.reshape(self.shape)
        t1 = [conv2d_wrap(t, self._w_in[i]) * (1.0 - a1[i] ** 2) for i in range(c)]
        if self.layers == 2:
            out = np.zeros(self.shape)
            for i in range(c):
                out += conv2d_wrap(t1[i], self._w_out[i])
            return out.reshape(-1)
        t2 = []
        for j in range(c):
            z = np.zeros(self.shape)
            for i in range(c):
                z += conv2d_wrap(t1[i], self._w_mid[j, i])
            t2.append(z * (1.0 - a2[j] ** 2))
        out = np.zeros(self.shape)
        for j in range(c):
            out += conv2d_wrap(t2[j], self._w_out[j])
        return out.reshape(-1)


class FdJacobianWrapper(Denoiser):
    """Finite-difference residual Jacobian products for a denoiser without them.

    Symmetric Jacobians use a directional central difference (a JVP, which
    equals the VJP under symmetry).  Non-symmetric ones fall back to building
    the dense Jacobian column by column, capped at n <= 4096.
    """

    DENSE_CAP = 4096

    def __init__(self, base, h=1e-5):
        if h <= 0:
            raise ValueError("step h must be positive")
        if not base.symmetric_jacobian and base.n > self.DENSE_CAP:
            raise ValueError(
                "non-symmetric Jacobian requires the dense fallback, "
                f"which caps at n = {self.DENSE_CAP}"
            )
        self.base = base
        self.h = float(h)
        self.n = base.n
        self.symmetric_jacobian = base.symmetric_jacobian
        self.smooth = base.smooth
        self.nominal_lipschitz = base.nominal_lipschitz

    def apply(self, x):
        return self.base.apply(x)

    def _directional(self, x, v):
        nv = float(np.linalg.norm(v))
        if nv == 0.0:
            return np.zeros(self.n)
        vh = v / nv
        h = self.h
        rp = self.base.residual(x + h * vh)
        rm = self.base.residual(x - h * vh)
        return (rp - rm) * (nv / (2.0 * h))

    def _dense_jacobian(self, x):
        h = self.h
        cols = np.empty((self.n, self.n))
        e = np.zeros(self.n)
        for j in range(self.n):
            e[j] = h
            cols[:, j] = (self.base.residual(x + e) - self.base.residual(x - e)) / (
                2.0 * h
            )
            e[j] = 0.0
        return cols

    def residual_vjp(self, x, v):
        x = self._check(x)
        v = self._check(v)
        if self.symmetric_jacobian:
            return self._directional(x, v)
        return self._dense_jacobian(x).T @ v

    def residual_jvp(self, x, v):
        x = self._check(x)
        v = self._check(v)
        return self._directional(x, v)


@dataclass
class LipschitzEstimate:
    """Empirical Lipschitz constant of a denoiser at sampled operating points."""

    value: float
    method: str
    probes: int
    converged: bool


def _probe_point(d, rng):
    # Operating points in the unit pixel box where the denoisers run.
    return rng.uniform(d.n)


def estimate_lipschitz(d, method="jacobian_power_iteration", probes=8, iters=300, rng=None):
    """Estimate the Lipschitz constant of D over seeded probe points.

    jacobian_power_iteration: power iteration on J_D^T J_D at each probe
    point (needs both Jacobian products), returning the largest singular
    value found.  pairwise_ratio_sampling: largest difference quotient
    ||D(x) - D(z)|| / ||x - z|| over seeded nearby pairs; a lower bound on
    the true constant for any denoiser.
    """
    if probes < 1:
        raise ValueError("probes must be at least 1")
    if iters < 1:
        raise ValueError("iters must be at least 1")
    if rng is None:
        rng = RngState(0)
    if method == "pairwise_ratio_sampling":
        best = 0.0
        delta = 1e-6
        for _ in range(probes):
            x = _probe_point(d, rng)
            u = gaussian_samples(rng, d.n)
            u = u / np.linalg.norm(u)
            z = x + delta * u
            ratio = float(np.linalg.norm(d.apply(x) - d.apply(z)) / np.linalg.norm(x - z))
            best = max(best, ratio)
        return LipschitzEstimate(best, method, probes, True)
    if method != "jacobian_power_iteration":
        raise ValueError(f"unknown method {method!r}")
    best = 0.0
    all_converged = True
    for _ in range(probes):
        x = _probe_point(d, rng)
        v = gaussian_samples(rng, d.n)
        nv = np.linalg.norm(v)
        v = v / nv
        estimate = 0.0
        converged = False
        for _k in range(iters):
            jv = v - d.residual_jvp(x, v)
            w = jv - d.residual_vjp(x, jv)
            rayleigh = float(v @ w)
            nw = np.linalg.norm(w)
            if nw == 0.0:
                estimate = max(estimate, rayleigh)
                converged = True
                break
            if abs(rayleigh - estimate) <= 1e-13 * max(abs(rayleigh), 1e-300):
                estimate = rayleigh
                converged = True
                break
            estimate = rayleigh
            v = w / nw
        best = max(best, estimate)
        all_converged = all_converged and converged
    return LipschitzEstimate(float(np.sqrt(max(best, 0.0))), method, probes, all_converged)
