"""Image containers, periodic convolution, orthonormal DCT, and metrics.

Images are stored as flat row-major float64 vectors with explicit 2D shape
metadata.  Pixel values are nominally in [0, 1] but are never clipped here;
clipping happens only at image export so that diverging solver iterates
remain representable.
"""

import math

import numpy as np
from scipy.fft import dctn, idctn
from scipy.signal import convolve2d

from .rng import RngState, gaussian_samples


class ImageGrid:
    """A real-valued image: flat row-major vector plus (height, width).

    The value buffer is frozen after construction; operations return new
    instances.  All values must be finite.
    """

    def __init__(self, height, width, values):
        height = int(height)
        width = int(width)
        if height < 1 or width < 1:
            raise ValueError("image dimensions must be positive")
        values = np.asarray(values, dtype=np.float64).reshape(-1).copy()
        if values.size != height * width:
            raise ValueError(
                f"expected {height * width} values for {height}x{width}, got {values.size}"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("image values must be finite")
        values.flags.writeable = False
        self.height = height
        self.width = width
        self.values = values

    @classmethod
    def from_2d(cls, arr):
        arr = np.asarray(arr, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError("expected a 2D array")
        return cls(arr.shape[0], arr.shape[1], arr.reshape(-1))

    @property
    def shape(self):
        return (self.height, self.width)

    @property
    def n(self):
        return self.height * self.width

    def as_2d(self):
        """Read-only (height, width) view of the values."""
        return self.values.reshape(self.height, self.width)

    def with_values(self, values):
        """New image of the same shape with different values."""
        return ImageGrid(self.height, self.width, values)

    def __repr__(self):
        return f"ImageGrid({self.height}x{self.width})"


class Kernel2D:
    """Square convolution kernel of odd size, stored row-major."""

    def __init__(self, size, weights):
        size = int(size)
        if size < 1 or size % 2 == 0:
            raise ValueError("kernel size must be odd and positive")
        weights = np.asarray(weights, dtype=np.float64).reshape(-1).copy()
        if weights.size != size * size:
            raise ValueError(f"expected {size * size} weights, got {weights.size}")
        if not np.all(np.isfinite(weights)):
            raise ValueError("kernel weights must be finite")
        weights.flags.writeable = False
        self.size = size
        self.weights = weights

    @classmethod
    def from_2d(cls, arr):
        arr = np.asarray(arr, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError("kernel array must be square")
        return cls(arr.shape[0], arr.reshape(-1))

    def as_2d(self):
        return self.weights.reshape(self.size, self.size)

    def rotated_180(self):
        """Kernel flipped in both axes (the adjoint kernel for periodic convolution)."""
        return Kernel2D(self.size, self.as_2d()[::-1, ::-1].reshape(-1))

    def is_normalized(self, tol=1e-12):
        """True for a blur kernel: non-negative weights summing to 1."""
        return bool(np.all(self.weights >= 0.0) and abs(self.weights.sum() - 1.0) <= tol)

    def __repr__(self):
        return f"Kernel2D(size={self.size})"


def gaussian_kernel(size, sigma):
    """Normalized truncated-Gaussian blur kernel of odd `size`."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    size = int(size)
    if size % 2 == 0 or size < 1:
        raise ValueError("kernel size must be odd and positive")
    r = size // 2
    yy, xx = np.mgrid[-r : r + 1, -r : r + 1]
    w = np.exp(-(xx**2 + yy**2) / (2.0 * sigma**2))
    return Kernel2D(size, (w / w.sum()).reshape(-1))


def conv2d_wrap(arr, kern):
    """Periodic (circular) 2D convolution of a 2D array with a 2D kernel.

    The kernel is centered: out[p] = sum_d kern[c + d] * arr[(p - d) mod shape].
    Direct spatial summation, O(n * k^2).
    """
    return convolve2d(arr, kern, mode="same", boundary="wrap")


class CyclicConvolver:
    """Repeated periodic convolution with one kernel via cached DFT.

    Embeds the centered kernel on the image grid once; each apply is two
    real FFTs.  The adjoint multiplies by the conjugate spectrum, which
    equals convolution with the 180-degree rotated kernel.  Matches
    conv2d_wrap to roundoff; used on hot paths where the kernel is large.
    """

    def __init__(self, shape, kernel):
        h, w = int(shape[0]), int(shape[1])
        if kernel.size > min(h, w):
            raise ValueError(
                f"kernel size {kernel.size} exceeds image extent {h}x{w}"
            )
        self.shape = (h, w)
        r = kernel.size // 2
        k2 = kernel.as_2d()
        embed = np.zeros((h, w))
        for dy in range(-r, r + 1):
            for dx in range(-r, r + 1):
                embed[dy % h, dx % w] += k2[r + dy, r + dx]
        self._khat = np.fft.rfft2(embed)

    def apply(self, arr):
        return np.fft.irfft2(np.fft.rfft2(arr) * self._khat, s=self.shape)

    def apply_adjoint(self, arr):
        return np.fft.irfft2(np.fft.rfft2(arr) * np.conj(self._khat), s=self.shape)


def convolve2d_periodic(img, kernel):
    """Circular convolution of an image with a centered kernel."""
    if kernel.size > min(img.height, img.width):
        raise ValueError(
            f"kernel size {kernel.size} exceeds image extent {img.height}x{img.width}"
        )
    out = conv2d_wrap(img.as_2d(), kernel.as_2d())
    return img.with_values(out.reshape(-1))


def dct2_orthonormal(img):
    """Orthonormal (type-II) 2D DCT of an image; energy preserving."""
    return img.with_values(dctn(img.as_2d(), type=2, norm="ortho").reshape(-1))


def idct2_orthonormal(coeffs):
    """Inverse of :func:`dct2_orthonormal`."""
    return coeffs.with_values(idctn(coeffs.as_2d(), type=2, norm="ortho").reshape(-1))


def dct2_vals(arr):
    """Orthonormal 2D DCT on a raw 2D array (denoiser internals)."""
    return dctn(arr, type=2, norm="ortho")


def idct2_vals(arr):
    return idctn(arr, type=2, norm="ortho")


def psnr(ref, test, peak=1.0):
    """Peak signal-to-noise ratio in dB; +inf when the images are equal."""
    if ref.shape != test.shape:
        raise ValueError(f"shape mismatch: {ref.shape} vs {test.shape}")
    if peak <= 0:
        raise ValueError("peak must be positive")
    diff = ref.values - test.values
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)


TEST_IMAGE_NAMES = ("phantom", "ramp", "sinusoid", "checkerboard", "texture", "blocks")


def _phantom(h, w):
    # A few overlapping ellipses at distinct gray levels.
    yy, xx = np.mgrid[0:h, 0:w]
    y = (yy - (h - 1) / 2.0) / (h / 2.0)
    x = (xx - (w - 1) / 2.0) / (w / 2.0)
    img = np.zeros((h, w))
    # (cx, cy, a, b, level) in normalized coordinates; later entries overwrite.
    ellipses = [
        (0.0, 0.0, 0.75, 0.9, 0.8),
        (0.0, 0.05, 0.6, 0.75, 0.35),
        (-0.25, -0.15, 0.2, 0.3, 0.65),
        (0.25, -0.15, 0.2, 0.3, 0.1),
        (0.0, 0.35, 0.15, 0.2, 1.0),
        (0.0, -0.45, 0.08, 0.1, 0.9),
    ]
    for cx, cy, a, b, level in ellipses:
        mask = ((x - cx) / a) ** 2 + ((y - cy) / b) ** 2 <= 1.0
        img[mask] = level
    return img


def _ramp(h, w):
    col = np.arange(w) / (w - 1)
    return np.tile(col, (h, 1))


def _sinusoid(h, w):
    yy, xx = np.mgrid[0:h, 0:w]
    return 0.5 + 0.25 * np.sin(2.0 * np.pi * 3.0 * xx / w) + 0.25 * np.sin(
        2.0 * np.pi * 2.0 * yy / h
    )


def _checkerboard(h, w):
    cell = max(2, min(h, w) // 8)
    yy, xx = np.mgrid[0:h, 0:w]
    return (((yy // cell) + (xx // cell)) % 2).astype(np.float64)


def _texture(h, w, rng):
    noise = gaussian_samples(rng, h * w).reshape(h, w)
    k = gaussian_kernel(7, 1.2)
    smooth = conv2d_wrap(noise, k.as_2d())
    lo, hi = smooth.min(), smooth.max()
    if hi == lo:
        return np.full((h, w), 0.5)
    return (smooth - lo) / (hi - lo)


def _blocks(h, w, rng):
    rows = 4
    cols = 4
    levels = rng.uniform(rows * cols)
    img = np.zeros((h, w))
    for i in range(rows):
        for j in range(cols):
            r0 = i * h // rows
            r1 = (i + 1) * h // rows
            c0 = j * w // cols
            c1 = (j + 1) * w // cols
            img[r0:r1, c0:c1] = levels[i * cols + j]
    return img


def make_test_images(rng, shape):
    """Build the six deterministic synthetic test images for a shape.

    Returns [phantom, ramp, sinusoid, checkerboard, texture, blocks], all
    with values in [0, 1].  The texture and block images consume samples
    from `rng`; the rest are seed-independent.
    """
    h, w = int(shape[0]), int(shape[1])
    if h < 32 or w < 32:
        raise ValueError("test image shape must be at least 32x32")
    arrays = [
        _phantom(h, w),
        _ramp(h, w),
        _sinusoid(h, w),
        _checkerboard(h, w),
        _texture(h, w, rng),
        _blocks(h, w, rng),
    ]
    return [ImageGrid.from_2d(a) for a in arrays]


def named_test_image(name, seed, shape):
    """Single named test image; see TEST_IMAGE_NAMES for valid names."""
    if name not in TEST_IMAGE_NAMES:
        raise ValueError(f"unknown test image {name!r}; valid: {TEST_IMAGE_NAMES}")
    imgs = make_test_images(RngState(seed), shape)
    return imgs[TEST_IMAGE_NAMES.index(name)]
