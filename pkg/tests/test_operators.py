"""Measurement operators: adjoint consistency, oracles, spectral estimation."""

import numpy as np
import pytest

from redlab import (
    DeblurOperator,
    ImageGrid,
    Kernel2D,
    MatrixOperator,
    RngState,
    build_cs_operator,
    convolve2d_periodic,
    gaussian_kernel,
    gaussian_samples,
    spectral_norm_sq,
)


def check_adjoint(op, pairs, seed, tol=1e-10):
    rng = RngState(seed)
    for _ in range(pairs):
        v = gaussian_samples(rng, op.n)
        u = gaussian_samples(rng, op.m)
        lhs = float(op.forward(v) @ u)
        rhs = float(v @ op.adjoint(u))
        assert abs(lhs - rhs) <= tol * np.linalg.norm(v) * np.linalg.norm(u)


def test_deblur_adjoint_consistency():
    op = DeblurOperator((12, 10), gaussian_kernel(5, 1.1))
    check_adjoint(op, 100, seed=3)


def test_cs_adjoint_consistency():
    op = build_cs_operator(12, 120, seed=7)
    check_adjoint(op, 100, seed=4)


def test_matrix_operator_adjoint():
    mat = gaussian_samples(RngState(5), 12).reshape(3, 4)
    check_adjoint(MatrixOperator(mat), 100, seed=6)


def test_deblur_matches_convolution():
    # The operator and the image-level convolution must agree exactly on
    # the same inputs (spec ties them together).
    k = gaussian_kernel(5, 1.2)
    op = DeblurOperator((8, 9), k)
    x = gaussian_samples(RngState(2), 72)
    via_op = op.forward(x)
    via_conv = convolve2d_periodic(ImageGrid(8, 9, x), k).values
    assert np.max(np.abs(via_op - via_conv)) < 1e-12
    # Adjoint is convolution with the rotated kernel.
    via_adj = op.adjoint(x)
    via_rot = convolve2d_periodic(ImageGrid(8, 9, x), k.rotated_180()).values
    assert np.max(np.abs(via_adj - via_rot)) < 1e-12


def test_deblur_validation():
    with pytest.raises(ValueError):
        DeblurOperator((4, 4), gaussian_kernel(5, 1.0))
    with pytest.raises(ValueError):
        DeblurOperator((8, 8), "not a kernel")
    op = DeblurOperator((8, 8), gaussian_kernel(3, 0.7))
    assert op.m == op.n == 64
    with pytest.raises(ValueError):
        op.forward(np.zeros(63))


def test_cs_rows_orthonormal():
    op = build_cs_operator(2, 8, seed=0)
    aat = op.matrix @ op.matrix.T
    assert np.max(np.abs(aat - np.eye(2))) < 1e-12
    # Larger instance too.
    op = build_cs_operator(41, 410, seed=77)
    aat = op.matrix @ op.matrix.T
    assert np.max(np.abs(aat - np.eye(41))) < 1e-10


def test_cs_determinism_and_shape():
    a = build_cs_operator(5, 30, seed=123)
    b = build_cs_operator(5, 30, seed=123)
    assert np.array_equal(a.matrix, b.matrix)
    c = build_cs_operator(5, 30, seed=124)
    assert not np.array_equal(a.matrix, c.matrix)
    assert a.m == 5 and a.n == 30


def test_cs_rejects_oversampling():
    with pytest.raises(ValueError):
        build_cs_operator(8, 8, seed=0)
    with pytest.raises(ValueError):
        build_cs_operator(9, 8, seed=0)
    with pytest.raises(ValueError):
        build_cs_operator(0, 8, seed=0)


def test_spectral_cs_is_one():
    # Orthonormal rows: lambda_max(A^T A) is exactly 1.
    op = build_cs_operator(26, 256, seed=77)
    est = spectral_norm_sq(op)
    assert est.converged
    assert abs(est.value - 1.0) < 1e-6


def test_spectral_diagonal_matrix():
    est = spectral_norm_sq(MatrixOperator(np.diag([3.0, 2.0, 1.0])))
    assert abs(est.value - 9.0) < 1e-8


def test_spectral_deblur_matches_dft_oracle():
    # lambda_max(A^T A) = max |khat|^2 with khat the kernel DFT on the grid,
    # computed here by direct summation over shifts.
    h = w = 16
    k = gaussian_kernel(5, 1.5)
    k2 = k.as_2d()
    r = k.size // 2
    mags = np.zeros((h, w))
    for p in range(h):
        for q in range(w):
            acc = 0.0 + 0.0j
            for dy in range(-r, r + 1):
                for dx in range(-r, r + 1):
                    acc += k2[r + dy, r + dx] * np.exp(
                        -2j * np.pi * (p * dy / h + q * dx / w)
                    )
            mags[p, q] = abs(acc)
    op = DeblurOperator((h, w), k)
    est = spectral_norm_sq(op, iters=2000, tol=1e-13)
    assert abs(est.value - float(mags.max() ** 2)) < 1e-6
    # And for a normalized non-negative kernel the max sits at DC and is 1.
    assert abs(est.value - 1.0) < 1e-6


def test_spectral_rayleigh_monotone():
    # The Rayleigh quotient of power iteration never decreases; replay the
    # iteration by hand and watch the sequence.
    op = MatrixOperator(gaussian_samples(RngState(13), 15 * 20).reshape(15, 20))
    v = gaussian_samples(RngState(0), op.n)
    v = v / np.linalg.norm(v)
    prev = -np.inf
    for _ in range(60):
        w = op.gram(v)
        rayleigh = float(v @ w)
        assert rayleigh >= prev - 1e-12 * max(1.0, abs(rayleigh))
        prev = rayleigh
        v = w / np.linalg.norm(w)
    dense = np.linalg.eigvalsh(op.matrix.T @ op.matrix).max()
    assert prev <= dense + 1e-9


def test_spectral_validation_and_flags():
    op = MatrixOperator(np.diag([2.0, 1.0]))
    with pytest.raises(ValueError):
        spectral_norm_sq(op, iters=0)
    # One iteration cannot meet the tolerance check, so it reports honest
    # non-convergence with the first Rayleigh value.
    est = spectral_norm_sq(op, iters=1)
    assert not est.converged
    assert est.iterations == 1
