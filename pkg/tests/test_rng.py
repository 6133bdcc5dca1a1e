"""Seeded sampling: determinism, Box-Muller statistics, validation."""

import numpy as np
import pytest

from redlab import RngState, gaussian_samples


def test_same_seed_same_stream():
    a = RngState(123).uniform(50)
    b = RngState(123).uniform(50)
    assert np.array_equal(a, b)


def test_different_seeds_differ():
    a = RngState(1).uniform(50)
    b = RngState(2).uniform(50)
    assert not np.array_equal(a, b)


def test_uniform_range():
    u = RngState(7).uniform(10_000)
    assert u.min() >= 0.0
    assert u.max() < 1.0


def test_seed_validation():
    with pytest.raises(ValueError):
        RngState(-1)
    with pytest.raises(ValueError):
        RngState(2**64)
    # Boundary values are fine.
    RngState(0)
    RngState(2**64 - 1)


def test_repr_mentions_seed_and_family():
    r = repr(RngState(42))
    assert "42" in r
    assert "pcg64" in r


def test_gaussian_determinism():
    a = gaussian_samples(RngState(5), 10)
    b = gaussian_samples(RngState(5), 10)
    assert np.array_equal(a, b)


def test_gaussian_moments():
    # Law-of-large-numbers check at one million samples.
    s = gaussian_samples(RngState(31), 1_000_000)
    assert abs(s.mean()) < 0.01
    assert abs(s.var() - 1.0) < 0.01


def test_gaussian_count_validation():
    with pytest.raises(ValueError):
        gaussian_samples(RngState(0), 0)
    with pytest.raises(ValueError):
        gaussian_samples(RngState(0), -3)


def test_gaussian_odd_count():
    # Odd counts drop the last half of the final Box-Muller pair.
    odd = gaussian_samples(RngState(9), 7)
    even = gaussian_samples(RngState(9), 8)
    assert odd.shape == (7,)
    assert np.array_equal(odd, even[:7])


def test_gaussian_finite():
    # 1 - U keeps the log argument strictly positive, so no infinities.
    s = gaussian_samples(RngState(2), 100_000)
    assert np.all(np.isfinite(s))
