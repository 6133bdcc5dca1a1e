"""PGM image files and plain-text kernel files."""

import numpy as np
import pytest

from redlab import ImageGrid, RngState, gaussian_kernel
from redlab.pgmio import read_kernel_file, read_pgm, write_kernel_file, write_pgm


def test_round_trip_16bit(tmp_path):
    rng = RngState(8)
    img = ImageGrid(6, 5, rng.uniform(30))
    path = tmp_path / "a.pgm"
    write_pgm(path, img, bit_depth=16)
    back = read_pgm(path)
    assert back.shape == img.shape
    assert np.max(np.abs(back.values - img.values)) <= 1.0 / 65535


def test_round_trip_8bit(tmp_path):
    img = ImageGrid(4, 4, RngState(9).uniform(16))
    path = tmp_path / "b.pgm"
    write_pgm(path, img, bit_depth=8)
    back = read_pgm(path)
    assert np.max(np.abs(back.values - img.values)) <= 1.0 / 255


def test_write_clips_and_rounds(tmp_path):
    # Out-of-range pixels clip; in-range ones round half away from zero.
    img = ImageGrid(1, 4, [-0.5, 1.5, 0.5 / 255, 1.5 / 255])
    path = tmp_path / "c.pgm"
    write_pgm(path, img, bit_depth=8)
    raw = path.read_bytes()
    levels = list(raw[-4:])
    assert levels == [0, 255, 1, 2]


def test_write_bit_depth_validation(tmp_path):
    with pytest.raises(ValueError):
        write_pgm(tmp_path / "d.pgm", ImageGrid(1, 1, [0.0]), bit_depth=12)


def test_read_known_bytes(tmp_path):
    path = tmp_path / "e.pgm"
    path.write_bytes(b"P5\n2 2\n255\n" + bytes([0, 255, 128, 64]))
    img = read_pgm(path)
    assert img.shape == (2, 2)
    assert np.allclose(img.values, [0.0, 1.0, 128 / 255, 64 / 255])


def test_read_header_comments(tmp_path):
    path = tmp_path / "f.pgm"
    path.write_bytes(b"P5\n# a comment\n2 1\n255\n" + bytes([10, 20]))
    img = read_pgm(path)
    assert np.allclose(img.values, [10 / 255, 20 / 255])


def test_read_rejects_ascii_pgm(tmp_path):
    path = tmp_path / "g.pgm"
    path.write_bytes(b"P2\n2 2\n255\n0 1 2 3\n")
    with pytest.raises(ValueError):
        read_pgm(path)


def test_read_rejects_truncated(tmp_path):
    path = tmp_path / "h.pgm"
    path.write_bytes(b"P5\n2 2\n255\n" + bytes([0, 1]))
    with pytest.raises(ValueError):
        read_pgm(path)


def test_read_rejects_bad_maxval(tmp_path):
    path = tmp_path / "i.pgm"
    path.write_bytes(b"P5\n1 1\n70000\n" + bytes([0, 0]))
    with pytest.raises(ValueError):
        read_pgm(path)


def test_16bit_is_big_endian(tmp_path):
    # Level 1 at maxval 65535 must serialize as 0x00 0x01.
    img = ImageGrid(1, 1, [1.0 / 65535])
    path = tmp_path / "j.pgm"
    write_pgm(path, img, bit_depth=16)
    assert path.read_bytes()[-2:] == bytes([0, 1])


def test_kernel_file_round_trip(tmp_path):
    k = gaussian_kernel(5, 1.3)
    path = tmp_path / "k.txt"
    write_kernel_file(path, k)
    back = read_kernel_file(path)
    assert back.size == 5
    assert np.array_equal(back.weights, k.weights)
    # First line is the size, then one row per line.
    lines = path.read_text().splitlines()
    assert lines[0] == "5"
    assert len(lines) == 6


def test_kernel_file_malformed(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("")
    with pytest.raises(ValueError):
        read_kernel_file(p)
    p.write_text("3\n1 2 3 4\n")
    with pytest.raises(ValueError):
        read_kernel_file(p)
    p.write_text("2\n1 2 3 4\n")
    with pytest.raises(ValueError):
        read_kernel_file(p)
    p.write_text("3\n1 2 3 4 5 6 7 8 x\n")
    with pytest.raises(ValueError):
        read_kernel_file(p)
