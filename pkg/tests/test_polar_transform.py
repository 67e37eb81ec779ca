import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import all_bit_vectors
from polarcoord.polar import polar_transform


def test_zeros_and_length_two():
    assert np.array_equal(polar_transform([0, 0, 0, 0]), [0, 0, 0, 0])
    assert np.array_equal(polar_transform([1, 0]), [1, 0])
    assert np.array_equal(polar_transform([0, 1]), [1, 1])


def test_length_four_closed_form():
    u = np.array([1, 0, 1, 1])
    # (u0^u1^u2^u3, u2^u3, u1^u3, u3)
    assert np.array_equal(polar_transform(u), [1, 0, 1, 1])
    u = np.array([0, 1, 1, 0])
    assert np.array_equal(polar_transform(u), [0, 1, 1, 0])


def test_matches_bit_reversed_kernel_power():
    kernel = np.array([[1, 0], [1, 1]], dtype=np.uint8)
    power = kernel
    for _ in range(2):
        power = np.kron(power, kernel)
    bitrev = [int(f"{i:03b}"[::-1], 2) for i in range(8)]
    u_all = all_bit_vectors(8)
    expected = (u_all[:, bitrev] @ power) % 2
    assert np.array_equal(polar_transform(u_all), expected)


def test_bad_length_rejected():
    with pytest.raises(ValueError):
        polar_transform([0, 1, 1])
    with pytest.raises(ValueError):
        polar_transform(np.zeros((2, 0)))


@given(st.integers(0, 2**16 - 1), st.sampled_from([2, 8, 64, 1024]))
def test_involution(seed, size):
    u = np.random.default_rng(seed).integers(0, 2, size=size, dtype=np.uint8)
    assert np.array_equal(polar_transform(polar_transform(u)), u)


def test_batched_leading_axes():
    rng = np.random.default_rng(7)
    u = rng.integers(0, 2, size=(3, 5, 16), dtype=np.uint8)
    out = polar_transform(u)
    assert out.shape == u.shape
    for i in range(3):
        for j in range(5):
            assert np.array_equal(out[i, j], polar_transform(u[i, j]))
