import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from specstack.errors import InvalidParameterError
from specstack.fft import fft, fft_rows, rfft_rows

from oracles import naive_dft, naive_idft


def test_impulse_is_flat(backend):
    np.testing.assert_allclose(fft([1, 0, 0, 0]), [1, 1, 1, 1], atol=1e-15)


def test_constant_is_impulse(backend):
    np.testing.assert_allclose(fft([1, 1, 1, 1]), [4, 0, 0, 0], atol=1e-15)


def test_length_one_is_identity(backend):
    assert fft([3 - 2j])[0] == 3 - 2j


@pytest.mark.parametrize("n", [2, 4, 8, 16, 64, 1024])
def test_matches_naive_dft(backend, rng, n):
    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    X = fft(x)
    ref = naive_dft(x)
    assert np.max(np.abs(X - ref)) <= 1e-6 * np.max(np.abs(ref))


@pytest.mark.parametrize("n", [0, 3, 6, 1000])
def test_rejects_non_power_of_two(n):
    with pytest.raises(InvalidParameterError):
        fft(np.zeros(n))


def test_rows_match_single_transforms(backend, rng):
    x = rng.standard_normal((5, 32)) + 1j * rng.standard_normal((5, 32))
    batch = fft_rows(x)
    for row, out in zip(x, batch):
        np.testing.assert_allclose(out, naive_dft(row), atol=1e-10)


@pytest.mark.parametrize("rows", [1, 2, 5])
def test_real_rows_pack_in_pairs(backend, rng, rows):
    x = rng.standard_normal((rows, 64))
    out = rfft_rows(x)
    assert out.shape == (rows, 33)
    for row, got in zip(x, out):
        np.testing.assert_allclose(got, naive_dft(row)[:33], atol=1e-10)


def test_backends_agree(rng):
    from specstack import _accel

    x = rng.standard_normal((7, 256)) + 1j * rng.standard_normal((7, 256))
    results = []
    for name in _accel.available_backends():
        with _accel.using_backend(name):
            results.append(fft_rows(x))
    for other in results[1:]:
        np.testing.assert_allclose(other, results[0], atol=1e-12)


vectors = st.integers(0, 7).flatmap(
    lambda p: st.lists(st.complex_numbers(max_magnitude=1e3, allow_nan=False, allow_infinity=False),
                       min_size=2**p, max_size=2**p)
)


@settings(max_examples=60, deadline=None)
@given(vectors, vectors, st.floats(-10, 10), st.floats(-10, 10))
def test_linearity(x, y, a, b):
    n = min(len(x), len(y))
    x, y = np.array(x[:n]), np.array(y[:n])
    lhs = fft(a * x + b * y)
    rhs = a * fft(x) + b * fft(y)
    scale = max(np.max(np.abs(lhs)), np.max(np.abs(rhs)), 1.0)
    assert np.max(np.abs(lhs - rhs)) <= 1e-6 * scale


@settings(max_examples=60, deadline=None)
@given(vectors)
def test_parseval(x):
    x = np.array(x)
    energy = np.sum(np.abs(x) ** 2)
    spectral = np.sum(np.abs(fft(x)) ** 2) / len(x)
    assert spectral == pytest.approx(energy, rel=1e-6, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(vectors)
def test_inverse_dft_recovers_input(x):
    x = np.array(x)
    back = naive_idft(fft(x))
    assert np.max(np.abs(back - x)) <= 1e-6 * max(np.max(np.abs(x)), 1.0)
