import numpy as np
import pytest
from numpy.testing import assert_allclose

from sscsim.numerics import (DegenerateSupportError, MacCounter, Purpose, RandomStream, count, dft,
                             draw_gaussian, hermitian_solve)


def test_dft_is_unitary_and_invertible():
    v = RandomStream(1, 1).generator.standard_normal(128) + 1j
    X = dft(v)
    assert np.linalg.norm(X) == pytest.approx(np.linalg.norm(v), rel=1e-12)
    assert_allclose(dft(X, inverse=True), v, atol=1e-12)


def test_dft_examples():
    assert_allclose(dft([1, 0, 0, 0]), [0.5, 0.5, 0.5, 0.5], atol=1e-15)
    assert_allclose(dft([1, 1, 1, 1]), [2, 0, 0, 0], atol=1e-15)


def test_dft_of_length_one_is_identity():
    assert_allclose(dft([3 - 2j]), [3 - 2j])


def test_dft_rejects_empty_input():
    with pytest.raises(ValueError):
        dft([])


def test_hermitian_solve_matches_dense_solver():
    g = RandomStream(7, 3).generator
    for k in (1, 2, 4, 16):
        A = g.standard_normal((k + 3, k)) + 1j * g.standard_normal((k + 3, k))
        U = A.conj().T @ A
        c = g.standard_normal(k) + 1j * g.standard_normal(k)
        assert_allclose(U @ hermitian_solve(U, c), c, atol=1e-9)


def test_hermitian_solve_examples():
    assert_allclose(hermitian_solve(np.eye(2), np.array([3, 4j])), [3, 4j])
    assert_allclose(hermitian_solve(np.diag([2.0, 4.0]), np.array([2.0, 4.0])), [1, 1])


def test_hermitian_solve_residual_bound():
    g = RandomStream(7, 4).generator
    for trial in range(1000):
        k = int(g.integers(1, 9))
        A = g.standard_normal((k + 4, k)) + 1j * g.standard_normal((k + 4, k))
        U = A.conj().T @ A
        c = g.standard_normal(k) + 1j * g.standard_normal(k)
        z = hermitian_solve(U, c)
        assert np.linalg.norm(U @ z - c) <= 1e-10 * np.linalg.norm(U, 2) * np.linalg.norm(z)


def test_hermitian_solve_flags_singular_gram():
    U = np.array([[1.0, 1.0], [1.0, 1.0]])
    with pytest.raises(DegenerateSupportError):
        hermitian_solve(U, np.array([1.0, 1.0]))


@pytest.mark.parametrize("k", [0, 17])
def test_hermitian_solve_dimension_limits(k):
    with pytest.raises(ValueError):
        hermitian_solve(np.eye(k), np.ones(k))


def test_streams_are_reproducible_and_distinct():
    a = RandomStream(42, 5).generator.random(8)
    b = RandomStream(42, 5).generator.random(8)
    c = RandomStream(42, 6).generator.random(8)
    d = RandomStream(43, 5).generator.random(8)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert not np.array_equal(a, d)


def test_derived_streams_separate_purposes():
    payload = RandomStream.derive(1, Purpose.PAYLOAD, 10).bits(64)
    noise = RandomStream.derive(1, Purpose.NOISE, 10).bits(64)
    assert RandomStream.derive(1, Purpose.PAYLOAD, 10).stream_id == (1 << 56) | 10
    assert not np.array_equal(payload, noise)
    assert set(np.unique(payload)) <= {0, 1}


def test_mac_counter():
    counter = MacCounter()
    counter.add(5)
    count(counter, 7)
    count(None, 100)
    assert counter.total == 12
    counter.reset()
    assert counter.total == 0


def test_gaussian_variance():
    w = draw_gaussian(RandomStream(3, 9), 10 ** 6, 0.5)
    assert np.mean(np.abs(w) ** 2) == pytest.approx(0.5, rel=0.02)
    assert np.var(w.real) == pytest.approx(0.25, rel=0.02)
    assert abs(np.mean(w.real * w.imag)) < 0.005


def test_zero_variance_draws_nothing():
    stream = RandomStream(3, 9)
    assert not np.any(draw_gaussian(stream, 16, 0.0))
    with pytest.raises(ValueError):
        draw_gaussian(stream, 16, -1.0)
