import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import ket, proj, random_state, random_unitary
from keysecrecy.numerics import (
    ValidationError,
    eig_hermitian,
    statistical_distance,
    trace_distance,
    trace_norm,
)

ZERO = proj(ket(1, 0))
ONE = proj(ket(0, 1))
PLUS = proj(ket(1, 1))


def test_eig_diagonal():
    w, _ = eig_hermitian(np.diag([1.0, -1.0]))
    np.testing.assert_array_equal(w, [1.0, -1.0])


def test_eig_identity():
    w, v = eig_hermitian(np.eye(3))
    np.testing.assert_array_equal(w, [1.0, 1.0, 1.0])
    np.testing.assert_allclose(v, np.eye(3))


def test_eig_pauli_x():
    # characteristic polynomial x^2 - 1
    w, v = eig_hermitian([[0, 1], [1, 0]])
    np.testing.assert_allclose(w, [1.0, -1.0], atol=1e-15)
    np.testing.assert_allclose(np.abs(v[:, 0]), [1 / math.sqrt(2)] * 2, atol=1e-15)


def test_eig_rejects_non_hermitian_naming_pair():
    m = np.array([[1, 2, 0], [2, 1, 0], [0, 5j, 1]])
    with pytest.raises(ValidationError, match=r"entry \(1, 2\)"):
        eig_hermitian(m)


def test_spectral_reconstruction_random():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(1, 9))
        g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        m = g + g.conj().T
        w, v = eig_hermitian(m)
        assert np.all(np.diff(w) <= 0)
        worst = max(worst, np.abs(v @ np.diag(w) @ v.conj().T - m).max())
        assert np.abs(v.conj().T @ v - np.eye(n)).max() <= 1e-10
    assert worst <= 1e-9


def test_eig_matches_lapack():
    rng = np.random.default_rng(5)
    for n in (2, 5, 16, 40):
        g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        m = g + g.conj().T
        np.testing.assert_allclose(eig_hermitian(m)[0], np.linalg.eigvalsh(m)[::-1], atol=1e-10)


def test_eig_degenerate_spectrum():
    rng = np.random.default_rng(8)
    u = random_unitary(rng, 4)
    m = u @ np.diag([2.0, 2.0, -1.0, -1.0]) @ u.conj().T
    m = 0.5 * (m + m.conj().T)
    w, v = eig_hermitian(m)
    np.testing.assert_allclose(w, [2, 2, -1, -1], atol=1e-12)
    np.testing.assert_allclose(v @ np.diag(w) @ v.conj().T, m, atol=1e-10)


@pytest.mark.parametrize(
    "m, expected",
    [
        (np.diag([1.0, -1.0]), 2.0),
        (np.zeros((4, 4)), 0.0),
        (ZERO - PLUS, math.sqrt(2)),
    ],
)
def test_trace_norm_examples(m, expected):
    assert trace_norm(m) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize(
    "rho, sigma, expected",
    [(ZERO, ONE, 1.0), (PLUS, PLUS, 0.0), (ZERO, PLUS, 1 / math.sqrt(2))],
)
def test_trace_distance_examples(rho, sigma, expected):
    assert trace_distance(rho, sigma) == pytest.approx(expected, abs=1e-12)


def test_trace_distance_errors():
    with pytest.raises(ValidationError, match="dimension mismatch"):
        trace_distance(ZERO, np.eye(3) / 3)
    with pytest.raises(ValidationError, match="trace"):
        trace_distance(np.eye(2), ZERO)
    with pytest.raises(ValidationError, match="positive semidefinite"):
        trace_distance(np.diag([1.5, -0.5]), ZERO)


def test_trace_distance_metric_properties():
    rng = np.random.default_rng(11)
    for _ in range(200):
        d = int(rng.integers(1, 6))
        a, b, c = (random_state(rng, d, int(rng.integers(1, d + 1))) for _ in range(3))
        ab, ba = trace_distance(a, b), trace_distance(b, a)
        assert 0.0 <= ab <= 1.0
        assert ab == pytest.approx(ba, abs=1e-12)
        assert ab <= trace_distance(a, c) + trace_distance(c, b) + 1e-10


def test_trace_distance_unitary_invariance():
    rng = np.random.default_rng(12)
    for _ in range(100):
        d = int(rng.integers(2, 7))
        a, b = random_state(rng, d), random_state(rng, d)
        u = random_unitary(rng, d)
        ua, ub = u @ a @ u.conj().T, u @ b @ u.conj().T
        assert trace_distance(ua, ub) == pytest.approx(trace_distance(a, b), abs=1e-10)


def flip_zero_weights(l):
    n = 2**l
    w = np.full(n, 1 / n)
    w[0], w[-1] = 0.0, 2 / n
    return w


@pytest.mark.parametrize(
    "p, q, expected",
    [
        ([1, 0], [0.5, 0.5], 0.5),
        ([0.2, 0.3, 0.5], [0.2, 0.3, 0.5], 0.0),
        (flip_zero_weights(3), np.full(8, 1 / 8), 0.125),
    ],
)
def test_statistical_distance_examples(p, q, expected):
    assert statistical_distance(p, q) == pytest.approx(expected, abs=1e-15)


def test_statistical_distance_length_mismatch():
    with pytest.raises(ValidationError, match="length mismatch"):
        statistical_distance([1.0], [0.5, 0.5])


dists = st.integers(1, 10).flatmap(
    lambda n: st.tuples(
        st.lists(st.floats(0.0, 1.0), min_size=n, max_size=n).filter(lambda x: sum(x) > 1e-3),
        st.lists(st.floats(0.0, 1.0), min_size=n, max_size=n).filter(lambda x: sum(x) > 1e-3),
    )
)


@settings(max_examples=200, deadline=None)
@given(dists)
def test_statistical_distance_forms_agree(pair):
    p = np.array(pair[0]) / sum(pair[0])
    q = np.array(pair[1]) / sum(pair[1])
    p, q = p / p.sum(), q / q.sum()
    sd = statistical_distance(p, q)
    assert sd == pytest.approx(np.clip(p - q, 0, None).sum(), abs=1e-12)
    assert sd == pytest.approx(trace_distance(np.diag(p), np.diag(q)), abs=1e-12)
