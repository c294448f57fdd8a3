import json

import numpy as np
import pytest

from conftest import ket, proj
from keysecrecy.criteria import hy_relative_error
from keysecrecy.numerics import ValidationError, statistical_distance
from keysecrecy.states import (
    BitString,
    CqState,
    StateFormatError,
    flip_zero_key,
    ideal_key,
    load_state,
    mix_states,
    sample_near_ideal,
    sample_random_cq,
    save_state,
    spike_key,
)


def uniform(l):
    return np.full(2**l, 2.0**-l)


def test_bitstring_rendering():
    assert str(BitString.ones(3)) == "111"
    assert str(BitString.zeros(4)) == "0000"
    assert BitString.from_str("0101") == BitString(5, 4)
    assert BitString(6, 3).bits == (1, 1, 0)
    with pytest.raises(ValidationError):
        BitString(8, 3)
    with pytest.raises(ValidationError):
        BitString.from_str("01a")


def test_ideal_key_weights():
    np.testing.assert_array_equal(ideal_key(1).weights, [0.5, 0.5])
    np.testing.assert_array_equal(ideal_key(3).weights, [0.125] * 8)


def test_ideal_key_with_side():
    s = ideal_key(2, proj(ket(1, 0)))
    assert s.side_dim == 2 and s.n_entries == 4
    for _, p, rho in s.entries():
        assert p == 0.25
        np.testing.assert_array_equal(rho, [[1, 0], [0, 0]])
    joint = s.joint_operator()
    np.testing.assert_allclose(joint, s.ideal_operator())


def test_ideal_key_length_bounds():
    with pytest.raises(ValidationError):
        ideal_key(0)
    with pytest.raises(ValidationError):
        ideal_key(21)


def test_flip_zero_l3():
    s = flip_zero_key(3)
    w = dict(zip((str(b) for b, _, _ in s.entries()), s.weights))
    assert w["000"] == 0.0
    assert w["111"] == 0.25
    assert [w[k] for k in ("001", "010", "011", "100", "101", "110")] == [0.125] * 6
    assert s.weights.sum() == 1.0


def test_flip_zero_l2():
    np.testing.assert_array_equal(flip_zero_key(2).weights, [0, 0.25, 0.25, 0.5])


def test_flip_zero_rejects_l1():
    with pytest.raises(ValidationError):
        flip_zero_key(1)


@pytest.mark.parametrize("l", range(2, 21))
def test_flip_zero_invariants(l):
    s = flip_zero_key(l)
    assert statistical_distance(s.key_distribution(), uniform(l)) == pytest.approx(2.0**-l, abs=1e-14)
    assert s.weights.max() == 2 * 2.0**-l


def test_spike_examples():
    s = spike_key(3, 0.05)
    assert s.weights[0] == pytest.approx(0.175, abs=1e-15)
    np.testing.assert_allclose(s.weights[1:], 0.825 / 7, atol=1e-15)
    s = spike_key(2, 0.25)
    assert s.weights[0] == pytest.approx(0.5, abs=1e-15)
    np.testing.assert_allclose(s.weights[1:], 1 / 6, atol=1e-15)


@pytest.mark.parametrize("delta", [0.0, -0.1, 0.9])
def test_spike_rejects_out_of_range(delta):
    with pytest.raises(ValidationError):
        spike_key(3, delta)


@pytest.mark.parametrize("l, delta", [(1, 0.5), (3, 0.05), (5, 0.3), (10, 1e-3), (12, 1 - 2.0**-12)])
def test_spike_distance_is_delta(l, delta):
    s = spike_key(l, delta)
    assert statistical_distance(s.key_distribution(), uniform(l)) == pytest.approx(delta, abs=1e-12)


def test_sampler_determinism():
    a = sample_random_cq(2, 3, 99)
    b = sample_random_cq(2, 3, 99)
    np.testing.assert_array_equal(a.weights, b.weights)
    np.testing.assert_array_equal(a.rhos, b.rhos)
    c = sample_random_cq(2, 3, 100)
    assert not np.array_equal(a.weights, c.weights)


def test_sampler_contract():
    s = sample_random_cq(1, 2, 42)
    assert s.l == 1 and s.side_dim == 2 and s.n_entries == 2


def test_sampler_many_valid():
    for i in range(1000):
        s = sample_random_cq(1 + i % 3, 1 + i % 4, i, classical=bool(i % 2))
        assert abs(s.weights.sum() - 1) <= 1e-12
        for rho in s.rhos:
            assert abs(np.trace(rho) - 1) <= 1e-10
            assert np.linalg.eigvalsh(rho)[0] >= -1e-10


def test_sampler_classical_is_diagonal():
    s = sample_random_cq(2, 3, 5, classical=True)
    for rho in s.rhos:
        np.testing.assert_array_equal(rho, np.diag(np.diag(rho)))


@pytest.mark.parametrize("l, d", [(0, 1), (4, 1), (1, 0), (1, 5)])
def test_sampler_bounds(l, d):
    with pytest.raises(ValidationError):
        sample_random_cq(l, d, 0)


def test_cq_state_invariants_enforced():
    with pytest.raises(ValidationError, match="sum"):
        CqState(1, [0, 1], [0.5, 0.6], [1, 1])
    with pytest.raises(ValidationError, match="duplicate"):
        CqState(1, [0, 0], [0.5, 0.5], [1, 1])
    with pytest.raises(ValidationError, match="trace"):
        CqState(1, [0, 1], [0.5, 0.5], np.stack([np.eye(2), np.eye(2) / 2]))
    with pytest.raises(ValidationError, match="PSD"):
        CqState(1, [0, 1], [0.5, 0.5], np.stack([np.diag([1.5, -0.5]), np.eye(2) / 2]))
    with pytest.raises(ValidationError, match="Hermitian"):
        CqState(1, [0, 1], [0.5, 0.5], np.stack([[[0.5, 0.1], [0.2, 0.5]], np.eye(2) / 2]))


@pytest.mark.parametrize("eps", [0.5, 0.05, 1e-3])
@pytest.mark.parametrize("d, classical", [(1, False), (3, True), (2, False)])
def test_near_ideal_satisfies_bound(eps, d, classical):
    for seed in range(5):
        s = sample_near_ideal(2, d, eps, seed, classical=classical)
        assert hy_relative_error(s) <= eps
        t = sample_near_ideal(2, d, eps, seed, classical=classical)
        np.testing.assert_array_equal(s.rhos, t.rhos)


def test_near_ideal_limit_is_ideal():
    s = sample_near_ideal(2, 1, 1e-300, 3)
    np.testing.assert_array_equal(s.weights, [0.25] * 4)


def test_mix_with_ideal_preserves_marginal():
    s = sample_random_cq(2, 2, 1)
    m = mix_states(s, ideal_key(2, s.side_marginal()), 0.3)
    np.testing.assert_allclose(m.side_marginal(), s.side_marginal(), atol=1e-14)


def test_json_round_trip(tmp_path):
    s = sample_random_cq(2, 2, 17)
    path = tmp_path / "s.json"
    save_state(s, path)
    data = json.loads(path.read_text())
    assert data["l"] == 2 and data["side_dim"] == 2
    assert data["entries"][1]["key"] == "01"
    back = load_state(path)
    np.testing.assert_array_equal(back.weights, s.weights)
    np.testing.assert_array_equal(back.rhos, s.rhos)


def test_json_trivial_side_omits_rho(tmp_path):
    path = tmp_path / "f.json"
    save_state(flip_zero_key(3), path)
    data = json.loads(path.read_text())
    assert all("rho" not in e for e in data["entries"])
    assert data["entries"][7] == {"key": "111", "p": 0.25}
    np.testing.assert_array_equal(load_state(path).weights, flip_zero_key(3).weights)


@pytest.mark.parametrize(
    "text, match",
    [
        ('{"l": 2, "side_dim": 1, "entries": [', "line 1 column"),
        ('{"l": 2, "entries": []}', "side_dim"),
        ('{"l": 2, "side_dim": 1, "entries": [{"key": "011", "p": 1.0}]}', r"entries\[0\]\.key"),
        ('{"l": 1, "side_dim": 1, "entries": [{"key": "0", "p": "x"}]}', r"entries\[0\]\.p"),
        ('{"l": 1, "side_dim": 2, "entries": [{"key": "0", "p": 1.0}]}', r"entries\[0\]\.rho"),
        ('{"l": 1, "side_dim": 1, "entries": [{"key": "0", "p": 0.7}]}', "sum"),
    ],
)
def test_parse_errors_are_located(tmp_path, text, match):
    path = tmp_path / "bad.json"
    path.write_text(text)
    with pytest.raises(StateFormatError, match=match):
        load_state(path)
