"""One-time-pad encryption with an imperfect key.

The adversary sees the ciphertext ``c = m XOR k`` and guesses the message by
maximum likelihood. Comparing its success probability with the real key to
the one with an ideal key shows how far the key's imperfection can inflate
the probability of that event; the inflation is bounded by the key's
distance from uniform.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .numerics import ValidationError, as_probability_vector
from .states import CqState

__all__ = [
    "UnsupportedConfiguration",
    "OtpExperiment",
    "OtpResult",
    "MonteCarloResult",
    "run_otp_exact",
    "run_otp_montecarlo",
    "best_response",
]

MAX_EXACT_LENGTH = 12


class UnsupportedConfiguration(ValidationError):
    pass


@dataclass(frozen=True, eq=False)
class OtpExperiment:
    """Key ``key_state`` (no side information) encrypting messages drawn from ``message_dist``.

    ``message_dist=None`` means uniformly random messages.
    """

    key_state: CqState
    message_dist: np.ndarray | None = None

    def __post_init__(self):
        if not self.key_state.trivial_side:
            raise UnsupportedConfiguration(
                "one-time-pad experiment needs a key without side information "
                f"(got side_dim={self.key_state.side_dim})"
            )
        n = 1 << self.key_state.l
        if self.message_dist is None:
            msg = np.full(n, 1.0 / n)
        else:
            msg = as_probability_vector(self.message_dist)
            if msg.size != n:
                raise ValidationError(f"message distribution has {msg.size} entries, expected {n}")
        object.__setattr__(self, "message_dist", msg)

    @property
    def l(self) -> int:
        return self.key_state.l


@dataclass(frozen=True)
class OtpResult:
    p_real: float
    p_ideal: float
    inflation: float

    def to_json_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class MonteCarloResult:
    p_real_hat: float
    stderr: float
    trials: int

    def to_json_dict(self):
        return asdict(self)


def _check_exact(exp):
    if exp.l > MAX_EXACT_LENGTH:
        raise ValidationError(f"exact enumeration supports l <= {MAX_EXACT_LENGTH}, got {exp.l}")


def _success(key_dist, msg, chunk=1 << 10):
    """Per-ciphertext best guess and the resulting success probability."""
    n = msg.size
    m = np.arange(n)
    best = np.empty(n, dtype=np.int64)
    total = 0.0
    for lo in range(0, n, chunk):
        c = np.arange(lo, min(n, lo + chunk))
        joint = msg[None, :] * key_dist[c[:, None] ^ m[None, :]]
        # argmax returns the first maximizer, i.e. the lexicographically smallest message.
        idx = np.argmax(joint, axis=1)
        best[c] = idx
        total += float(joint[np.arange(c.size), idx].sum())
    return best, total


def best_response(exp: OtpExperiment) -> np.ndarray:
    """Maximum-likelihood guess of the message for every ciphertext."""
    _check_exact(exp)
    return _success(exp.key_state.key_distribution(), exp.message_dist)[0]


def run_otp_exact(exp: OtpExperiment) -> OtpResult:
    """Exhaustive success probabilities with the real key and with a uniform key."""
    _check_exact(exp)
    n = 1 << exp.l
    _, p_real = _success(exp.key_state.key_distribution(), exp.message_dist)
    _, p_ideal = _success(np.full(n, 1.0 / n), exp.message_dist)
    return OtpResult(p_real=p_real, p_ideal=p_ideal, inflation=p_real - p_ideal)


def run_otp_montecarlo(exp: OtpExperiment, trials: int, seed: int,
                       batch: int = 1 << 18) -> MonteCarloResult:
    """Frequency estimate of the adversary's success with the real key.

    The adversary plays the fixed best response from :func:`best_response`.
    Messages and keys are drawn from ``numpy.random.default_rng(seed)`` in
    batches of ``batch`` trials, sequentially, so the estimate depends only
    on ``(trials, seed, batch)``.
    """
    if trials < 1:
        raise ValidationError("trials must be >= 1")
    guess = best_response(exp)
    rng = np.random.default_rng(seed)
    n = 1 << exp.l
    key_dist = exp.key_state.key_distribution()
    hits = 0
    done = 0
    while done < trials:
        k = min(batch, trials - done)
        msgs = rng.choice(n, size=k, p=exp.message_dist)
        keys = rng.choice(n, size=k, p=key_dist)
        hits += int(np.count_nonzero(guess[msgs ^ keys] == msgs))
        done += k
    p_hat = hits / trials
    return MonteCarloResult(p_real_hat=p_hat, stderr=float(np.sqrt(p_hat * (1 - p_hat) / trials)), trials=trials)

