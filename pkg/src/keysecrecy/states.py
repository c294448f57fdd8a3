"""Keys, classical-quantum states, and constructors for the separating examples.

A :class:`CqState` stores a key distribution ``p_s`` over bit strings of
length ``l`` together with the adversary's conditional state ``rho_E^s`` for
each key. The joint operator ``sum_s p_s |s><s| (x) rho_E^s`` is never stored;
it can be assembled on demand for small instances.

Keys are integers internally. Bit strings render most significant bit first,
so integer order coincides with lexicographic order of the strings.

Random samplers draw from numpy's PCG64 generator, seeded through
``numpy.random.default_rng(seed)``; identical seeds reproduce identical states
on any platform with the same numpy release.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from . import _jsonio
from .numerics import ValidationError, as_hermitian, check_state
from .tolerances import TOL

__all__ = [
    "BitString",
    "CqState",
    "StateFormatError",
    "ideal_key",
    "flip_zero_key",
    "spike_key",
    "sample_random_cq",
    "sample_near_ideal",
    "mix_states",
    "load_state",
    "save_state",
]


class StateFormatError(ValidationError):
    """A state file could not be parsed into a valid :class:`CqState`."""


@dataclass(frozen=True, order=True)
class BitString:
    """A key value in ``{0,1}^length``, stored as an integer."""

    value: int
    length: int

    def __post_init__(self):
        if not 1 <= self.length <= TOL.max_key_length:
            raise ValidationError(f"key length {self.length} outside [1, {TOL.max_key_length}]")
        if not 0 <= self.value < (1 << self.length):
            raise ValidationError(f"value {self.value} does not fit in {self.length} bits")

    @classmethod
    def from_str(cls, bits: str) -> "BitString":
        if not bits or set(bits) - {"0", "1"}:
            raise ValidationError(f"not a bit string: {bits!r}")
        return cls(int(bits, 2), len(bits))

    @classmethod
    def zeros(cls, length: int) -> "BitString":
        return cls(0, length)

    @classmethod
    def ones(cls, length: int) -> "BitString":
        return cls((1 << length) - 1, length)

    @property
    def bits(self) -> tuple[int, ...]:
        return tuple(int(b) for b in str(self))

    def __str__(self) -> str:
        return format(self.value, f"0{self.length}b")


def _check_length(l, lo=1, hi=TOL.max_key_length):
    if isinstance(l, bool) or not isinstance(l, (int, np.integer)) or not lo <= l <= hi:
        raise ValidationError(f"key length l={l!r} outside [{lo}, {hi}]")
    return int(l)


@dataclass(frozen=True, eq=False)
class CqState:
    """Classical key with (possibly quantum) side information.

    Attributes
    ----------
    l : int
        Key length in bits, 1 <= l <= 20.
    keys : ndarray of int
        Distinct keys with an explicit entry; absent keys have weight 0.
    weights : ndarray of float
        ``p_s`` for each entry of ``keys``; sums to 1.
    rhos : ndarray of complex, shape (n, side_dim, side_dim)
        Conditional side-information states, each PSD with unit trace.
    """

    l: int
    keys: np.ndarray
    weights: np.ndarray
    rhos: np.ndarray

    def __post_init__(self):
        l = _check_length(self.l)
        keys = np.asarray(self.keys, dtype=np.int64).reshape(-1)
        weights = np.asarray(self.weights, dtype=float).reshape(-1)
        rhos = np.asarray(self.rhos, dtype=complex)
        if rhos.ndim == 1 and rhos.size == keys.size:
            rhos = rhos.reshape(-1, 1, 1)
        if keys.size == 0:
            raise ValidationError("state has no entries")
        if weights.shape != keys.shape or rhos.ndim != 3 or rhos.shape[0] != keys.size:
            raise ValidationError(
                f"inconsistent entry shapes: keys {keys.shape}, weights {weights.shape}, rhos {rhos.shape}"
            )
        if rhos.shape[1] != rhos.shape[2]:
            raise ValidationError(f"side-information blocks are not square: {rhos.shape[1:]}")
        if keys.min() < 0 or keys.max() >= (1 << l):
            raise ValidationError(f"key index out of range for l={l}")
        if np.unique(keys).size != keys.size:
            raise ValidationError("duplicate keys in state")
        if not np.all(np.isfinite(weights)) or weights.min() < 0:
            raise ValidationError("weights must be finite and non-negative")
        if abs(weights.sum() - 1.0) > TOL.prob_sum_atol:
            raise ValidationError(f"weights sum to {weights.sum()!r}, not 1")
        _check_blocks(rhos)
        for name, val in (("l", l), ("keys", keys), ("weights", weights), ("rhos", rhos)):
            if isinstance(val, np.ndarray):
                val.setflags(write=False)
            object.__setattr__(self, name, val)

    @property
    def side_dim(self) -> int:
        return self.rhos.shape[1]

    @property
    def n_entries(self) -> int:
        return self.keys.size

    @property
    def trivial_side(self) -> bool:
        return self.side_dim == 1

    def entries(self) -> Iterator[tuple[BitString, float, np.ndarray]]:
        for k, p, rho in zip(self.keys, self.weights, self.rhos):
            yield BitString(int(k), self.l), float(p), rho

    def key_distribution(self) -> np.ndarray:
        """Marginal distribution of the key over all ``2**l`` values."""
        full = np.zeros(1 << self.l)
        full[self.keys] = self.weights
        return full

    def side_marginal(self) -> np.ndarray:
        """``rho_E = sum_s p_s rho_E^s``."""
        return np.einsum("s,sij->ij", self.weights, self.rhos)

    def weighted_blocks(self) -> np.ndarray:
        """``p_s rho_E^s`` for each stored entry."""
        return self.weights[:, None, None] * self.rhos

    def joint_operator(self) -> np.ndarray:
        """Assemble ``rho_SE`` as a dense ``2**l * side_dim`` square matrix."""
        return _assemble(self.l, self.keys, self.weighted_blocks())

    def ideal_operator(self) -> np.ndarray:
        """Assemble ``rho_bar_S (x) rho_E`` for this state's side marginal."""
        n = 1 << self.l
        return np.kron(np.eye(n) / n, self.side_marginal())

    def to_json_dict(self) -> dict:
        entries = []
        for bits, p, rho in self.entries():
            item = {"key": str(bits), "p": p}
            if not self.trivial_side:
                item["rho"] = _jsonio.complex_matrix_to_json(rho)
            entries.append(item)
        return {"l": self.l, "side_dim": self.side_dim, "entries": entries}

    @classmethod
    def from_json_dict(cls, data) -> "CqState":
        return _parse_state(data)


def _check_blocks(rhos):
    d = rhos.shape[1]
    if d == 1:
        bad = np.abs(rhos[:, 0, 0] - 1.0)
        if bad.max() > TOL.state_atol:
            i = int(np.argmax(bad))
            raise ValidationError(f"entry {i}: one-dimensional side state must be [[1]], got {rhos[i, 0, 0]!r}")
        return
    herm = np.abs(rhos - rhos.conj().transpose(0, 2, 1)).max(axis=(1, 2))
    if herm.max() > TOL.hermitian_atol:
        i = int(np.argmax(herm))
        as_hermitian(rhos[i])
    traces = np.einsum("sii->s", rhos).real
    bad = np.abs(traces - 1.0)
    if bad.max() > TOL.state_atol:
        i = int(np.argmax(bad))
        raise ValidationError(f"entry {i}: side state has trace {traces[i]!r}, expected 1")
    lmin = np.linalg.eigvalsh(rhos)[:, 0]
    if lmin.min() < -TOL.state_atol:
        i = int(np.argmin(lmin))
        raise ValidationError(f"entry {i}: side state is not PSD (min eigenvalue {lmin[i]!r})")


def _assemble(l, keys, blocks):
    n = 1 << l
    d = blocks.shape[1]
    if n * d > TOL.assemble_max_dim:
        raise ValidationError(
            f"joint dimension {n * d} exceeds {TOL.assemble_max_dim}; use the block-wise path"
        )
    out = np.zeros((n * d, n * d), dtype=complex)
    for k, b in zip(keys, blocks):
        out[k * d:(k + 1) * d, k * d:(k + 1) * d] = b
    return out


def _trivial(n):
    return np.ones((n, 1, 1), dtype=complex)


def ideal_key(l: int, side=None) -> CqState:
    """Uniform key of length ``l``, independent of the side state ``side``.

    ``side=None`` means no side information.
    """
    l = _check_length(l)
    n = 1 << l
    if side is None:
        rhos = _trivial(n)
    else:
        s = check_state(side, name="side")
        rhos = np.broadcast_to(s, (n,) + s.shape)
    return CqState(l, np.arange(n), np.full(n, 1.0 / n), rhos)


def flip_zero_key(l: int) -> CqState:
    """Uniform key, except that the all-zero outcome is replaced by all-ones.

    The all-zero key is kept as an explicit zero-weight entry so reports can
    show it. The all-ones key carries weight ``2 * 2**-l``.
    """
    l = _check_length(l, lo=2)
    n = 1 << l
    w = np.full(n, 1.0 / n)
    w[0] = 0.0
    w[n - 1] = 2.0 / n
    return CqState(l, np.arange(n), w, _trivial(n))


def spike_key(l: int, delta: float) -> CqState:
    """Key whose all-zero outcome is boosted by ``delta`` above uniform.

    The remaining mass ``1 - 2**-l - delta`` is spread evenly over the other
    ``2**l - 1`` keys, so the statistical distance to uniform is ``delta``.
    """
    l = _check_length(l)
    n = 1 << l
    delta = float(delta)
    if not 0.0 < delta <= 1.0 - 1.0 / n:
        raise ValidationError(f"delta={delta!r} outside (0, {1.0 - 1.0 / n!r}]")
    rest = (1.0 - 1.0 / n - delta) / (n - 1)
    w = np.full(n, rest)
    w[0] = 1.0 / n + delta
    return CqState(l, np.arange(n), w, _trivial(n))


def _random_side_state(rng, d, classical):
    if classical:
        x = np.abs(rng.normal(size=d) + 1j * rng.normal(size=d)) ** 2
        return np.diag(x / x.sum()).astype(complex)
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    m = g @ g.conj().T
    m = m / np.trace(m).real
    return 0.5 * (m + m.conj().T)


def sample_random_cq(l: int, side_dim: int, seed: int, classical: bool = False) -> CqState:
    """Random cq-state with flat-Dirichlet key weights.

    Each conditional state is ``G G^dag / tr(G G^dag)`` for a complex Gaussian
    ``G``. With ``classical=True`` the conditional states are diagonal in the
    computational basis instead, i.e. the side information is a classical
    random variable.
    """
    l = _check_length(l, hi=3)
    if isinstance(side_dim, bool) or not 1 <= side_dim <= 4:
        raise ValidationError(f"side_dim={side_dim!r} outside [1, 4]")
    rng = np.random.default_rng(seed)
    n = 1 << l
    w = rng.dirichlet(np.ones(n))
    w = w / w.sum()
    if side_dim == 1:
        rhos = _trivial(n)
    else:
        rhos = np.stack([_random_side_state(rng, side_dim, classical) for _ in range(n)])
    return CqState(l, np.arange(n), w, rhos)


def mix_states(a: CqState, b: CqState, t: float) -> CqState:
    """Convex mixture ``(1 - t) a + t b`` of two cq-states on the same spaces."""
    if a.l != b.l or a.side_dim != b.side_dim:
        raise ValidationError("cannot mix states with different key length or side dimension")
    if not 0.0 <= t <= 1.0:
        raise ValidationError(f"mixing weight {t!r} outside [0, 1]")
    n = 1 << a.l
    d = a.side_dim
    blocks = np.zeros((n, d, d), dtype=complex)
    blocks[a.keys] += (1.0 - t) * a.weighted_blocks()
    blocks[b.keys] += t * b.weighted_blocks()
    w = np.einsum("sii->s", blocks).real
    keep = np.union1d(a.keys, b.keys)
    w_keep = np.clip(w[keep], 0.0, None)
    rhos = np.empty((keep.size, d, d), dtype=complex)
    for i, k in enumerate(keep):
        if w_keep[i] > 0:
            rhos[i] = blocks[k] / w_keep[i]
        else:
            rhos[i] = np.eye(d) / d
    return CqState(a.l, keep, w_keep / w_keep.sum(), rhos)


def sample_near_ideal(l: int, side_dim: int, eps: float, seed: int, classical: bool = False,
                      tol: float = TOL.solver_tol, max_halvings: int = 64) -> CqState:
    """Random state whose guessing-probability relative error is at most ``eps``.

    A random cq-state is mixed into the ideal key (with the random state's own
    side marginal) at a random weight ``t``; ``t`` is halved until the
    conservative relative error is within ``eps``. If that never happens the
    ideal state itself is returned.
    """
    from .criteria import hy_error_bounds

    if not 0.0 < eps < 1.0:
        raise ValidationError(f"eps={eps!r} outside (0, 1)")
    rng = np.random.default_rng(seed)
    noise = sample_random_cq(l, side_dim, int(rng.integers(2**63)), classical=classical)
    side = None if side_dim == 1 else noise.side_marginal()
    ideal = ideal_key(l, side)
    t = float(rng.uniform(0.0, 1.0))
    for _ in range(max_halvings):
        cand = mix_states(ideal, noise, t)
        if hy_error_bounds(cand, tol)[1] <= eps:
            return cand
        t *= 0.5
    return ideal


def _parse_state(data) -> CqState:
    if not isinstance(data, dict):
        raise StateFormatError("top level: expected a JSON object")
    for field in ("l", "side_dim", "entries"):
        if field not in data:
            raise StateFormatError(f"missing field {field!r}")
    l, d = data["l"], data["side_dim"]
    if isinstance(l, bool) or not isinstance(l, int):
        raise StateFormatError(f"field 'l': expected integer, got {l!r}")
    if isinstance(d, bool) or not isinstance(d, int) or d < 1:
        raise StateFormatError(f"field 'side_dim': expected positive integer, got {d!r}")
    entries = data["entries"]
    if not isinstance(entries, list) or not entries:
        raise StateFormatError("field 'entries': expected a non-empty list")
    keys, weights, rhos = [], [], []
    for i, e in enumerate(entries):
        where = f"entries[{i}]"
        if not isinstance(e, dict):
            raise StateFormatError(f"{where}: expected an object")
        key = e.get("key")
        if not isinstance(key, str) or len(key) != l or set(key) - {"0", "1"}:
            raise StateFormatError(f"{where}.key: expected a {l}-bit string, got {key!r}")
        p = e.get("p")
        if isinstance(p, bool) or not isinstance(p, (int, float)):
            raise StateFormatError(f"{where}.p: expected a number, got {p!r}")
        if "rho" in e:
            try:
                rho = _jsonio.complex_matrix_from_json(e["rho"], where=f"{where}.rho")
            except ValueError as exc:
                raise StateFormatError(str(exc)) from None
            if rho.shape != (d, d):
                raise StateFormatError(f"{where}.rho: expected {d}x{d}, got {rho.shape[0]}x{rho.shape[1]}")
        elif d == 1:
            rho = np.ones((1, 1), dtype=complex)
        else:
            raise StateFormatError(f"{where}.rho: required when side_dim > 1")
        keys.append(int(key, 2))
        weights.append(float(p))
        rhos.append(rho)
    try:
        return CqState(l, np.array(keys), np.array(weights), np.stack(rhos))
    except StateFormatError:
        raise
    except ValidationError as exc:
        raise StateFormatError(f"invalid state: {exc}") from None


def load_state(path) -> CqState:
    """Read a state file; parse problems raise :class:`StateFormatError` with location info."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise StateFormatError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return _parse_state(data)


def save_state(state: CqState, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_jsonio.dumps(state.to_json_dict()) + "\n")
