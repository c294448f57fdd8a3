"""Distinguishers, maximum advantage, and optimal key guessing.

Two independent routes compute the maximum distinguishing advantage:

* an exhaustive search over every accept-set of a classical outcome space,
  deliberately exponential and capped at 20 outcomes;
* closed forms, i.e. the positive-part sum classically and the projector onto
  the positive eigenspace of ``rho - sigma`` quantumly.

For guessing a key from quantum side information, :func:`solve_guessing`
returns a certificate: a valid measurement (lower bound) and a dual-feasible
operator ``Y`` with ``Y >= p_s rho_s`` for all ``s`` (upper bound ``tr Y``).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _jsonio
from .numerics import (
    ValidationError,
    as_hermitian,
    as_probability_vector,
    check_state,
    eig_hermitian,
)
from .states import CqState
from .tolerances import TOL

__all__ = [
    "Distinguisher",
    "GuessingCertificate",
    "GuessingNotConverged",
    "OracleLimitError",
    "advantage",
    "brute_force_max_advantage",
    "max_advantage_fast",
    "helstrom_advantage",
    "uc_advantage",
    "uc_advantage_oracle",
    "solve_guessing",
]

CLASSICAL = "classical_subset"
QUANTUM = "binary_measurement"


class OracleLimitError(ValueError):
    """The exhaustive oracle was asked for more outcomes than it enumerates."""


class GuessingNotConverged(RuntimeError):
    """The solver hit its iteration cap; ``certificate`` still brackets the optimum."""

    def __init__(self, certificate):
        self.certificate = certificate
        super().__init__(
            f"guessing solver stopped after {certificate.iterations} iterations with gap "
            f"{certificate.gap:.3e} (bracket [{certificate.primal_value!r}, {certificate.dual_value!r}])"
        )


@dataclass(frozen=True, eq=False)
class Distinguisher:
    """A test that outputs 1 or 0.

    Classically it accepts a fixed set of outcome indices; quantumly it is a
    two-outcome measurement whose "1" effect is ``effect``.
    """

    kind: str
    accept_set: frozenset | None = None
    effect: np.ndarray | None = None

    def __post_init__(self):
        if self.kind == CLASSICAL:
            if self.accept_set is None:
                raise ValidationError("classical distinguisher needs an accept_set")
            s = frozenset(int(i) for i in self.accept_set)
            if any(i < 0 for i in s):
                raise ValidationError("accept_set contains negative indices")
            object.__setattr__(self, "accept_set", s)
        elif self.kind == QUANTUM:
            if self.effect is None:
                raise ValidationError("binary measurement needs an effect operator")
            e = as_hermitian(self.effect)
            w = np.linalg.eigvalsh(e)
            if w[0] < -TOL.effect_atol or w[-1] > 1.0 + TOL.effect_atol:
                raise ValidationError(f"effect eigenvalues [{w[0]!r}, {w[-1]!r}] not within [0, 1]")
            object.__setattr__(self, "effect", e)
        else:
            raise ValidationError(f"unknown distinguisher kind {self.kind!r}")

    @classmethod
    def subset(cls, indices) -> "Distinguisher":
        return cls(CLASSICAL, accept_set=frozenset(indices))

    @classmethod
    def measurement(cls, effect) -> "Distinguisher":
        return cls(QUANTUM, effect=effect)


def advantage(d: Distinguisher, p, q) -> float:
    """``|Prob[D = 1 | p] - Prob[D = 1 | q]|`` for distributions or density operators."""
    if d.kind == CLASSICAL:
        p = as_probability_vector(p)
        q = as_probability_vector(q)
        if p.shape != q.shape:
            raise ValidationError(f"length mismatch: {p.size} vs {q.size}")
        if d.accept_set and max(d.accept_set) >= p.size:
            raise ValidationError(f"accept_set refers to outcomes beyond {p.size - 1}")
        idx = sorted(d.accept_set)
        return float(abs(p[idx].sum() - q[idx].sum()))
    rho = check_state(p, name="rho")
    sigma = check_state(q, name="sigma")
    if rho.shape != sigma.shape or rho.shape != d.effect.shape:
        raise ValidationError("effect and states have mismatched dimensions")
    return float(abs(np.trace(d.effect @ (rho - sigma)).real))


def _subset_sums(x):
    sums = np.zeros(1)
    for xi in x:
        sums = np.concatenate([sums, sums + xi])
    return sums


def brute_force_max_advantage(p, q):
    """Maximize the advantage over all ``2**n`` accept-sets by enumeration.

    Returns ``(value, best)`` where ``best`` is the smallest accept-set on
    which ``p`` exceeds ``q`` by the maximum amount.

    Raises
    ------
    OracleLimitError
        If there are more than 20 outcomes; use :func:`max_advantage_fast`.
    """
    p = as_probability_vector(p)
    q = as_probability_vector(q)
    if p.shape != q.shape:
        raise ValidationError(f"length mismatch: {p.size} vs {q.size}")
    n = p.size
    if n > TOL.oracle_max_outcomes:
        raise OracleLimitError(
            f"{n} outcomes exceed the exhaustive oracle limit of {TOL.oracle_max_outcomes}; "
            "use max_advantage_fast instead"
        )
    gains = _subset_sums(p - q)
    sizes = _subset_sums(np.ones(n))
    value = float(np.abs(gains).max())
    # Complements have opposite gain, so the signed maximum equals the absolute one.
    top = gains.max()
    ties = np.flatnonzero(gains >= top - 4 * n * np.finfo(float).eps)
    mask = int(ties[np.argmin(sizes[ties])])
    best = Distinguisher.subset(i for i in range(n) if mask >> i & 1)
    return value, best


def max_advantage_fast(p, q) -> float:
    """Maximum advantage as the positive-part sum ``sum_i max(0, p_i - q_i)``."""
    p = as_probability_vector(p)
    q = as_probability_vector(q)
    if p.shape != q.shape:
        raise ValidationError(f"length mismatch: {p.size} vs {q.size}")
    return float(np.clip(p - q, 0.0, None).sum())


def helstrom_advantage(rho, sigma):
    """Optimal binary test between two density operators.

    The effect is the projector onto the positive eigenspace of
    ``rho - sigma``; its advantage is the trace distance.
    """
    a = check_state(rho, name="rho")
    b = check_state(sigma, name="sigma")
    if a.shape != b.shape:
        raise ValidationError(f"dimension mismatch: {a.shape} vs {b.shape}")
    w, v = eig_hermitian(a - b)
    pos = w > 0
    proj = v[:, pos] @ v[:, pos].conj().T
    value = min(1.0, float(w[pos].sum()))
    return value, Distinguisher.measurement(0.5 * (proj + proj.conj().T))


def uc_advantage(state: CqState) -> float:
    """Maximum advantage for telling ``rho_SE`` from ``rho_bar_S (x) rho_E``.

    Equal to the trace distance to the ideal state because the Helstrom test
    is optimal; the block-diagonal formula is used.
    """
    from .criteria import trace_distance_to_ideal

    return trace_distance_to_ideal(state)


def uc_advantage_oracle(state: CqState) -> float:
    """Independent evaluation of :func:`uc_advantage` for small instances.

    Trivial side information with at most 20 keys goes through the exhaustive
    subset search; otherwise the joint operators are assembled (dimension at
    most 64) and the Helstrom test is built from a Jacobi diagonalization.
    """
    n = 1 << state.l
    if state.trivial_side and n <= TOL.oracle_max_outcomes:
        return brute_force_max_advantage(state.key_distribution(), np.full(n, 1.0 / n))[0]
    if n * state.side_dim <= TOL.assemble_max_dim:
        return helstrom_advantage(state.joint_operator(), state.ideal_operator())[0]
    if state.trivial_side:
        return max_advantage_fast(state.key_distribution(), np.full(n, 1.0 / n))
    raise OracleLimitError(f"joint dimension {n * state.side_dim} too large for the oracle")


@dataclass(frozen=True, eq=False)
class GuessingCertificate:
    """Primal-dual bracket on the optimal guessing probability.

    ``measurement[i]`` is the effect for guessing ``keys[i]``; ``dual`` is a
    Hermitian ``Y`` dominating every ``p_s rho_s``. The optimum lies in
    ``[primal_value, dual_value]``.
    """

    keys: np.ndarray
    measurement: np.ndarray
    dual: np.ndarray
    primal_value: float
    dual_value: float
    iterations: int = 0
    converged: bool = field(default=True)

    @property
    def gap(self) -> float:
        return max(0.0, self.dual_value - self.primal_value)

    @property
    def value(self) -> float:
        return 0.5 * (self.primal_value + self.dual_value)

    def verify(self, blocks, atol=TOL.certificate_atol) -> None:
        """Raise ``AssertionError`` unless the certificate is sound for ``blocks``."""
        d = self.dual.shape[0]
        total = self.measurement.sum(axis=0)
        assert np.abs(total - np.eye(d)).max() <= atol, "effects do not sum to identity"
        for m in self.measurement:
            assert np.linalg.eigvalsh(m)[0] >= -atol, "effect is not PSD"
        for b in blocks:
            assert np.linalg.eigvalsh(self.dual - b)[0] >= -atol, "dual does not dominate p_s rho_s"
        assert self.primal_value <= self.dual_value + atol, "primal exceeds dual"

    def to_json_dict(self) -> dict:
        return {
            "primal": self.primal_value,
            "dual": self.dual_value,
            "gap": self.gap,
            "iterations": self.iterations,
            "converged": self.converged,
            "keys": [int(k) for k in self.keys],
            "measurement": [_jsonio.complex_matrix_to_json(m) for m in self.measurement],
            "dual_operator": _jsonio.complex_matrix_to_json(self.dual),
        }


def _herm(m):
    return 0.5 * (m + m.conj().T)


def _inv_sqrt(m, cutoff=TOL.pinv_cutoff):
    """Pseudo-inverse square root and the projector onto its kernel."""
    w, v = np.linalg.eigh(_herm(m))
    keep = w >= cutoff
    inv = (v[:, keep] / np.sqrt(w[keep])) @ v[:, keep].conj().T
    ker = v[:, ~keep] @ v[:, ~keep].conj().T
    return inv, ker


def _feasible_dual(blocks, y0):
    """Cheapest of two feasible shifts of ``y0``: ``lambda I`` or ``sum_s (A_s - y0)_+``."""
    d = y0.shape[0]
    w, v = np.linalg.eigh(blocks - y0)
    lam = max(0.0, float(w[:, -1].max()))
    pos = np.clip(w, 0.0, None)
    if lam * d <= pos.sum():
        return y0 + lam * np.eye(d)
    return _herm(y0 + np.einsum("sij,sj,skj->ik", v, pos, v.conj()))


def _evaluate(blocks, meas):
    ym = np.einsum("sij,sjk->ik", blocks, meas)
    primal = float(np.trace(ym).real)
    y = _feasible_dual(blocks, _herm(ym))
    return primal, y, float(np.trace(y).real)


def _round_from_dual(blocks, y):
    """Measurements supported on the near-kernels of ``y - A_s``.

    At the optimum each effect lives in the kernel of ``Y - A_s``; a nearly
    optimal ``Y`` therefore suggests nearly projective effects. Several
    thresholds are tried because the right cut is not known in advance.
    """
    w, v = np.linalg.eigh(y - blocks)
    scale = max(float(np.abs(w).max()), np.finfo(float).tiny)
    out = []
    for rel in (1e-13, 1e-11, 1e-9, 1e-7, 1e-5, 1e-3):
        keep = (w <= rel * scale).astype(float)
        if not keep.any():
            continue
        out.append(_renormalize(np.einsum("sij,sj,skj->sik", v, keep, v.conj())))
    return out


def _pretty_good(blocks):
    inv, ker = _inv_sqrt(blocks.sum(axis=0))
    meas = np.einsum("ij,sjk,kl->sil", inv, blocks, inv)
    meas[0] += ker
    return _renormalize(meas)


def _renormalize(meas):
    # Near-singular pseudo-inverses cost positivity and the identity sum to rounding:
    # clip each effect to the PSD cone, then rescale by S^-1/2 with S = sum_s M_s ~ I.
    w, v = np.linalg.eigh(_herm_stack(meas))
    meas = np.einsum("sij,sj,skj->sik", v, np.clip(w, 0.0, None), v.conj())
    inv, ker = _inv_sqrt(meas.sum(axis=0))
    meas = np.einsum("ij,sjk,kl->sil", inv, meas, inv)
    meas[0] += ker
    return _herm_stack(meas)


def _herm_stack(m):
    return 0.5 * (m + m.conj().transpose(0, 2, 1))


def _remove_common_part(blocks):
    """Subtract ``g * mean(blocks)`` with the largest ``g`` keeping every block PSD.

    The optimal measurement is unchanged by a common shift (the objective moves
    by a constant since the effects sum to identity), but the fixed-point
    update converges far faster once the shared part is gone.
    """
    mean = blocks.mean(axis=0)
    inv, _ = _inv_sqrt(mean)
    g = min(float(np.linalg.eigvalsh(_herm(inv @ b @ inv))[0]) for b in blocks)
    g = max(0.0, g) * (1.0 - 1e-9)
    shifted = _herm_stack(blocks - g * mean)
    scale = max(float(np.abs(shifted).max()), np.finfo(float).tiny)
    return shifted / scale


def _fixed_point_step(blocks, meas):
    # M_s <- L^-1 A_s M_s A_s L^-1 with L^2 = sum_s A_s M_s A_s, which keeps sum_s M_s = I.
    amb = np.einsum("sij,sjk,skl->sil", blocks, meas, blocks)
    inv, ker = _inv_sqrt(_herm(amb.sum(axis=0)))
    new = np.einsum("ij,sjk,kl->sil", inv, amb, inv)
    new[0] += ker
    return _renormalize(new)


def solve_guessing(state: CqState, tol: float = TOL.solver_tol,
                   max_iter: int = TOL.solver_max_iter) -> GuessingCertificate:
    """Certified optimal probability of guessing the key from the side information.

    Starts from the pretty-good measurement and iterates the fixed-point
    update ``M_s <- L^-1 p_s rho_s M_s p_s rho_s L^-1`` (run on the blocks with
    their common part removed, which has the same optimal measurements). After
    every step the dual candidate ``Y0 = Herm(sum_s p_s rho_s M_s)`` is made
    feasible, either by ``lambda * I`` with ``lambda = max_s lambda_max(p_s
    rho_s - Y0)`` clipped at 0, or by adding every positive part
    ``(p_s rho_s - Y0)_+``, whichever has the smaller trace. At iterations
    1, 2, 4, 8, ... projective measurements rounded from the best dual are
    also evaluated. The best primal and dual seen so far are kept, so the
    bracket only narrows.

    Raises
    ------
    GuessingNotConverged
        If ``dual - primal > tol`` after ``max_iter`` updates. The exception
        carries the (still valid) certificate.
    """
    if state.side_dim > 16:
        raise ValidationError(f"side_dim {state.side_dim} exceeds the solver limit of 16")
    if state.n_entries > 64:
        raise ValidationError(f"{state.n_entries} keys exceed the solver limit of 64")
    if tol <= 0:
        raise ValidationError("tol must be positive")
    live = state.weights > 0
    keys = state.keys[live]
    blocks = state.weighted_blocks()[live]
    work = _remove_common_part(blocks)
    meas = _pretty_good(blocks)
    primal, y, dual = _evaluate(blocks, meas)
    best_meas, best_primal, best_y, best_dual = meas, primal, y, dual
    it = 0
    next_round = 1
    while best_dual - best_primal > tol and it < max_iter:
        meas = _fixed_point_step(work, meas)
        it += 1
        candidates = [meas]
        if it == next_round:
            candidates += _round_from_dual(blocks, best_y)
            next_round *= 2
        for cand in candidates:
            primal, y, dual = _evaluate(blocks, cand)
            if primal > best_primal:
                best_meas, best_primal = cand, primal
            if dual < best_dual:
                best_y, best_dual = y, dual
    cert = GuessingCertificate(
        keys=keys,
        measurement=best_meas,
        dual=best_y,
        primal_value=best_primal,
        dual_value=best_dual,
        iterations=it,
        converged=best_dual - best_primal <= tol,
    )
    if not cert.converged:
        raise GuessingNotConverged(cert)
    return cert
