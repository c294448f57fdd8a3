"""The two secrecy criteria and per-state reports.

* trace-distance criterion: ``d(rho_SE, rho_bar_S (x) rho_E) <= eps``;
* guessing criterion: the optimal guessing probability ``P(S|E)`` is within
  relative error ``eps`` of ``2**-l``, i.e. ``|P(S|E) * 2**l - 1| <= eps``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import NamedTuple

import numpy as np

from . import _jsonio
from .distinguish import solve_guessing
from .numerics import ValidationError
from .states import CqState
from .tolerances import TOL

__all__ = [
    "GuessingBracket",
    "SecrecyReport",
    "trace_distance_to_ideal",
    "side_is_classical",
    "common_eigenbasis",
    "guessing_probability",
    "hy_relative_error",
    "hy_error_bounds",
    "build_report",
]


class GuessingBracket(NamedTuple):
    value: float
    lower: float
    upper: float


def trace_distance_to_ideal(state: CqState) -> float:
    """``1/2 sum_s || p_s rho_s - 2**-l rho_E ||_1`` summed over all ``2**l`` keys.

    Keys without an entry contribute ``2**-l`` each (their block is just the
    ideal one).
    """
    n = 1 << state.l
    missing = (n - state.n_entries) / n
    if state.trivial_side:
        total = float(np.abs(state.weights - 1.0 / n).sum())
    else:
        diff = state.weighted_blocks() - state.side_marginal() / n
        total = float(np.abs(np.linalg.eigvalsh(diff)).sum())
    return float(min(1.0, max(0.0, 0.5 * (total + missing))))


def side_is_classical(state: CqState, atol: float = TOL.commute_atol) -> bool:
    """True when all conditional side states commute pairwise (max-entry test)."""
    if state.trivial_side:
        return True
    r = state.rhos
    if state.n_entries <= 128:
        comm = np.einsum("aij,bjk->abik", r, r)
        comm = comm - comm.transpose(1, 0, 2, 3)
        return bool(np.abs(comm).max() < atol)
    basis = common_eigenbasis(r)
    return basis is not None


def _split_clusters(w, tol):
    groups, start = [], 0
    for i in range(1, len(w) + 1):
        if i == len(w) or w[i] - w[i - 1] > tol:
            groups.append(np.arange(start, i))
            start = i
    return groups


def common_eigenbasis(mats, atol: float = TOL.commute_atol):
    """Orthonormal basis diagonalizing every matrix in ``mats``, or None.

    Refines eigenspaces one matrix at a time; returns None if the result
    fails to diagonalize some matrix to within ``atol``.
    """
    mats = np.asarray(mats, dtype=complex)
    d = mats.shape[1]
    groups = [np.eye(d, dtype=complex)]
    for a in mats:
        if all(g.shape[1] == 1 for g in groups):
            break
        refined = []
        for v in groups:
            if v.shape[1] == 1:
                refined.append(v)
                continue
            w, u = np.linalg.eigh(v.conj().T @ a @ v)
            for idx in _split_clusters(w, 1e3 * atol):
                refined.append(v @ u[:, idx])
        groups = refined
    basis = np.hstack(groups)
    rotated = np.einsum("ji,sjk,kl->sil", basis.conj(), mats, basis)
    off = rotated - np.einsum("sii->si", rotated)[:, :, None] * np.eye(d)
    if np.abs(off).max() >= atol:
        return None
    return basis


def _classical_guess(state: CqState):
    if state.trivial_side:
        return float(state.weights.max())
    basis = common_eigenbasis(state.rhos)
    if basis is None:
        return None
    cond = np.einsum("ji,sjk,ki->si", basis.conj(), state.rhos, basis).real
    joint = state.weights[:, None] * np.clip(cond, 0.0, None)
    return float(joint.max(axis=0).sum())


def guessing_probability(state: CqState, tol: float = TOL.solver_tol,
                         max_iter: int = TOL.solver_max_iter) -> GuessingBracket:
    """Optimal probability of guessing the key given the side information.

    Classical (mutually commuting) side information is evaluated exactly in a
    common eigenbasis as ``sum_e max_s p(s, e)``. Otherwise the certified
    solver supplies a bracket ``[lower, upper]`` of width at most ``tol`` and
    ``value`` is its midpoint.

    Raises
    ------
    GuessingNotConverged
        From the solver; the exception carries the best bracket found.
    """
    if tol <= 0:
        raise ValidationError("tol must be positive")
    if side_is_classical(state):
        v = _classical_guess(state)
        if v is not None:
            return GuessingBracket(v, v, v)
    cert = solve_guessing(state, tol=tol, max_iter=max_iter)
    return GuessingBracket(cert.value, cert.primal_value, cert.dual_value)


def _rel_err(p, l):
    return abs(p * (1 << l) - 1.0)


def hy_error_bounds(state: CqState, tol: float = TOL.solver_tol):
    """Relative error at the bracket midpoint and its worst case over the bracket."""
    g = guessing_probability(state, tol)
    return _rel_err(g.value, state.l), max(_rel_err(g.lower, state.l), _rel_err(g.upper, state.l))


def hy_relative_error(state: CqState, tol: float = TOL.solver_tol) -> float:
    """``|P(S|E) * 2**l - 1|`` evaluated at the certified midpoint."""
    return hy_error_bounds(state, tol)[0]


@dataclass(frozen=True)
class SecrecyReport:
    """Every criterion value for one state at target ``epsilon_target``.

    ``hy_rel_error`` uses the midpoint guessing probability while
    ``hy_rel_error_upper`` is the worst case over the certified bracket; the
    guessing verdict uses the latter. ``avg_excess_prob`` is
    ``sum_s max(0, p_s - 2**-l)`` over the key marginal, which coincides with
    ``td`` when there is no side information.
    """

    l: int
    side_dim: int
    td: float
    p_guess: float
    p_guess_lower: float
    p_guess_upper: float
    hy_rel_error: float
    hy_rel_error_upper: float
    uc_advantage: float
    max_key_prob: float
    avg_excess_prob: float
    epsilon_target: float
    verdict_td: bool
    verdict_hy: bool

    def to_json_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return _jsonio.dumps(self.to_json_dict())

    def to_text(self) -> str:
        rows = []
        for k, v in self.to_json_dict().items():
            if isinstance(v, bool):
                rows.append(f"{k:20s} {'true' if v else 'false'}")
            elif isinstance(v, float):
                rows.append(f"{k:20s} {_jsonio.fmt_float(v)}")
            else:
                rows.append(f"{k:20s} {v}")
        return "\n".join(rows)


def build_report(state: CqState, eps: float, tol: float = TOL.solver_tol) -> SecrecyReport:
    from .distinguish import uc_advantage

    if not 0.0 < eps < 1.0:
        raise ValidationError(f"eps={eps!r} outside (0, 1)")
    n = 1 << state.l
    td = trace_distance_to_ideal(state)
    g = guessing_probability(state, tol)
    err_mid = _rel_err(g.value, state.l)
    err_hi = max(_rel_err(g.lower, state.l), _rel_err(g.upper, state.l))
    return SecrecyReport(
        l=state.l,
        side_dim=state.side_dim,
        td=td,
        p_guess=g.value,
        p_guess_lower=g.lower,
        p_guess_upper=g.upper,
        hy_rel_error=err_mid,
        hy_rel_error_upper=err_hi,
        uc_advantage=uc_advantage(state),
        max_key_prob=float(state.weights.max()),
        avg_excess_prob=float(np.clip(state.weights - 1.0 / n, 0.0, None).sum()),
        epsilon_target=float(eps),
        verdict_td=td <= eps,
        verdict_hy=err_hi <= eps,
    )
