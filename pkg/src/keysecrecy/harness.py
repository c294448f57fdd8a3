"""Batch checks of the relations between the secrecy criteria.

Four checks:

``TD_implies_UC``
    Whenever the trace distance to ideal is at most ``eps``, no distinguisher
    (evaluated through an independent oracle) and no one-time-pad adversary
    gains more than ``eps``.
``HY_implies_UC``
    States meeting the guessing criterion at ``eps`` are ``eps``-secret. Proven
    for classical side information through ``td <= 2**l (p_guess - 2**-l)``;
    quantum side information is evaluated and reported, never asserted.
``TD_not_implies_HY``
    Constructive witness: a spiked key meeting the trace-distance criterion
    while missing the guessing criterion by a factor ``2**l``.
``HY_not_necessary``
    Constructive witness: the flip-zero key is ``2**-l``-secret while its
    guessing probability is twice the uniform value.

Per-sample seeds are derived as ``SeedSequence([seed, index])`` so a run is a
pure function of ``(seed, n_samples, eps)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _jsonio
from .compose import OtpExperiment, run_otp_exact
from .criteria import guessing_probability, hy_error_bounds, trace_distance_to_ideal
from .distinguish import uc_advantage_oracle
from .numerics import ValidationError
from .states import (
    CqState,
    flip_zero_key,
    ideal_key,
    sample_near_ideal,
    sample_random_cq,
    spike_key,
)
from .tolerances import TOL

__all__ = [
    "CHECKS",
    "ImplicationResult",
    "check_td_implies_uc",
    "check_hy_implies_uc",
    "check_td_not_implies_hy",
    "check_hy_not_necessary",
    "run_all",
]

TD_IMPLIES_UC = "TD_implies_UC"
HY_IMPLIES_UC = "HY_implies_UC"
TD_NOT_IMPLIES_HY = "TD_not_implies_HY"
HY_NOT_NECESSARY = "HY_not_necessary"
CHECKS = (TD_IMPLIES_UC, HY_IMPLIES_UC, TD_NOT_IMPLIES_HY, HY_NOT_NECESSARY)


@dataclass
class ImplicationResult:
    name: str
    instances_tested: int
    violations: list = field(default_factory=list)
    passed: bool = False
    details: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "instances_tested": self.instances_tested,
            "violations": self.violations,
            "details": self.details,
        }

    def to_json(self) -> str:
        return _jsonio.dumps(self.to_json_dict())


def _child_seed(seed, i):
    return int(np.random.SeedSequence([seed, i]).generate_state(1, dtype=np.uint64)[0])


def _finish_violations(violations):
    violations.sort(key=lambda v: v["state"])
    return violations[: TOL.violation_cap]


def _sample_plan(i):
    """Cycle through key lengths and side-information flavours."""
    l = 1 + i % 3
    flavour = (i // 3) % 3
    side_dim = 1 if flavour == 0 else 2 + (i // 9) % 3
    return l, side_dim, flavour == 1


def _descriptor(kind, **params):
    return kind + "(" + ", ".join(f"{k}={v}" for k, v in params.items()) + ")"


def _constructed_states():
    out = []
    for l in (1, 2, 3):
        out.append((_descriptor("ideal_key", l=l), ideal_key(l)))
        out.append((_descriptor("ideal_key", l=l, side="mixed2"), ideal_key(l, np.eye(2) / 2)))
    for l in range(2, 9):
        out.append((_descriptor("flip_zero_key", l=l), flip_zero_key(l)))
    for l, delta in ((2, 0.25), (3, 0.05), (4, 0.01), (10, 0.001)):
        out.append((_descriptor("spike_key", l=l, delta=delta), spike_key(l, delta)))
    return out


def check_td_implies_uc(n_samples: int, seed: int, eps: float) -> ImplicationResult:
    """Premise ``td <= eps``; conclusion: oracle advantage and OTP inflation stay within ``td``.

    Checking against each state's own ``td`` (rather than only ``eps``) makes
    the run meaningful for every ``eps`` at once.
    """
    if n_samples < 1:
        raise ValidationError("n_samples must be >= 1")
    slack = TOL.harness_slack
    cases = _constructed_states()
    for i in range(n_samples):
        l, d, classical = _sample_plan(i)
        desc = _descriptor("sample_random_cq", l=l, side_dim=d, classical=classical, index=i)
        cases.append((desc, sample_random_cq(l, d, _child_seed(seed, i), classical=classical)))
    violations, tested, max_gap = [], 0, 0.0
    for desc, state in cases:
        td = trace_distance_to_ideal(state)
        if td > eps:
            continue
        tested += 1
        uc = uc_advantage_oracle(state)
        observed = {"td": td, "uc_oracle": uc}
        bad = abs(uc - td) > slack or uc > eps + slack
        if state.trivial_side and state.l <= 12:
            infl = run_otp_exact(OtpExperiment(state)).inflation
            observed["otp_inflation"] = infl
            bad |= infl > td + TOL.compose_slack
        max_gap = max(max_gap, abs(uc - td))
        if bad:
            violations.append({"state": desc, "observed": observed})
    return ImplicationResult(
        name=TD_IMPLIES_UC,
        instances_tested=tested,
        violations=_finish_violations(violations),
        passed=not violations,
        details={"eps": eps, "max_abs_oracle_minus_td": max_gap},
    )


def check_hy_implies_uc(n_samples: int, seed: int, eps: float,
                        n_quantum: int | None = None) -> ImplicationResult:
    """States from :func:`sample_near_ideal` meet the guessing criterion; check ``uc <= eps``.

    ``n_samples`` classical states (no side information, or commuting side
    states) are asserted. ``n_quantum`` states with generic side information
    (default ``max(1, n_samples // 10)``) are only reported; their worst
    ``uc / eps`` ratio appears in ``details`` and any excess is flagged there.
    """
    if n_samples < 1:
        raise ValidationError("n_samples must be >= 1")
    if not 0.0 < eps < 1.0:
        raise ValidationError(f"eps={eps!r} outside (0, 1)")
    slack = TOL.harness_slack
    if n_quantum is None:
        n_quantum = max(1, n_samples // 10)
    cases = [(_descriptor("ideal_key", l=l), ideal_key(l)) for l in (1, 2, 3)]
    for i in range(n_samples):
        l = 1 + i % 3
        d = 1 if i % 2 == 0 else 2 + (i // 2) % 3
        desc = _descriptor("sample_near_ideal", l=l, side_dim=d, classical=True, index=i)
        cases.append((desc, sample_near_ideal(l, d, eps, _child_seed(seed, i), classical=True)))
    violations = []
    tightest = 0.0
    for desc, state in cases:
        err_hi = hy_error_bounds(state)[1]
        td = trace_distance_to_ideal(state)
        uc = uc_advantage_oracle(state)
        p = guessing_probability(state).value
        bound = (1 << state.l) * (p - 1.0 / (1 << state.l))
        tightest = max(tightest, uc / eps)
        if err_hi > eps or uc > eps + slack or td > bound + slack or abs(uc - td) > slack:
            violations.append({"state": desc, "observed": {
                "hy_rel_error": err_hi, "td": td, "uc_oracle": uc, "hy_bound": bound}})

    quantum_ratio, flagged = 0.0, []
    for j in range(n_quantum):
        i = n_samples + j
        l = 1 + j % 2
        d = 2 + j % 2
        desc = _descriptor("sample_near_ideal", l=l, side_dim=d, classical=False, index=i)
        state = sample_near_ideal(l, d, eps, _child_seed(seed, i))
        uc = uc_advantage_oracle(state)
        quantum_ratio = max(quantum_ratio, uc / eps)
        if uc > eps + slack:
            flagged.append({"state": desc, "observed": {"uc_oracle": uc, "eps": eps}})
    return ImplicationResult(
        name=HY_IMPLIES_UC,
        instances_tested=len(cases),
        violations=_finish_violations(violations),
        passed=not violations,
        details={
            "eps": eps,
            "classical_max_uc_over_eps": tightest,
            "quantum_instances": n_quantum,
            "quantum_max_uc_over_eps": quantum_ratio,
            "quantum_flagged": _finish_violations(flagged),
        },
    )


def check_td_not_implies_hy(l: int, eps: float) -> ImplicationResult:
    """Witness ``spike_key(l, eps)``: ``td = eps`` yet relative guessing error ``eps * 2**l``."""
    if l < 2 or not 0.0 < eps < 1.0:
        raise ValidationError(f"need l >= 2 and 0 < eps < 1 (got l={l}, eps={eps})")
    if eps * (1 << l) <= eps or eps > 1.0 - 2.0 ** -l:
        raise ValidationError(f"separation is degenerate for l={l}, eps={eps}")
    state = spike_key(l, eps)
    td = trace_distance_to_ideal(state)
    err = hy_error_bounds(state)[0]
    ok = td <= eps + TOL.harness_slack and err > eps
    return ImplicationResult(
        name=TD_NOT_IMPLIES_HY,
        instances_tested=1,
        passed=ok,
        details={"witness": _descriptor("spike_key", l=l, delta=eps), "l": l, "eps": eps,
                 "td": td, "hy_rel_error": err},
    )


def check_hy_not_necessary(l: int, eps: float) -> ImplicationResult:
    """Witness ``flip_zero_key(l)``: advantage ``2**-l <= eps`` yet relative guessing error 1."""
    if l < 2:
        raise ValidationError(f"need l >= 2 (got {l})")
    if 2.0 ** -l > eps:
        raise ValidationError(f"2**-{l} = {2.0 ** -l!r} exceeds eps={eps!r}")
    state = flip_zero_key(l)
    uc = uc_advantage_oracle(state)
    err = hy_error_bounds(state)[0]
    ok = uc <= eps and err > eps
    return ImplicationResult(
        name=HY_NOT_NECESSARY,
        instances_tested=1,
        passed=ok,
        details={"witness": _descriptor("flip_zero_key", l=l), "l": l, "eps": eps,
                 "uc_advantage": uc, "p_guess": guessing_probability(state).value, "hy_rel_error": err},
    )


DEFAULTS = {
    TD_IMPLIES_UC: {"eps": 1.0},
    HY_IMPLIES_UC: {"eps": 0.01},
    TD_NOT_IMPLIES_HY: {"l": 10, "eps": 0.001},
    HY_NOT_NECESSARY: {"l": 8, "eps": 0.01},
}


def run_check(name: str, n_samples: int = 1000, seed: int = 0, l: int | None = None,
              eps: float | None = None) -> ImplicationResult:
    if name not in CHECKS:
        raise ValidationError(f"unknown check {name!r}; choose from {', '.join(CHECKS)}")
    eps = DEFAULTS[name]["eps"] if eps is None else eps
    if name == TD_IMPLIES_UC:
        return check_td_implies_uc(n_samples, seed, eps)
    if name == HY_IMPLIES_UC:
        return check_hy_implies_uc(n_samples, seed, eps)
    l = DEFAULTS[name]["l"] if l is None else l
    if name == TD_NOT_IMPLIES_HY:
        return check_td_not_implies_hy(l, eps)
    return check_hy_not_necessary(l, eps)


def run_all(n_samples: int, seed: int) -> list[ImplicationResult]:
    """Every check at its default parameters."""
    return [run_check(name, n_samples, seed) for name in CHECKS]
