"""Numerical tolerances shared by every module and test.

All thresholds live here so that library code and the acceptance suite
agree on a single set of values.
"""

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    hermitian_atol: float = 1e-12
    prob_sum_atol: float = 1e-12
    state_atol: float = 1e-10
    effect_atol: float = 1e-10
    jacobi_offdiag: float = 1e-14
    jacobi_max_sweeps: int = 100
    reconstruct_atol: float = 1e-10
    pinv_cutoff: float = 1e-12
    commute_atol: float = 1e-10
    solver_tol: float = 1e-8
    solver_max_iter: int = 10_000
    certificate_atol: float = 1e-9
    compose_slack: float = 1e-12
    harness_slack: float = 1e-10
    violation_cap: int = 100
    oracle_max_outcomes: int = 20
    max_key_length: int = 20
    assemble_max_dim: int = 64


TOL = Tolerances()
