"""Executable secrecy criteria for keys with classical or quantum side information."""

from .compose import OtpExperiment, run_otp_exact, run_otp_montecarlo
from .criteria import (
    SecrecyReport,
    build_report,
    guessing_probability,
    hy_relative_error,
    trace_distance_to_ideal,
)
from .distinguish import (
    Distinguisher,
    GuessingCertificate,
    advantage,
    brute_force_max_advantage,
    helstrom_advantage,
    max_advantage_fast,
    solve_guessing,
    uc_advantage,
)
from .numerics import (
    ValidationError,
    eig_hermitian,
    statistical_distance,
    trace_distance,
    trace_norm,
)
from .states import (
    BitString,
    CqState,
    flip_zero_key,
    ideal_key,
    load_state,
    sample_near_ideal,
    sample_random_cq,
    save_state,
    spike_key,
)

__version__ = "0.1.0"
