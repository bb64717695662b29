"""Trace-distance and whole-key guessing criteria for QKD keys, checked at desk scale."""

from .audit import AuditClaim, AuditReport, parse_claims, read_claims, run_audit
from .criteria import (
    GuessingBounds,
    IdealDistance,
    SecurityAssessment,
    check_guessing_bound,
    fvdg_check,
    guessing_probability,
    guessing_probability_exact,
    helstrom,
    koashi_eta_x,
    koashi_eta_z,
    koashi_key_bound,
    koashi_key_distance,
    markov_epsilon_f,
    trace_distance_to_ideal,
)
from .errors import *  # noqa: F401,F403
from .keyrate import (
    KeyRateParams,
    RateReport,
    final_rate,
    koashi_length,
    leftover_hash_delta,
    reevaluate,
    reevaluation_table,
    tomamichel_length,
    uniformity_rate,
)
from .linalg import fidelity, partial_trace, tensor, trace_norm
from .protocol import (
    EveStrategy,
    ProtocolRun,
    SimConfig,
    ToeplitzHash,
    estimate_p_abort,
    full_pipeline_assessment,
    run_bb84,
)
from .states import CqState, DensityOperator, cq_to_joint, ideal_cq_state, phase_error_family, product_cq_state

__version__ = "0.1.0"
