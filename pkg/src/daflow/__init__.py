"""Exact density evolution, convergence certification, and stochastic
cross-validation for two-component conditional resampling on finite grids.

The recursion alternates between installing the target's two conditional
laws; every identity and inequality behind its convergence in relative
entropy is checked numerically by `diagnostics`, and `sampler` cross-checks
the exact evolution against simulated chains.
"""

from __future__ import annotations

from .dist import (
    Axis,
    ConditionalKernel,
    Direction,
    JointDensity,
    MarginalDensity,
    Target,
    compose,
    compose_with_drift,
    conditional,
    independence_target,
    joint_from_json_dict,
    joint_to_json_dict,
    load_joint,
    make_target,
    marginal,
    random_positive_target,
    save_joint,
)
from .diagnostics import (
    CheckName,
    LemmaReport,
    balance_check,
    cauchy_check,
    cauchy_matrix,
    detailed_balance_residual,
    induced_marginal_kernel,
    lemma1_check,
    lemma2_check,
    lemma3_check,
    lsc_gap,
    reconstruct_from_conditionals,
    reconstruction_check,
    run_verification,
    summarize,
    verification_to_json,
)
from .engine import (
    DAState,
    DATrace,
    RetainPolicy,
    StopReason,
    TraceRecord,
    UpdateKind,
    da_half_step,
    fixed_point_residual,
    initial_state,
    run,
    trace_to_csv,
    trace_to_json,
)
from .errors import (
    BudgetExceeded,
    DAError,
    DimensionMismatch,
    DistributionError,
    IndexOutOfRange,
    NotConverged,
    PositivityViolation,
    StateNotRetained,
    TargetNotPositive,
    ZeroConditional,
)
from .metrics import (
    ExtReal,
    marginal_relative_entropy,
    marginal_total_variation,
    pinsker_gap,
    relative_entropy,
    total_variation,
)
from .sampler import (
    ChainDraws,
    EmpiricalDensity,
    consistency_report,
    draws_to_csv,
    empirical_at,
    run_chains,
)

__all__ = [
    "Axis",
    "BudgetExceeded",
    "ChainDraws",
    "CheckName",
    "ConditionalKernel",
    "DAError",
    "DAState",
    "DATrace",
    "DimensionMismatch",
    "Direction",
    "DistributionError",
    "EmpiricalDensity",
    "ExtReal",
    "IndexOutOfRange",
    "JointDensity",
    "LemmaReport",
    "MarginalDensity",
    "NotConverged",
    "PositivityViolation",
    "RetainPolicy",
    "StateNotRetained",
    "StopReason",
    "Target",
    "TargetNotPositive",
    "TraceRecord",
    "UpdateKind",
    "ZeroConditional",
    "balance_check",
    "cauchy_check",
    "cauchy_matrix",
    "compose",
    "compose_with_drift",
    "conditional",
    "consistency_report",
    "da_half_step",
    "detailed_balance_residual",
    "draws_to_csv",
    "empirical_at",
    "fixed_point_residual",
    "independence_target",
    "induced_marginal_kernel",
    "initial_state",
    "joint_from_json_dict",
    "joint_to_json_dict",
    "lemma1_check",
    "lemma2_check",
    "lemma3_check",
    "load_joint",
    "lsc_gap",
    "make_target",
    "marginal",
    "marginal_relative_entropy",
    "marginal_total_variation",
    "pinsker_gap",
    "random_positive_target",
    "reconstruct_from_conditionals",
    "reconstruction_check",
    "relative_entropy",
    "run",
    "run_chains",
    "run_verification",
    "save_joint",
    "summarize",
    "total_variation",
    "trace_to_csv",
    "trace_to_json",
    "verification_to_json",
]
