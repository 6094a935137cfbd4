"""Risk-controlling candidate selection via multiple hypothesis testing.

The package turns per-candidate calibration losses into statistical
evidence (p-values or e-processes), runs a family-wise or
false-discovery-rate controlling selection procedure over that evidence,
and ships a Monte Carlo harness that certifies the advertised guarantee
on synthetic ground truth.
"""

from .errors import ConfigError, DataError, InvariantError, ProvenanceError, RiskcalError
from .risk import (
    AVERAGE,
    CONTROLLED,
    FREE,
    QUANTILE,
    Candidate,
    CandidateSet,
    LossTable,
    MultiObjectiveProblem,
    RiskSpec,
    SplitConfig,
    empirical_average_risk,
    empirical_quantile,
    estimate_risk,
    exceedance_count,
    risk_matrix,
    split_calibration,
)
from .evidence import (
    BettingConfig,
    EProcessState,
    PValue,
    binomial_tail,
    candidate_p_value,
    combine_p_values,
    eprocess_update,
    hoeffding_p_value,
    next_bet,
    objective_p_value,
    quantile_p_value,
    replay_wealth,
    ville_reject,
)
from .graph import ReliabilityGraph, transitive_reduction
from .mht import (
    FDR,
    FWER,
    ConfidenceBound,
    SelectionResult,
    benjamini_hochberg,
    bonferroni,
    dagger,
    evalue_fwer,
    fixed_sequence_test,
    ucb_fixed_sequence,
)
from .pareto import ParetoFront, pareto_front, pareto_testing, pt_order
from .rg import (
    PriorBeliefs,
    build_rg,
    load_prior,
    posterior_preference,
    prior_from_doc,
    rg_pt,
    uninformative_prior,
)
from .adaptive import (
    AcquisitionPolicy,
    AdaptiveSession,
    StopRule,
    altt_round,
    altt_run,
    altt_update,
)
from .scenarios import (
    HEAVY_TAIL_DEMO_ALPHA,
    HEAVY_TAIL_DEMO_Q,
    ScenarioSpec,
    TrueRisks,
    generate_synthetic,
    heavy_tail_demo,
    scenario_from_doc,
    scenario_sampler,
    with_seed,
)
from .io import (
    canonical_json,
    dump_loss_table,
    emit_report,
    histogram_csv,
    load_loss_table,
    parse_loss_csv,
    render_report,
    selection_csv,
    summary_doc,
    validation_csv,
    write_text,
)
from .methods import (
    METHODS,
    MethodInfo,
    RunConfig,
    build_problem,
    derive_seed,
    parse_run_config,
    run_calibration,
    run_calibration_doc,
    truth_for,
)
from .montecarlo import ValidationReport, monte_carlo_validate, wilson_interval

__version__ = "0.1.0"

__all__ = [
    "AVERAGE",
    "AcquisitionPolicy",
    "AdaptiveSession",
    "BettingConfig",
    "CONTROLLED",
    "Candidate",
    "CandidateSet",
    "ConfidenceBound",
    "ConfigError",
    "DataError",
    "EProcessState",
    "FDR",
    "FREE",
    "FWER",
    "HEAVY_TAIL_DEMO_ALPHA",
    "HEAVY_TAIL_DEMO_Q",
    "InvariantError",
    "LossTable",
    "METHODS",
    "MethodInfo",
    "MultiObjectiveProblem",
    "PValue",
    "ParetoFront",
    "PriorBeliefs",
    "ProvenanceError",
    "QUANTILE",
    "ReliabilityGraph",
    "RiskSpec",
    "RiskcalError",
    "RunConfig",
    "ScenarioSpec",
    "SelectionResult",
    "SplitConfig",
    "StopRule",
    "TrueRisks",
    "ValidationReport",
    "altt_round",
    "altt_run",
    "altt_update",
    "benjamini_hochberg",
    "binomial_tail",
    "bonferroni",
    "build_problem",
    "build_rg",
    "candidate_p_value",
    "canonical_json",
    "combine_p_values",
    "dagger",
    "derive_seed",
    "dump_loss_table",
    "emit_report",
    "empirical_average_risk",
    "empirical_quantile",
    "eprocess_update",
    "estimate_risk",
    "evalue_fwer",
    "exceedance_count",
    "fixed_sequence_test",
    "generate_synthetic",
    "heavy_tail_demo",
    "histogram_csv",
    "hoeffding_p_value",
    "load_loss_table",
    "load_prior",
    "monte_carlo_validate",
    "next_bet",
    "objective_p_value",
    "pareto_front",
    "pareto_testing",
    "parse_loss_csv",
    "parse_run_config",
    "posterior_preference",
    "prior_from_doc",
    "pt_order",
    "quantile_p_value",
    "render_report",
    "replay_wealth",
    "rg_pt",
    "risk_matrix",
    "run_calibration",
    "run_calibration_doc",
    "scenario_from_doc",
    "scenario_sampler",
    "selection_csv",
    "split_calibration",
    "summary_doc",
    "transitive_reduction",
    "truth_for",
    "ucb_fixed_sequence",
    "uninformative_prior",
    "validation_csv",
    "ville_reject",
    "wilson_interval",
    "with_seed",
    "write_text",
]
