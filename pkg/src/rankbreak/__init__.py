"""Learning item utilities from heterogeneous partial orderings.

Observed rankings are broken into separator-vs-below pairwise outcomes,
which keep the maximum-likelihood machinery of paired comparisons both
computationally cheap and statistically consistent; data-driven weights on
the extracted pairs recover the accuracy a full likelihood would give.
Comparison-graph diagnostics quantify how the survey topology limits the
achievable error.
"""

from .breaking import (PartialOrder, PosetDag, RankBreakingGraph, break_into_graphs,
                       partial_order_from_dag, partial_order_from_ranking, readable_pairs,
                       separators_from_dag, validate_consistent_breaking)
from .dataset import BrokenDataset, WeightScheme, weights_for
from .errors import EstimationInfeasibleError, ParseError, ValidationError
from .estimators import (FitConfig, FitResult, FullBreakingEstimator, RankBreakingEstimator,
                         RestrictedBottomEstimator, TopLMLEstimator, default_restricted_count,
                         fit_full_breaking, fit_mle_topl, fit_pairwise, fit_rank_breaking,
                         fit_restricted_bottoml)
from .experiments import (ScenarioSpec, TrialResult, TrialsAggregate, borda_count,
                          generate_scenario_data, kendall_distance,
                          kendall_sample_correlation, mse, per_item_abs_error, run_trials,
                          scaling_table)
from .graphs import (ComparisonGraph, CramerRaoBound, Diagnostics, alpha, beta,
                     build_comparison_graph, chi, compute_diagnostics, cramer_rao_position_p,
                     cramer_rao_topl, design_comparison_graph, eta, gamma,
                     general_weight_diagnostics, generate_topology, lambda2,
                     sample_complexity_check, theoretical_error_bound)
from .io import (RatingsTable, emit_csv, parse_partial_orders_jsonl, parse_ratings_csv,
                 parse_soc, ratings_to_partial_orders, write_partial_orders_jsonl)
from .model import (Offering, Ranking, UtilityVector, pl_ranking_probability,
                    pl_topl_log_likelihood, project_feasible, sample_ranking)
from .objective import rb_gradient, rb_hessian, rb_log_likelihood

__version__ = "0.1.0"

__all__ = [
    "BrokenDataset", "ComparisonGraph", "CramerRaoBound", "Diagnostics",
    "EstimationInfeasibleError", "FitConfig", "FitResult", "FullBreakingEstimator",
    "Offering", "ParseError", "PartialOrder", "PosetDag", "RankBreakingEstimator",
    "RankBreakingGraph", "Ranking", "RatingsTable", "RestrictedBottomEstimator",
    "ScenarioSpec", "TopLMLEstimator", "TrialResult", "TrialsAggregate",
    "UtilityVector", "ValidationError", "WeightScheme", "alpha", "beta",
    "borda_count", "break_into_graphs", "build_comparison_graph", "chi",
    "compute_diagnostics", "cramer_rao_position_p", "cramer_rao_topl",
    "default_restricted_count", "design_comparison_graph", "emit_csv", "eta",
    "fit_full_breaking", "fit_mle_topl", "fit_pairwise", "fit_rank_breaking",
    "fit_restricted_bottoml", "gamma", "general_weight_diagnostics",
    "generate_scenario_data", "generate_topology", "kendall_distance",
    "kendall_sample_correlation", "lambda2", "mse", "parse_partial_orders_jsonl",
    "parse_ratings_csv", "parse_soc", "partial_order_from_dag",
    "partial_order_from_ranking", "per_item_abs_error", "pl_ranking_probability",
    "pl_topl_log_likelihood", "project_feasible", "ratings_to_partial_orders",
    "rb_gradient", "rb_hessian", "rb_log_likelihood", "readable_pairs", "run_trials",
    "sample_complexity_check", "sample_ranking", "scaling_table",
    "separators_from_dag", "theoretical_error_bound", "validate_consistent_breaking",
    "weights_for", "write_partial_orders_jsonl",
]
