"""Graph matching via Frank-Wolfe over the Birkhoff polytope.

Matches pairs of simple graphs by gradient ascent on the relaxed
quadratic objective, with soft-seeded doubly stochastic initializations,
correlated random-graph pair samplers, and a reproducible Monte Carlo
experiment harness.
"""

__version__ = "0.1.0"

from .core import (
    accuracy,
    gm_edit_objective,
    load_edgelist,
    loss,
    save_edgelist,
    trace_objective,
    validate_doubly_stochastic,
)
from .dsinit import (
    barycenter,
    block_diag_barycenter,
    confusion_matrix,
    convex_combination,
    disagreement,
    project_frobenius_to_ds,
    random_doubly_stochastic,
    sample_partition_with_confusion,
    similarity_from_features,
    sinkhorn_knopp,
    soft_seed_one_to_one,
    soft_seed_partition,
)
from .lap import lap_bruteforce, project_to_permutation, solve_lap_max
from .randgraphs import (
    CorrErParams,
    corr_er_params,
    covariance_matrix,
    expected_trace,
    hom_params,
    rdpg_params,
    sample_bivariate_bernoulli,
    sample_corr_er,
    sample_dirichlet_positions,
    sbm_params,
    theory_thresholds,
)
from .solver import (
    FaqOptions,
    MatchResult,
    error_breakdown,
    faq,
    faq_hard_seeded,
    faq_with_similarity,
    line_search_alpha,
    random_restart_probe,
    two_step_check,
)

__all__ = [
    "CorrErParams",
    "FaqOptions",
    "MatchResult",
    "accuracy",
    "barycenter",
    "block_diag_barycenter",
    "confusion_matrix",
    "convex_combination",
    "corr_er_params",
    "covariance_matrix",
    "disagreement",
    "error_breakdown",
    "expected_trace",
    "faq",
    "faq_hard_seeded",
    "faq_with_similarity",
    "gm_edit_objective",
    "hom_params",
    "lap_bruteforce",
    "line_search_alpha",
    "load_edgelist",
    "loss",
    "project_frobenius_to_ds",
    "project_to_permutation",
    "random_doubly_stochastic",
    "random_restart_probe",
    "rdpg_params",
    "sample_bivariate_bernoulli",
    "sample_corr_er",
    "sample_dirichlet_positions",
    "sample_partition_with_confusion",
    "save_edgelist",
    "sbm_params",
    "similarity_from_features",
    "sinkhorn_knopp",
    "soft_seed_one_to_one",
    "soft_seed_partition",
    "solve_lap_max",
    "theory_thresholds",
    "trace_objective",
    "two_step_check",
    "validate_doubly_stochastic",
]
