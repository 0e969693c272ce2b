"""Neural-collapse model solvers and diagnostics.

Two related optimization problems over class embeddings:

* the positivity-constrained layer-peeled problem: cross-entropy or
  label-smoothing risk over a linear classifier W and free nonnegative
  features H, with ridge penalties on both, solved by projected gradient
  descent and characterized by a closed-form minimizer;
* the two-class memorization-dilation problem: a frozen collapsed
  configuration, noisy clean features with dilation r, and corrupted
  embeddings constrained by a memorization budget.

Plus the collapse diagnostics (NC1, configuration residuals, memorization)
used to evaluate exported network features.
"""

__version__ = "0.1.0"

from .embeddings import EmbeddingSet, ModelParams, ClassStats, load_embeddings, save_embeddings, corrupt_labels, class_stats
from .losses import (
    LossParams,
    smoothed_label,
    softmax_scores,
    ls_loss,
    empirical_risk,
    reformulated_risk,
    regularized_objective,
    bilinear_term,
    bilinear_lower_bound,
    jensen_lower_bound,
    objective_gradient,
)
from .metrics import NcReport, covariances, nc1_metric, memorization, memorization_terms, nc_config_report
from .lpm import ClosedForm, LpmSolution, SolverOptions, closed_form_minimizer, construct_nc_config, solve_lpm, verify_theorem1
from .md import MdProblem, MdSolution, AssumptionReport, make_md_problem, r_max, solve_u1, g_eval, f_eval, md_risk, solve_r, md_memorization, compare_ce_ls

__all__ = [
    "__version__",
    "EmbeddingSet",
    "ModelParams",
    "ClassStats",
    "load_embeddings",
    "save_embeddings",
    "corrupt_labels",
    "class_stats",
    "LossParams",
    "smoothed_label",
    "softmax_scores",
    "ls_loss",
    "empirical_risk",
    "reformulated_risk",
    "regularized_objective",
    "bilinear_term",
    "bilinear_lower_bound",
    "jensen_lower_bound",
    "objective_gradient",
    "NcReport",
    "covariances",
    "nc1_metric",
    "memorization",
    "memorization_terms",
    "nc_config_report",
    "ClosedForm",
    "LpmSolution",
    "SolverOptions",
    "closed_form_minimizer",
    "construct_nc_config",
    "solve_lpm",
    "verify_theorem1",
    "MdProblem",
    "MdSolution",
    "AssumptionReport",
    "make_md_problem",
    "r_max",
    "solve_u1",
    "g_eval",
    "f_eval",
    "md_memorization",
    "md_risk",
    "solve_r",
    "compare_ce_ls",
]
