"""Kernel language entropy: semantic uncertainty of sampled LLM answers."""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .estimators import (
    METHODS,
    UncertaintyScores,
    cluster_probs,
    kle,
    kle_c,
    predictive_entropy,
    score_answer_set,
    semantic_entropy,
    sequence_loglik,
)
from .evaluation import auarc, auroc, binomial_significance, bootstrap_ci, evaluate_scenario, win_rate
from .graph import (
    AnswerSet,
    Clustering,
    SemanticGraph,
    bidirectional_cluster,
    laplacian,
    weight_matrix_answers,
    weight_matrix_clusters,
)
from .hyperparams import entropy_convergence_curve, grid_search_validation, select_lengthscale
from .kernels import (
    KernelConfig,
    SemanticKernel,
    build_kernel,
    combine_kernels,
    heat_kernel,
    matern_kernel,
    se_block_kernel,
)
from .linalg import spectral_map, sym_eig, unit_trace_normalize, von_neumann_entropy
from .nli import CachedNli, FileNli, HttpNli, MemoNli, MockNli, NliJudgment
