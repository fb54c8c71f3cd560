"""Reject option classification by regularized risk minimization under the
double ramp loss, trained with difference-of-convex programming."""

from .data import (
    Dataset,
    PosteriorOracle,
    Standardization,
    bayes_predict,
    gen_diagonal_band,
    gen_synth1,
    gen_synth2,
    load_csv,
    load_libsvm,
    standardize_apply,
    standardize_fit,
)
from .evaluation import CVReport, Metrics, evaluate, grid_search, kfold_cv
from .kernels import KernelSpec, gram_matrix, kernel_eval
from .losses import (
    LossInputs,
    binary_entropy,
    empirical_r1_r2,
    loss_0d1,
    loss_double_hinge,
    loss_double_ramp,
    loss_generalized_hinge,
    loss_ramp,
)
from .model import Model, load, predict, save
from .qp import DualSolution, DualSubproblem, dual_objective, kkt_residual, solve_dual
from .trainer import (
    DCState,
    Hyperparams,
    SingleClassError,
    SupportVectorSets,
    compute_betas,
    decision_values,
    majorizer_value,
    recover_bias_rho,
    regularized_risk,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "PosteriorOracle",
    "Standardization",
    "bayes_predict",
    "gen_diagonal_band",
    "gen_synth1",
    "gen_synth2",
    "load_csv",
    "load_libsvm",
    "standardize_apply",
    "standardize_fit",
    "CVReport",
    "Metrics",
    "evaluate",
    "grid_search",
    "kfold_cv",
    "KernelSpec",
    "gram_matrix",
    "kernel_eval",
    "LossInputs",
    "binary_entropy",
    "empirical_r1_r2",
    "loss_0d1",
    "loss_double_hinge",
    "loss_double_ramp",
    "loss_generalized_hinge",
    "loss_ramp",
    "Model",
    "load",
    "predict",
    "save",
    "DualSolution",
    "DualSubproblem",
    "dual_objective",
    "kkt_residual",
    "solve_dual",
    "DCState",
    "Hyperparams",
    "SingleClassError",
    "SupportVectorSets",
    "compute_betas",
    "decision_values",
    "majorizer_value",
    "recover_bias_rho",
    "regularized_risk",
    "train",
]
