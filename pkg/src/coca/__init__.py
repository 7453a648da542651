"""Cooperative component analysis.

Rank-one multi-view factorization with an agreement penalty that
interpolates between the leading principal component (penalty weight 0) and
the leading canonical direction pair (penalty weight to infinity), plus a
sparse variant solved by alternating Lasso steps, seeded factor-model
simulation, evaluation metrics, and grid cross-validation.
"""

__version__ = "0.1.0"

from .baselines import CcaSolution, cca_leading, pca_leading
from .data import (CsvView, MultiViewData, StandardizationRecord, concat,
                   read_csv_view, split, standardize, write_csv)
from .errors import (CocaError, ConvergenceError, DegenerateInputError,
                     MonotonicityError, ParseError, SingularMatrixError,
                     StratificationError)
from .lasso import (LassoProblem, LassoSolution, kkt_check, solve_lasso,
                    soft_threshold)
from .linalg import (SingularTriplet, angle_between, leading_eigenvector,
                     leading_singular_triplet, spd_solve)
from .metrics import (EvalReport, agreement_diagnostics, estimation_error,
                      excess_reconstruction_error, reconstruction_error)
from .model_selection import (CvReport, HyperGrid, LdaModel, SpeckleMask,
                              auprc, auroc, kfold_supervised,
                              kfold_unsupervised, lda_fit, lda_predict,
                              make_folds, make_speckle_mask,
                              make_stratified_folds, masked_mse,
                              misclassification, select_cell, speckled_cv)
from .simulate import (FactorModelSpec, covariance, draw, illustrative_spec,
                       population_root, sparse_spec, spec_from_json,
                       spec_to_json)
from .solver import (CocaModel, PathCell, SolutionPath, SolverConfig,
                     build_augmented, fit_dense, fit_sparse, solution_path)

__all__ = [
    "CcaSolution", "cca_leading", "pca_leading",
    "CsvView", "MultiViewData", "StandardizationRecord", "concat",
    "read_csv_view", "split", "standardize", "write_csv",
    "CocaError", "ConvergenceError", "DegenerateInputError",
    "MonotonicityError", "ParseError", "SingularMatrixError",
    "StratificationError",
    "LassoProblem", "LassoSolution", "kkt_check", "solve_lasso",
    "soft_threshold",
    "SingularTriplet", "angle_between", "leading_eigenvector",
    "leading_singular_triplet", "spd_solve",
    "EvalReport", "agreement_diagnostics", "estimation_error",
    "excess_reconstruction_error", "reconstruction_error",
    "CvReport", "HyperGrid", "LdaModel", "SpeckleMask", "auprc", "auroc",
    "kfold_supervised", "kfold_unsupervised", "lda_fit", "lda_predict",
    "make_folds", "make_speckle_mask", "make_stratified_folds", "masked_mse",
    "misclassification", "select_cell", "speckled_cv",
    "FactorModelSpec", "covariance", "draw", "illustrative_spec",
    "population_root", "sparse_spec", "spec_from_json", "spec_to_json",
    "CocaModel", "PathCell", "SolutionPath", "SolverConfig",
    "build_augmented", "fit_dense", "fit_sparse", "solution_path",
    "__version__",
]
