"""Robust linear classification for small training sets."""
__version__ = "0.1.0"

from .losses import LossKind, loss_derivative, loss_value
from .linalg import SubspaceDecomposition, project, signed_matrix, thin_svd
from .solver import SolverConfig, SolverError, minimize_1d_bounded, minimize_l1_regularized, minimize_smooth
from .data import EvalResult, LabeledDataset, Normalization, load_csv, mean_loss, subsample, trimmed_mean
from .core import (
    HyperParams,
    LinearModel,
    RobustComponent,
    calc_beta,
    fit_magnitude,
    fit_subspace_classifier,
    robust_direction,
)
from .robust_cv import CandidateScore, CVConfig, calc_cost, make_splits, robust_cv, robust_params
from .baselines import BaselineConfig, cross_validate_baseline, fit_regularized, fit_top_pcs
from .model_io import load_model, save_model
