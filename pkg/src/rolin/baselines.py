"""Competing methods: L1- and L2-penalized fits and the top-PCs classifier."""
from dataclasses import dataclass

import numpy as np

from .core import HyperParams, LinearModel, column_scale, fit_margins, fit_subspace_classifier, margin_objective, prepare
from .data import LabeledDataset, mean_loss
from .losses import as_loss_kind, require_fittable
from .robust_cv import SplitEvaluator, make_splits
from .solver import SolverConfig, minimize_l1_regularized

METHODS = ("rolin", "l1", "l2", "top_pcs")
DEFAULT_LAMBDA_GRID = tuple(float(v) for v in np.logspace(-4, 2, 8))


@dataclass(frozen=True)
class BaselineConfig:
    method: str
    lambda_grid: tuple = DEFAULT_LAMBDA_GRID
    k_grid: tuple | None = None  # None: 1..min fold rank
    fold_count: int = 5
    instance_count: int = 5
    seed: int = 0
    cv_objective: object = None
    normalize: bool = False

    def __post_init__(self):
        if self.method not in ("l1", "l2", "top_pcs"):
            raise ValueError(f"unknown baseline {self.method!r}")
        if self.method == "top_pcs":
            if self.k_grid is not None and (not self.k_grid or min(self.k_grid) < 1):
                raise ValueError("k_grid must be nonempty with k >= 1")
        elif not self.lambda_grid or min(self.lambda_grid) < 0:
            raise ValueError("lambda_grid must be nonempty with lambda >= 0")


def fit_regularized(data: LabeledDataset, loss, q: int, lam: float, cfg: SolverConfig = SolverConfig(),
                    normalize: bool = False, start=None) -> LinearModel:
    """Mean loss plus ``lam*|w|_1`` (q=1) or ``lam*|w|_2^2`` (q=2); the intercept is not penalized.

    ``start`` is an optional warm start ``[intercept, *weights]`` (used by the L1 path).
    """
    loss = require_fittable(loss)
    if lam < 0:
        raise ValueError("lam must be >= 0")
    norm, Z, dec = prepare(data, normalize)
    if q == 2:
        # the squared norm is rotation invariant: fit in the SVD basis of Z, where columns are
        # orthogonal, and map back; directions outside the row space get zero weight either way
        A = np.column_stack([data.labels, Z @ dec.singular_vectors])
        mask = np.ones(A.shape[1])
        mask[0] = 0.0
        theta = fit_margins(A, loss, cfg, penalty=lam, penalty_mask=mask)
        theta = np.concatenate([theta[:1], dec.singular_vectors @ theta[1:]])
    elif q == 1:
        A = np.column_stack([data.labels, Z])
        mask = np.ones(A.shape[1])
        mask[0] = 0.0
        scale = column_scale(A, loss)
        obj = margin_objective(A, loss, cfg.stability_ridge, column_scale=scale)
        x0 = None if start is None else np.asarray(start, dtype=float) * scale
        # |theta_j| = |theta'_j| / scale_j in the rescaled coordinates
        theta = minimize_l1_regularized(obj, lam * mask / scale, A.shape[1], cfg, start=x0) / scale
    else:
        raise ValueError(f"q must be 1 or 2, got {q}")
    return LinearModel(float(theta[0]), theta[1:], loss, norm, None, f"l{q}", data.feature_names, {"lambda": lam})


def fit_top_pcs(data: LabeledDataset, loss, k: int, cfg: SolverConfig = SolverConfig(),
                normalize: bool = False) -> LinearModel:
    """Classifier restricted to the span of the top ``k`` right singular vectors of the signed matrix."""
    loss = require_fittable(loss)
    norm, Z, dec = prepare(data, normalize)
    if not 1 <= k <= dec.rank:
        raise ValueError(f"k={k} outside [1, rank={dec.rank}]")
    beta0, w = fit_subspace_classifier(Z, data.labels, dec.with_split(k).v_s0, loss, cfg)
    return LinearModel(beta0, w, loss, norm, HyperParams(k, 0.0, 0.0, normalize), "top_pcs", data.feature_names)


def _fit(method, data, loss, value, cfg, normalize):
    if method == "top_pcs":
        return fit_top_pcs(data, loss, int(value), cfg, normalize)
    return fit_regularized(data, loss, 1 if method == "l1" else 2, value, cfg, normalize)


def cross_validate_baseline(data: LabeledDataset, loss, config: BaselineConfig, cfg: SolverConfig = SolverConfig(),
                            return_scores: bool = False):
    """Standard CV over the method's single hyperparameter, then a refit on all of ``data``.

    Ties go to the smaller grid value.
    """
    loss = require_fittable(loss)
    objective = as_loss_kind(config.cv_objective or loss)
    splits = make_splits(data.n, config.fold_count, config.instance_count, config.seed)
    folds = [(data.take(tr), data.take(ho)) for tr, ho in splits]
    if config.method == "top_pcs":
        ev = SplitEvaluator(data, splits, loss, objective, cfg)
        rank = ev.rank(config.normalize)
        grid = sorted(k for k in (config.k_grid or range(1, rank + 1)) if k <= rank) or [1]
        scores = {k: float(np.mean(ev.split_losses(HyperParams(k, 0.0, 0.0, config.normalize))[1])) for k in grid}
    else:
        grid = sorted(config.lambda_grid)
        q = 1 if config.method == "l1" else 2
        holdout = {lam: [] for lam in grid}
        for tr, te in folds:
            theta = None
            # largest penalty first, each solution warm-starting the next
            for lam in reversed(grid):
                m = fit_regularized(tr, loss, q, lam, cfg, config.normalize, start=theta)
                theta = np.concatenate([[m.intercept], m.weights])
                holdout[lam].append(mean_loss(m, te, objective))
        scores = {lam: float(np.mean(v)) for lam, v in holdout.items()}
    best = min(grid, key=lambda v: scores[v])
    model = _fit(config.method, data, loss, best, cfg, config.normalize)
    model.extra["cv_choice"] = best
    return (model, scores) if return_scores else model
