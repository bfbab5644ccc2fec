"""Robust cross-validation for choosing RoLin's hyperparameters.

Three guards against overconfident candidates:

* cost is the mean holdout loss only while the holdout/training loss ratio
  stays under ``theta_ratio``; above it the cost is the worst holdout loss;
* among candidates within ``(1 + theta_slack)`` of the best cost, the one with
  the smallest ``cost + loss_max`` wins;
* the robust component is used only if it cuts the cost of the best
  top-PCs-only candidate by at least a factor ``theta_gain``.
"""
import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .core import (
    HyperParams,
    RobustComponent,
    assemble,
    fit_magnitude,
    fit_subspace_classifier,
    prepare,
    robust_direction,
)
from .data import LabeledDataset, mean_loss
from .losses import LossKind, as_loss_kind, require_fittable
from .solver import SolverConfig

DEFAULT_SIGMA_GRID = (1.0, 2.15, 4.64, 10.0)
DEFAULT_BMAX_GRID = (0.01, 0.0215, 0.0464, 0.1)
BMAX_REFERENCE_N = 15


@dataclass(frozen=True)
class CVConfig:
    theta_ratio: float = 5.0
    theta_slack: float = 0.1
    theta_gain: float = 0.05
    fold_count: int = 5
    instance_count: int = 5
    sigma_grid: tuple = DEFAULT_SIGMA_GRID
    bmax_grid: tuple = DEFAULT_BMAX_GRID
    cv_objective: LossKind | None = None  # None: the loss being fitted
    seed: int = 0
    selection: str = "robust"  # or "standard": plain argmin of mean holdout loss
    normalize_options: tuple = (False, True)

    def __post_init__(self):
        if min(self.theta_ratio, self.theta_slack, self.theta_gain) <= 0:
            raise ValueError("thresholds must be positive")
        if self.fold_count < 2 or self.instance_count < 1:
            raise ValueError("need fold_count >= 2 and instance_count >= 1")
        if not self.sigma_grid or not self.bmax_grid or min(self.sigma_grid) <= 0 or min(self.bmax_grid) <= 0:
            raise ValueError("sigma and b_max grids must be nonempty and positive")
        if self.selection not in ("robust", "standard"):
            raise ValueError(f"unknown selection {self.selection!r}")
        if self.cv_objective is not None:
            object.__setattr__(self, "cv_objective", as_loss_kind(self.cv_objective))

    def bmax_values(self, n: int) -> tuple:
        """b_max grid scaled by sqrt(n / 15)."""
        scale = math.sqrt(n / BMAX_REFERENCE_N)
        return tuple(b * scale for b in self.bmax_grid)


@dataclass(frozen=True)
class CandidateScore:
    psi: HyperParams
    loss_avg: float
    loss_max: float
    loss_ratio: float
    cost: float


@dataclass
class CVDiagnostics:
    k_max: dict = field(default_factory=dict)  # normalize flag -> k_max
    ratio_trace: dict = field(default_factory=dict)  # normalize flag -> [loss_ratio for k=1..]
    s0_candidates: list = field(default_factory=list)
    candidates: list = field(default_factory=list)
    psi_s0_rob: HyperParams | None = None
    psi_rob: HyperParams | None = None
    psi_best: HyperParams | None = None

    def all_scores(self) -> list:
        seen, out = set(), []
        for s in self.s0_candidates + self.candidates:
            if s.psi not in seen:
                seen.add(s.psi)
                out.append(s)
        return sorted(out, key=lambda s: s.psi)

    def rows(self) -> list:
        rows = []
        for s in self.all_scores():
            row = s.psi.as_dict()
            row.update(loss_avg=s.loss_avg, loss_max=s.loss_max, loss_ratio=s.loss_ratio, cost=s.cost)
            row["selected"] = s.psi == self.psi_best
            rows.append(row)
        return rows

    def to_csv(self, path) -> None:
        rows = self.rows()
        fields = ["k", "sigma_ratio", "b_max", "normalize", "loss_avg", "loss_max", "loss_ratio", "cost", "selected"]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.DictWriter(fh, fieldnames=fields)
            w.writeheader()
            w.writerows(rows)


def make_splits(n: int, fold_count: int = 5, instance_count: int = 5, seed=0) -> list:
    """``instance_count`` independent shufflings, each cut into ``fold_count`` folds."""
    if n < fold_count:
        raise ValueError(f"need at least {fold_count} samples for {fold_count}-fold CV, got {n}")
    rng = np.random.default_rng(seed)
    splits = []
    for _ in range(instance_count):
        perm = rng.permutation(n)
        for hold in np.array_split(perm, fold_count):
            mask = np.ones(n, dtype=bool)
            mask[hold] = False
            splits.append((np.flatnonzero(mask), np.sort(hold)))
    return splits


def loss_ratio(train_losses, holdout_losses) -> float:
    """Mean of holdout/training loss ratios. Zero training loss with positive holdout loss is an infinite ratio."""
    ratios = []
    for tr, ho in zip(train_losses, holdout_losses):
        if tr > 0:
            ratios.append(ho / tr)
        else:
            ratios.append(math.inf if ho > 0 else 1.0)
    return float(np.mean(ratios))


def score_candidate(psi, train_losses, holdout_losses, theta_ratio: float) -> CandidateScore:
    ho = np.asarray(holdout_losses, dtype=float)
    avg, worst = float(ho.mean()), float(ho.max())
    ratio = loss_ratio(train_losses, holdout_losses)
    return CandidateScore(psi, avg, worst, ratio, avg if ratio <= theta_ratio else worst)


def reliable_prefix(ratios, theta_ratio: float) -> int:
    """Largest k with every ratio for 1..k within the threshold (floor 1)."""
    k = 0
    for r in ratios:
        if r > theta_ratio:
            break
        k += 1
    return max(k, 1)


def robust_params(candidates, theta_slack: float) -> HyperParams:
    """Near-minimal cost candidate with the smallest ``cost + loss_max``; ties go to canonical order."""
    if not candidates:
        raise ValueError("no candidates")
    ordered = sorted(candidates, key=lambda s: s.psi)
    best_cost = min(s.cost for s in ordered)
    slack = [s for s in ordered if s.cost <= (1.0 + theta_slack) * best_cost]
    return min(slack, key=lambda s: s.cost + s.loss_max).psi


def standard_params(candidates) -> HyperParams:
    return min(sorted(candidates, key=lambda s: s.psi), key=lambda s: s.loss_avg).psi


def prefer_top_pcs(s0_rob: CandidateScore, rob: CandidateScore, theta_gain: float) -> HyperParams:
    """Keep the top-PCs-only choice unless the robust one is cheaper by a factor ``theta_gain``."""
    return s0_rob.psi if rob.cost >= (1.0 - theta_gain) * s0_rob.cost else rob.psi


class SplitEvaluator:
    """Evaluates candidates on fixed CV splits, caching the per-split pieces.

    The SVD and the S0 fit depend only on ``(split, normalize)`` and
    ``(split, normalize, k)``; directions add ``sigma_ratio``. The model for a
    candidate is assembled from the same functions ``calc_beta`` uses, so the
    result equals ``calc_beta`` on the training fold.
    """

    def __init__(self, data: LabeledDataset, splits, loss, cv_objective=None, cfg: SolverConfig = SolverConfig()):
        self.data = data
        self.splits = list(splits)
        self.loss = require_fittable(loss)
        self.cv_objective = as_loss_kind(cv_objective or loss)
        self.cfg = cfg
        self._prep = {}
        self._s0 = {}
        self._dir = {}
        self._folds = [(data.take(tr), data.take(ho)) for tr, ho in self.splits]
        self._losses = {}

    def _prepared(self, j, normalize):
        key = (j, normalize)
        if key not in self._prep:
            self._prep[key] = prepare(self._folds[j][0], normalize)
        return self._prep[key]

    def rank(self, normalize: bool) -> int:
        return min(self._prepared(j, normalize)[2].rank for j in range(len(self.splits)))

    def _s0_fit(self, j, normalize, k):
        key = (j, normalize, k)
        if key not in self._s0:
            _, Z, dec = self._prepared(j, normalize)
            train = self._folds[j][0]
            self._s0[key] = fit_subspace_classifier(Z, train.labels, dec.with_split(k).v_s0, self.loss, self.cfg)
        return self._s0[key]

    def _direction(self, j, normalize, k, sigma_ratio):
        key = (j, normalize, k, sigma_ratio)
        if key not in self._dir:
            _, Z, dec = self._prepared(j, normalize)
            self._dir[key] = robust_direction(Z, dec.with_split(k), sigma_ratio)
        return self._dir[key]

    def model(self, j, psi: HyperParams):
        norm, Z, dec = self._prepared(j, psi.normalize)
        if psi.k > dec.rank:
            raise ValueError(f"k={psi.k} exceeds fold rank {dec.rank}")
        beta0, beta_s0 = self._s0_fit(j, psi.normalize, psi.k)
        comp = self._direction(j, psi.normalize, psi.k, psi.sigma_ratio)
        if np.any(comp.eta):
            train = self._folds[j][0]
            c = fit_magnitude(Z, train.labels, beta0, beta_s0, comp.eta, psi.b_max, self.loss)
            comp = RobustComponent(comp.mu, comp.nu, comp.eta, c, comp.sigma_bound)
        return assemble(beta0, beta_s0, comp, self.loss, psi, norm)

    def split_losses(self, psi: HyperParams):
        """Per-split (training, holdout) losses under the CV objective."""
        if psi not in self._losses:
            tr, ho = [], []
            for j, (train, hold) in enumerate(self._folds):
                m = self.model(j, psi)
                tr.append(mean_loss(m, train, self.cv_objective))
                ho.append(mean_loss(m, hold, self.cv_objective))
            self._losses[psi] = (tr, ho)
        return self._losses[psi]

    def score(self, psi: HyperParams, theta_ratio: float) -> CandidateScore:
        tr, ho = self.split_losses(psi)
        return score_candidate(psi, tr, ho, theta_ratio)


def calc_cost(data, splits, psi, loss, cv_objective=None, theta_ratio=5.0, cfg=SolverConfig()) -> CandidateScore:
    """Fit on every training fold and score ``psi`` with the robust cost rule."""
    return SplitEvaluator(data, splits, loss, cv_objective, cfg).score(psi, theta_ratio)


def max_reliable_pcs(evaluator: SplitEvaluator, theta_ratio: float, normalize: bool = False):
    """Returns ``(k_max, ratios)``; stops at the first k whose loss ratio exceeds the threshold."""
    ratios = []
    for k in range(1, evaluator.rank(normalize) + 1):
        s = evaluator.score(HyperParams(k, 0.0, 0.0, normalize), theta_ratio)
        ratios.append(s.loss_ratio)
        if s.loss_ratio > theta_ratio:
            break
    return reliable_prefix(ratios, theta_ratio), ratios


def robust_cv(data: LabeledDataset, loss, config: CVConfig = CVConfig(), solver_cfg: SolverConfig = SolverConfig()):
    """Choose ``HyperParams`` for ``calc_beta`` on ``data``; returns ``(psi_best, diagnostics)``."""
    loss = require_fittable(loss)
    splits = make_splits(data.n, config.fold_count, config.instance_count, config.seed)
    ev = SplitEvaluator(data, splits, loss, config.cv_objective, solver_cfg)
    diag = CVDiagnostics()
    bvals = config.bmax_values(data.n)
    s0, full = [], []
    for normalize in config.normalize_options:
        k_max, ratios = max_reliable_pcs(ev, config.theta_ratio, normalize)
        k_max = min(k_max, ev.rank(normalize))
        diag.k_max[normalize], diag.ratio_trace[normalize] = k_max, ratios
        for k in range(1, k_max + 1):
            s0.append(ev.score(HyperParams(k, 0.0, 0.0, normalize), config.theta_ratio))
            for sigma in config.sigma_grid:
                for b in bvals:
                    full.append(ev.score(HyperParams(k, sigma, b, normalize), config.theta_ratio))
    diag.s0_candidates = sorted(s0, key=lambda s: s.psi)
    diag.candidates = sorted(full, key=lambda s: s.psi)
    by_psi = {s.psi: s for s in diag.all_scores()}

    if config.selection == "standard":
        diag.psi_best = standard_params(diag.all_scores())
        return diag.psi_best, diag

    diag.psi_s0_rob = robust_params(diag.s0_candidates, config.theta_slack)
    diag.psi_rob = robust_params(diag.candidates, config.theta_slack)
    diag.psi_best = prefer_top_pcs(by_psi[diag.psi_s0_rob], by_psi[diag.psi_rob], config.theta_gain)
    return diag.psi_best, diag
