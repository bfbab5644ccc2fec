"""Benchmark protocol: repeated random train/test splits, per-method CV, trimmed-mean reporting."""
import csv
import dataclasses
import hashlib
import json
import logging
import os
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .baselines import METHODS, BaselineConfig, cross_validate_baseline
from .core import calc_beta
from .data import EvalResult, LabeledDataset, load_csv, mean_loss, split_indices
from .losses import LossKind, as_loss_kind, require_fittable
from .robust_cv import CVConfig, robust_cv
from .solver import SolverConfig

log = logging.getLogger(__name__)

REPORT_FORMAT_VERSION = 1


@dataclass(frozen=True)
class ExperimentSpec:
    data_path: str | None = None
    label_column: str | None = None
    positive_label: str | None = None
    loss: LossKind = LossKind.LOGISTIC
    methods: tuple = METHODS
    train_sizes: tuple = (15, 30, 50, 100, 200)
    repetitions: int = 50
    base_seed: int = 0
    cv_objective: LossKind | None = None
    trim_count: int = 5
    theta_ratio: float = 5.0
    theta_slack: float = 0.1
    theta_gain: float = 0.05
    fold_count: int = 5
    instance_count: int = 5
    output: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "loss", require_fittable(self.loss))
        if self.cv_objective is not None:
            object.__setattr__(self, "cv_objective", as_loss_kind(self.cv_objective))
        object.__setattr__(self, "methods", tuple(self.methods))
        object.__setattr__(self, "train_sizes", tuple(int(n) for n in self.train_sizes))
        bad = [m for m in self.methods if m not in METHODS]
        if bad or not self.methods:
            raise ValueError(f"unknown methods {bad}; choose from {', '.join(METHODS)}")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if not self.train_sizes or min(self.train_sizes) < self.fold_count:
            raise ValueError(f"training sizes must be >= fold count {self.fold_count}")

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["loss"] = self.loss.value
        d["cv_objective"] = self.cv_objective.value if self.cv_objective else None
        d["methods"] = list(self.methods)
        d["train_sizes"] = list(self.train_sizes)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentSpec":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"unknown experiment fields: {', '.join(sorted(unknown))}")
        return cls(**d)

    def cv_config(self, seed: int) -> CVConfig:
        return CVConfig(theta_ratio=self.theta_ratio, theta_slack=self.theta_slack, theta_gain=self.theta_gain,
                        fold_count=self.fold_count, instance_count=self.instance_count,
                        cv_objective=self.cv_objective, seed=seed)


def derived_seed(*parts) -> int:
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(1)[0])


def fit_method(method: str, train: LabeledDataset, loss, cv: CVConfig = CVConfig(), solver_cfg=SolverConfig()):
    """Select hyperparameters on ``train`` by the method's own CV and refit on all of it.

    Returns ``(model, choice)`` where ``choice`` is JSON-friendly.
    """
    if method == "rolin":
        psi, _ = robust_cv(train, loss, cv, solver_cfg)
        return calc_beta(train, psi, loss, solver_cfg), psi.as_dict()
    bc = BaselineConfig(method, fold_count=cv.fold_count, instance_count=cv.instance_count, seed=cv.seed,
                        cv_objective=cv.cv_objective)
    model = cross_validate_baseline(train, loss, bc, solver_cfg)
    key = "k" if method == "top_pcs" else "lambda"
    return model, {key: model.extra["cv_choice"]}


def split_digest(train_idx) -> str:
    return hashlib.sha256(np.asarray(train_idx, dtype=np.int64).tobytes()).hexdigest()[:16]


def _run_cell(args):
    spec, data, method, n, rep = args
    seed = spec.base_seed + rep
    train_idx, test_idx = split_indices(data.n, n, seed)
    train, test = data.take(train_idx), data.take(test_idx)
    out = {"method": method, "n": n, "repetition": rep, "split_digest": split_digest(train_idx)}
    t0 = time.perf_counter()
    try:
        model, choice = fit_method(method, train, spec.loss, spec.cv_config(derived_seed(seed, n)))
        out.update(target=mean_loss(model, test, spec.loss), zero_one=mean_loss(model, test, LossKind.ZERO_ONE),
                   choice=choice)
    except (ValueError, ArithmeticError, RuntimeError, np.linalg.LinAlgError) as exc:
        out["error"] = f"{type(exc).__name__}: {exc}"
    out["wall_time"] = time.perf_counter() - t0
    return out


def worker_count() -> int:
    env = os.environ.get("ROLIN_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValueError(f"ROLIN_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def run_experiment(spec: ExperimentSpec, data: LabeledDataset | None = None, workers: int | None = None) -> dict:
    """Run every (method, n, repetition) cell and aggregate into a report dictionary."""
    if data is None:
        if not spec.data_path or not spec.label_column:
            raise ValueError("experiment needs a dataset path and label column")
        data = load_csv(spec.data_path, spec.label_column, spec.positive_label)
    too_big = [n for n in spec.train_sizes if n >= data.n]
    if too_big:
        raise ValueError(f"training sizes {too_big} must be smaller than the dataset size {data.n}")
    cells = [(spec, data, m, n, r) for m in spec.methods for n in spec.train_sizes for r in range(spec.repetitions)]
    workers = workers or worker_count()
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_cell, cells, chunksize=1))
    else:
        results = [_run_cell(c) for c in cells]
    return assemble_report(spec, results, workers)


def assemble_report(spec: ExperimentSpec, results, workers: int = 1) -> dict:
    results = sorted(results, key=lambda r: (spec.methods.index(r["method"]), r["n"], r["repetition"]))
    cells, wall = [], {}
    for method in spec.methods:
        for n in spec.train_sizes:
            rs = [r for r in results if r["method"] == method and r["n"] == n]
            ok = [r for r in rs if "error" not in r]
            cell = {
                "method": method,
                "n": n,
                "split_digests": [r["split_digest"] for r in rs],
                "failures": [{"repetition": r["repetition"], "reason": r["error"]} for r in rs if "error" in r],
            }
            if ok:
                cell["status"] = "ok"
                cell["repetitions_ok"] = [r["repetition"] for r in ok]
                cell["choices"] = [r["choice"] for r in ok]
                for key in ("target", "zero_one"):
                    ev = EvalResult.from_losses([r[key] for r in ok], spec.trim_count)
                    cell[key] = dataclasses.asdict(ev)
                    cell[key]["per_repetition_losses"] = list(ev.per_repetition_losses)
            else:
                cell["status"] = "failed"
                cell["reason"] = "all repetitions failed"
            cells.append(cell)
            wall[f"{method}/{n}"] = sum(r["wall_time"] for r in rs)
    return {
        "format_version": REPORT_FORMAT_VERSION,
        "spec": spec.to_dict(),
        "cells": cells,
        "metadata": {
            "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
            "host": platform.node(),
            "python": platform.python_version(),
            "numpy": np.__version__,
            "rolin": __version__,
            "workers": workers,
            "wall_time_seconds": wall,
        },
    }


def write_report(report: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=1)
        fh.write("\n")


def read_report(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        report = json.load(fh)
    if report.get("format_version") != REPORT_FORMAT_VERSION:
        raise ValueError(f"unsupported report format version {report.get('format_version')!r}")
    return report


def numeric_content(report: dict) -> str:
    """Canonical JSON of everything except the metadata block."""
    return json.dumps({k: v for k, v in report.items() if k != "metadata"}, sort_keys=True)


SUMMARY_FIELDS = ("method", "n", "metric", "status", "repetitions", "trim_count", "trimmed_mean", "mean", "min", "max")


def summarize(report: dict) -> list:
    """One row per method x n x metric, trimmed means recomputed from the stored per-repetition losses."""
    loss = report["spec"]["loss"]
    trim = report["spec"]["trim_count"]
    rows = []
    for cell in report["cells"]:
        for key, metric in (("target", loss), ("zero_one", "zero_one")):
            row = {"method": cell["method"], "n": cell["n"], "metric": metric, "status": cell["status"]}
            if cell["status"] == "ok":
                losses = cell[key]["per_repetition_losses"]
                ev = EvalResult.from_losses(losses, trim)
                row.update(repetitions=ev.repetitions, trim_count=ev.trim_count, trimmed_mean=ev.trimmed_mean,
                           mean=ev.mean, min=min(losses), max=max(losses))
            rows.append(row)
    return rows


def write_summary(rows, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=SUMMARY_FIELDS)
        w.writeheader()
        w.writerows(rows)
