"""Datasets, CSV ingestion, standardization, subsampling and evaluation metrics."""
import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .losses import as_loss_kind, loss_value

MISSING_TOKENS = {"", "na", "nan", "null", "none", "?"}


@dataclass(frozen=True)
class LabeledDataset:
    features: np.ndarray
    labels: np.ndarray
    feature_names: tuple = ()
    source_meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        X = np.asarray(self.features, dtype=float)
        y = np.asarray(self.labels, dtype=float)
        if X.ndim != 2:
            raise ValueError(f"features must be 2-D, got shape {X.shape}")
        if y.shape != (X.shape[0],):
            raise ValueError(f"{y.shape[0] if y.ndim else 0} labels for {X.shape[0]} rows")
        if not np.all(np.isfinite(X)):
            raise ValueError("features contain non-finite values")
        if not np.all(np.abs(y) == 1.0):
            raise ValueError("labels must be exactly -1 or +1")
        names = tuple(self.feature_names) or tuple(f"x{j}" for j in range(X.shape[1]))
        if len(names) != X.shape[1]:
            raise ValueError(f"{len(names)} feature names for {X.shape[1]} columns")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "feature_names", names)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def p(self) -> int:
        return self.features.shape[1]

    def take(self, indices) -> "LabeledDataset":
        idx = np.asarray(indices, dtype=int)
        return LabeledDataset(self.features[idx], self.labels[idx], self.feature_names, self.source_meta)

    def has_both_classes(self) -> bool:
        return bool(np.any(self.labels > 0) and np.any(self.labels < 0))


@dataclass(frozen=True)
class Normalization:
    """Per-feature standardization ``(x - mean) / scale``."""

    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, X) -> "Normalization":
        X = np.asarray(X, dtype=float)
        mean = X.mean(axis=0)
        scale = X.std(axis=0)
        # constant columns keep their centered value (zero) instead of blowing up
        scale = np.where(scale > 0, scale, 1.0)
        return cls(mean, scale)

    def apply(self, X) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.mean) / self.scale


def _is_number(s: str) -> bool:
    try:
        return math.isfinite(float(s))
    except ValueError:
        return False


def _read_rows(path):
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except UnicodeDecodeError as exc:
        raise ValueError(f"{path}: not valid UTF-8 ({exc.reason} at byte {exc.start})") from None
    if not rows:
        raise ValueError(f"{path}: empty file, header row required")
    header = [h.strip() for h in rows[0]]
    body = [r for r in rows[1:] if any(c.strip() for c in r)]
    for i, r in enumerate(body, start=2):
        if len(r) != len(header):
            raise ValueError(f"{path}: line {i} has {len(r)} fields, header has {len(header)}")
    return header, body


def _check_missing(path, header, body, columns):
    for i, r in enumerate(body, start=2):
        for j in columns:
            if r[j].strip().lower() in MISSING_TOKENS:
                raise ValueError(f"{path}: missing value at line {i}, column {header[j]!r}")


def _encode_columns(header, body, columns):
    """Numeric columns pass through; text columns become one 0/1 column per distinct value."""
    blocks, names = [], []
    for j in columns:
        raw = [r[j].strip() for r in body]
        if all(_is_number(v) for v in raw):
            blocks.append(np.array([float(v) for v in raw])[:, None])
            names.append(header[j])
        else:
            levels = sorted(set(raw))
            blocks.append(np.array([[v == lv for lv in levels] for v in raw], dtype=float))
            names.extend(f"{header[j]}={lv}" for lv in levels)
    X = np.hstack(blocks) if blocks else np.zeros((len(body), 0))
    return X, names


def load_csv(path, label_column: str, positive_label: str | None = None) -> LabeledDataset:
    """Read a headered UTF-8 CSV.

    Text feature columns are dummy-encoded. Labels map to +1 for
    ``positive_label`` (default: the lexicographically larger of the two values).
    """
    header, body = _read_rows(path)
    if label_column not in header:
        raise ValueError(f"{path}: label column {label_column!r} not in header")
    li = header.index(label_column)
    _check_missing(path, header, body, range(len(header)))
    raw_labels = [r[li].strip() for r in body]
    values = sorted(set(raw_labels))
    if len(values) != 2:
        raise ValueError(f"{path}: label column must have exactly 2 distinct values, found {len(values)}")
    if positive_label is None:
        positive_label = values[1]
    elif positive_label not in values:
        raise ValueError(f"{path}: positive label {positive_label!r} not among {values}")
    y = np.array([1.0 if v == positive_label else -1.0 for v in raw_labels])
    X, names = _encode_columns(header, body, [j for j in range(len(header)) if j != li])
    meta = {"path": str(path), "label_column": label_column, "positive_label": positive_label}
    return LabeledDataset(X, y, tuple(names), meta)


def load_features(path, feature_names, label_column: str | None = None) -> np.ndarray:
    """Rebuild a feature matrix in a fixed column layout (as stored in a fitted model).

    Dummy columns ``col=value`` are recomputed from the raw text column.
    """
    header, body = _read_rows(path)
    cols = {h: j for j, h in enumerate(header)}
    used = [j for h, j in cols.items() if h != label_column]
    _check_missing(path, header, body, used)
    out = np.empty((len(body), len(feature_names)))
    for c, name in enumerate(feature_names):
        if name in cols:
            j = cols[name]
            try:
                out[:, c] = [float(r[j]) for r in body]
            except ValueError:
                raise ValueError(f"{path}: column {name!r} is not numeric") from None
        else:
            base, sep, level = name.partition("=")
            if not sep or base not in cols:
                raise ValueError(f"{path}: no column for feature {name!r}")
            j = cols[base]
            out[:, c] = [r[j].strip() == level for r in body]
    return out


def subsample(data: LabeledDataset, n_train: int, seed) -> tuple:
    """Uniform random train/test split with ``n_train`` training rows."""
    if not 0 < n_train < data.n:
        raise ValueError(f"n_train={n_train} must be in [1, n={data.n})")
    perm = np.random.default_rng(seed).permutation(data.n)
    train_idx, test_idx = np.sort(perm[:n_train]), np.sort(perm[n_train:])
    return data.take(train_idx), data.take(test_idx)


def split_indices(n: int, n_train: int, seed) -> tuple:
    perm = np.random.default_rng(seed).permutation(n)
    return np.sort(perm[:n_train]), np.sort(perm[n_train:])


def mean_loss(model, data: LabeledDataset, kind) -> float:
    """Average loss of ``model`` on ``data``; a margin of exactly 0 is a zero-one error."""
    scores = model.score(data.features)
    return float(np.mean(loss_value(as_loss_kind(kind), data.labels * scores)))


def trimmed_mean(values, trim_count: int) -> float:
    v = np.sort(np.asarray(values, dtype=float))
    if trim_count < 0 or 2 * trim_count >= v.size:
        raise ValueError(f"cannot trim {trim_count} from each end of {v.size} values")
    return float(np.mean(v[trim_count : v.size - trim_count]))


@dataclass(frozen=True)
class EvalResult:
    per_repetition_losses: tuple
    trimmed_mean: float
    mean: float
    repetitions: int
    trim_count: int

    @classmethod
    def from_losses(cls, losses, trim_count: int = 5) -> "EvalResult":
        losses = tuple(float(v) for v in losses)
        # fewer repetitions than the trim rule allows: trim as much as possible
        trim = min(trim_count, (len(losses) - 1) // 2)
        return cls(losses, trimmed_mean(losses, trim), float(np.mean(losses)), len(losses), trim)
