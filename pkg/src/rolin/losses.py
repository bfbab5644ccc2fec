"""Margin-based classification losses and their derivatives.

Every loss is a function of the margin ``y * g(x)``. All functions accept
scalars or numpy arrays and broadcast elementwise.
"""
from enum import Enum

import numpy as np
from scipy.special import expit

_LN2 = np.log(2.0)


class LossKind(str, Enum):
    LOGISTIC = "logistic"
    HINGE = "hinge"
    SQUARED_HINGE = "squared_hinge"
    MODIFIED_HUBER = "modified_huber"
    ZERO_ONE = "zero_one"

    def __str__(self):
        return self.value

    @property
    def fittable(self) -> bool:
        return self is not LossKind.ZERO_ONE

    @property
    def smooth(self) -> bool:
        return self in (LossKind.LOGISTIC, LossKind.SQUARED_HINGE, LossKind.MODIFIED_HUBER)


FITTABLE_LOSSES = tuple(k for k in LossKind if k.fittable)


def as_loss_kind(kind) -> LossKind:
    if isinstance(kind, LossKind):
        return kind
    try:
        return LossKind(str(kind).lower())
    except ValueError:
        names = ", ".join(k.value for k in LossKind)
        raise ValueError(f"unknown loss {kind!r}; expected one of {names}") from None


def require_fittable(kind) -> LossKind:
    kind = as_loss_kind(kind)
    if not kind.fittable:
        raise ValueError("zero_one loss is evaluation-only and cannot be fitted")
    return kind


def _out(x, scalar):
    return float(x) if scalar else x


def loss_value(kind, margin):
    """Loss at ``margin``. Logistic loss is measured in bits (base-2 log)."""
    kind = as_loss_kind(kind)
    scalar = np.ndim(margin) == 0
    m = np.asarray(margin, dtype=float)
    if kind is LossKind.LOGISTIC:
        # logaddexp(0, -m) = log(1 + e^-m) without overflow
        out = np.logaddexp(0.0, -m) / _LN2
    elif kind is LossKind.HINGE:
        out = np.maximum(0.0, 1.0 - m)
    elif kind is LossKind.SQUARED_HINGE:
        out = np.maximum(0.0, 1.0 - m) ** 2
    elif kind is LossKind.MODIFIED_HUBER:
        out = np.where(m >= -1.0, np.maximum(0.0, 1.0 - m) ** 2, -4.0 * m)
    else:
        out = (m <= 0.0).astype(float)
    return _out(out, scalar)


def loss_derivative(kind, margin):
    """d loss / d margin. Uses the right-derivative at kinks, so the result is never positive."""
    kind = require_fittable(kind)
    scalar = np.ndim(margin) == 0
    m = np.asarray(margin, dtype=float)
    if kind is LossKind.LOGISTIC:
        out = -expit(-m) / _LN2
    elif kind is LossKind.HINGE:
        out = np.where(m < 1.0, -1.0, 0.0)
    elif kind is LossKind.SQUARED_HINGE:
        out = -2.0 * np.maximum(0.0, 1.0 - m)
    else:
        out = np.where(m >= -1.0, -2.0 * np.maximum(0.0, 1.0 - m), -4.0)
    return _out(out, scalar)


def mean_margin_loss(kind, margins) -> float:
    return float(np.mean(loss_value(kind, margins)))
