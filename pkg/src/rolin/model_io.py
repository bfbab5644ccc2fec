"""JSON round-trip for fitted models. Floats use Python's shortest repr, so values survive exactly."""
import json

import numpy as np

from .core import HyperParams, LinearModel
from .data import Normalization
from .losses import as_loss_kind

MODEL_FORMAT_VERSION = 1


def model_to_dict(model: LinearModel) -> dict:
    norm = model.normalization
    hp = model.fitted_hyperparams
    return {
        "format_version": MODEL_FORMAT_VERSION,
        "method": model.method,
        "loss": model.loss_kind.value,
        "intercept": float(model.intercept),
        "weights": [float(v) for v in model.weights],
        "feature_names": list(model.feature_names),
        "hyperparams": hp.as_dict() if hp else None,
        "normalization": None if norm is None else {
            "mean": [float(v) for v in norm.mean],
            "scale": [float(v) for v in norm.scale],
        },
        "extra": {k: v for k, v in model.extra.items() if isinstance(v, (int, float, str, bool))},
    }


def model_from_dict(d: dict) -> LinearModel:
    if d.get("format_version") != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {d.get('format_version')!r}")
    norm = d.get("normalization")
    hp = d.get("hyperparams")
    return LinearModel(
        intercept=float(d["intercept"]),
        weights=np.array(d["weights"], dtype=float),
        loss_kind=as_loss_kind(d["loss"]),
        normalization=None if norm is None else Normalization(np.array(norm["mean"]), np.array(norm["scale"])),
        fitted_hyperparams=None if hp is None else HyperParams(**hp),
        method=d.get("method", "rolin"),
        feature_names=tuple(d.get("feature_names", ())),
        extra=dict(d.get("extra", {})),
    )


def save_model(model: LinearModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, indent=1)
        fh.write("\n")


def load_model(path) -> LinearModel:
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
