"""Versioned text persistence for fitted models.

A model file is one self-describing JSON document.  Floats are written
with Python's shortest round-trip repr (up to 17 significant digits),
so save -> load -> save is byte-identical and any language can consume
the file exactly.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .distfit import ScoreDistribution
from .errors import ModelFormatError

__all__ = [
    "FORMAT_VERSION",
    "ModelFile",
    "save_model",
    "load_model",
    "provenance_timestamp",
    "file_sha256",
]

FORMAT_VERSION = 1

_REQUIRED_KEYS = {
    "format_version", "basis", "lambda", "penalty_order", "criterion",
    "log_current", "step", "mean_coefs", "eigenvalues", "total_variance",
    "weight_coefs", "score_stats", "score_distribution",
    "vreset_quantiles", "provenance",
}


@dataclass
class ModelFile:
    """Everything a consumer needs to reconstruct and simulate curves."""

    degree: int
    n_knots: int
    lam: float
    penalty_order: int
    criterion: str
    log_current: bool
    step: float
    mean_coefs: np.ndarray
    eigenvalues: np.ndarray
    total_variance: float
    weight_coefs: np.ndarray
    score_stats: dict
    score_distribution: ScoreDistribution
    vreset_probs: np.ndarray
    vreset_quantiles: np.ndarray
    provenance: dict = field(default_factory=dict)
    format_version: int = FORMAT_VERSION

    @property
    def dimension(self) -> int:
        return self.n_knots - 1 + self.degree


def provenance_timestamp() -> str:
    """UTC timestamp; honors SOURCE_DATE_EPOCH for reproducible output."""
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    t = float(epoch) if epoch else time.time()
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(t))


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _to_document(model: ModelFile) -> dict:
    return {
        "format_version": model.format_version,
        "basis": {
            "degree": model.degree,
            "n_knots": model.n_knots,
            "domain": [0.0, 1.0],
        },
        "lambda": float(model.lam),
        "penalty_order": model.penalty_order,
        "criterion": model.criterion,
        "log_current": model.log_current,
        "step": float(model.step),
        "mean_coefs": [float(v) for v in model.mean_coefs],
        "eigenvalues": [float(v) for v in model.eigenvalues],
        "total_variance": float(model.total_variance),
        "weight_coefs": [[float(v) for v in row] for row in model.weight_coefs],
        "score_stats": model.score_stats,
        "score_distribution": asdict(model.score_distribution),
        "vreset_quantiles": {
            "probs": [float(v) for v in model.vreset_probs],
            "values": [float(v) for v in model.vreset_quantiles],
        },
        "provenance": model.provenance,
    }


def save_model(model: ModelFile, path) -> None:
    doc = _to_document(model)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_model(path) -> ModelFile:
    """Parse and validate a model file.

    Raises OSError for missing files, json.JSONDecodeError for corrupt
    text, and ModelFormatError for version or schema problems.
    """
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict) or "format_version" not in doc:
        raise ModelFormatError(f"{path}: not a model file")
    if doc["format_version"] != FORMAT_VERSION:
        raise ModelFormatError(
            f"{path}: format_version {doc['format_version']} unsupported "
            f"(expected {FORMAT_VERSION})")
    missing = _REQUIRED_KEYS - doc.keys()
    if missing:
        raise ModelFormatError(f"{path}: missing fields {sorted(missing)}")

    basis = doc["basis"]
    p = basis["n_knots"] - 1 + basis["degree"]
    mean_coefs = np.asarray(doc["mean_coefs"], dtype=float)
    weight_coefs = np.atleast_2d(np.asarray(doc["weight_coefs"], dtype=float))
    if mean_coefs.size != p or weight_coefs.shape[1] != p:
        raise ModelFormatError(
            f"{path}: coefficient length does not match basis dimension {p}")

    sd = doc["score_distribution"]
    return ModelFile(
        degree=basis["degree"],
        n_knots=basis["n_knots"],
        lam=doc["lambda"],
        penalty_order=doc["penalty_order"],
        criterion=doc["criterion"],
        log_current=doc["log_current"],
        step=doc["step"],
        mean_coefs=mean_coefs,
        eigenvalues=np.asarray(doc["eigenvalues"], dtype=float),
        total_variance=doc["total_variance"],
        weight_coefs=weight_coefs,
        score_stats=doc["score_stats"],
        score_distribution=ScoreDistribution(**sd),
        vreset_probs=np.asarray(doc["vreset_quantiles"]["probs"], dtype=float),
        vreset_quantiles=np.asarray(doc["vreset_quantiles"]["values"], dtype=float),
        provenance=doc["provenance"],
        format_version=doc["format_version"],
    )
