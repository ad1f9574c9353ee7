"""Cosine-to-centroid baseline: no density modelling, just the mean vector."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DimensionMismatch, EmptyCorpus


@dataclass
class CentroidModel:
    centroid: np.ndarray  # (D,) float32
    dim: int


def fit_centroid(embeddings):
    x = np.asarray(embeddings, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise EmptyCorpus("no embeddings to fit")
    return CentroidModel(centroid=x.mean(axis=0).astype(np.float32), dim=x.shape[1])


def score_centroid(model, e):
    """Cosine similarity against the training centroid, clamped to [0, 1]."""
    e = np.asarray(e, dtype=np.float64)
    if e.shape != (model.dim,):
        raise DimensionMismatch(f"vector of dim {e.shape}, model dim {model.dim}")
    c = model.centroid.astype(np.float64)
    norm = np.linalg.norm(e) * np.linalg.norm(c)
    if norm == 0.0:
        return 0.0
    return float(min(1.0, max(0.0, float(np.dot(e, c)) / norm)))
