"""Diagonal-covariance Gaussian mixture fit by EM.

The component count is chosen by refitting for each candidate k and
keeping the one whose silhouette score (on hard assignments) is highest.
Similarity scores are dimension-normalized log-likelihoods min-max
scaled against the training set and clamped to [0, 1].
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..errors import DimensionMismatch, InsufficientData

logger = logging.getLogger(__name__)

VARIANCE_FLOOR = 1e-6
SILHOUETTE_CAP = 2000


@dataclass
class GmmModel:
    n_components: int
    weights32: np.ndarray  # (K,) float32, the persisted tensor
    weights: np.ndarray    # (K,) float64, renormalized from weights32
    means: np.ndarray      # (K, D) float32
    variances: np.ndarray  # (K, D) float32
    dim: int
    train_min: float
    train_max: float
    selected_silhouette: float = 0.0
    ll_history: list[float] = field(default_factory=list)


def _log_density(x, weights, means, variances):
    """Per-component weighted log density of points x (N, D) -> (N, K)."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    mu = np.asarray(means, dtype=np.float64)
    var = np.asarray(variances, dtype=np.float64)
    # (N, K): sum over D of log N(x_d | mu_d, var_d)
    log_norm = -0.5 * np.sum(np.log(2.0 * np.pi * var), axis=1)  # (K,)
    sq = ((x[:, None, :] - mu[None, :, :]) ** 2) / var[None, :, :]
    return np.log(weights)[None, :] + log_norm[None, :] - 0.5 * sq.sum(axis=2)


def _logsumexp(a, axis):
    m = np.max(a, axis=axis, keepdims=True)
    return (m + np.log(np.sum(np.exp(a - m), axis=axis, keepdims=True))).squeeze(axis)


def responsibilities(x, weights, means, variances):
    """E-step posteriors; rows sum to 1."""
    log_prob = _log_density(x, weights, means, variances)
    lse = _logsumexp(log_prob, axis=1)
    return np.exp(log_prob - lse[:, None]), lse


def _kmeanspp_centers(x, k, rng):
    n = x.shape[0]
    centers = [x[rng.integers(n)]]
    for _ in range(1, k):
        d2 = np.min(
            [np.sum((x - c) ** 2, axis=1) for c in centers], axis=0
        )
        total = d2.sum()
        if total <= 0:
            centers.append(x[rng.integers(n)])
            continue
        centers.append(x[rng.choice(n, p=d2 / total)])
    return np.asarray(centers)


def _em_fit(x, k, rng, max_iter=200, tol=1e-4):
    n, d = x.shape
    means = _kmeanspp_centers(x, k, rng)
    variances = np.tile(np.maximum(x.var(axis=0), VARIANCE_FLOOR), (k, 1))
    weights = np.full(k, 1.0 / k)

    history = []
    prev_ll = -np.inf
    for _ in range(max_iter):
        resp, lse = responsibilities(x, weights, means, variances)
        ll = float(lse.mean())
        history.append(ll)
        nk = np.maximum(resp.sum(axis=0), 1e-12)
        weights = nk / n
        means = (resp.T @ x) / nk[:, None]
        variances = np.maximum(
            (resp.T @ (x ** 2)) / nk[:, None] - means ** 2, VARIANCE_FLOOR
        )
        if ll - prev_ll < tol and np.isfinite(prev_ll):
            break
        prev_ll = ll
    return weights, means, variances, history


def silhouette_score(x, labels, sample_cap=SILHOUETTE_CAP, seed=0):
    """Mean silhouette over (a subsample of) the points, Euclidean metric."""
    x = np.asarray(x, dtype=np.float64)
    labels = np.asarray(labels)
    if x.shape[0] > sample_cap:
        idx = np.sort(np.random.default_rng(seed).choice(x.shape[0], sample_cap, replace=False))
        x, labels = x[idx], labels[idx]
    unique = np.unique(labels)
    if unique.size < 2:
        return -1.0
    dist = np.sqrt(np.maximum(
        np.sum(x ** 2, axis=1)[:, None] + np.sum(x ** 2, axis=1)[None, :] - 2.0 * (x @ x.T),
        0.0,
    ))
    scores = np.zeros(x.shape[0])
    masks = {c: labels == c for c in unique}
    for i in range(x.shape[0]):
        own = masks[labels[i]]
        n_own = own.sum()
        if n_own <= 1:
            scores[i] = 0.0
            continue
        a = dist[i, own].sum() / (n_own - 1)
        b = min(dist[i, masks[c]].mean() for c in unique if c != labels[i])
        scores[i] = (b - a) / max(a, b)
    return float(scores.mean())


def _quantize(weights, means, variances):
    """Round parameters to their persisted float32 form.

    Weights are renormalized in float64 after rounding so the simplex
    invariant survives quantization; the same procedure runs on load,
    which keeps scores bit-identical across a save/load round trip.
    """
    w32 = weights.astype(np.float32)
    w = w32.astype(np.float64)
    w /= w.sum()
    return w32, w, means.astype(np.float32), variances.astype(np.float32)


def weights_from_tensor(w32):
    w = w32.astype(np.float64)
    return w / w.sum()


def _raw_scores(model, x):
    log_prob = _log_density(
        x, model.weights, model.means.astype(np.float64), model.variances.astype(np.float64)
    )
    return _logsumexp(log_prob, axis=1) / model.dim


def fit_gmm(embeddings, k_range=None, seed=0, max_iter=200, tol=1e-4):
    """Fit one mixture per candidate k and keep the best-silhouette fit."""
    x = np.asarray(embeddings, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("embeddings must be a 2-D array")
    ks = sorted(k_range) if k_range is not None else list(range(2, 9))
    n, d = x.shape
    if n < 2 * max(ks):
        raise InsufficientData(f"{n} points cannot support k up to {max(ks)}")

    best = None
    for k in ks:
        rng = np.random.default_rng([seed, k])
        weights, means, variances, history = _em_fit(x, k, rng, max_iter=max_iter, tol=tol)
        if k == 1:
            sil = -1.0
        else:
            resp, _ = responsibilities(x, weights, means, variances)
            sil = silhouette_score(x, resp.argmax(axis=1), seed=seed)
        logger.debug("k=%d silhouette=%.4f ll=%.4f", k, sil, history[-1])
        if best is None or sil > best[0]:
            best = (sil, k, weights, means, variances, history)

    sil, k, weights, means, variances, history = best
    w32, w, m32, v32 = _quantize(weights, means, variances)
    model = GmmModel(
        n_components=k,
        weights32=w32,
        weights=w,
        means=m32,
        variances=v32,
        dim=d,
        train_min=0.0,
        train_max=1.0,
        selected_silhouette=sil,
        ll_history=history,
    )
    raw = _raw_scores(model, x)
    model.train_min = float(raw.min())
    model.train_max = float(raw.max())
    if model.train_max <= model.train_min:
        model.train_max = model.train_min + 1e-12
    return model


def score_gmm(model, e):
    """Similarity in [0, 1]: min-max scaled per-dimension log-likelihood."""
    e = np.asarray(e, dtype=np.float64)
    if e.shape != (model.dim,):
        raise DimensionMismatch(f"vector of dim {e.shape}, model dim {model.dim}")
    raw = float(_raw_scores(model, e[None, :])[0])
    value = (raw - model.train_min) / (model.train_max - model.train_min)
    return float(min(1.0, max(0.0, value)))
