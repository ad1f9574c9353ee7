"""Variational autoencoder over document embeddings.

A single-hidden-layer encoder produces a diagonal Gaussian posterior;
the loss per sample is squared reconstruction error plus the closed-form
KL divergence to a standard normal. Gradients are computed analytically
(numpy throughout) and optimized with Adam. Scoring is deterministic:
the latent code is the posterior mean, and the dimension-normalized loss
maps to a similarity via exp(-loss).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import DimensionMismatch, EmptyCorpus, NonFiniteLoss

logger = logging.getLogger(__name__)

PARAM_NAMES = (
    "enc_w1", "enc_b1", "mu_w", "mu_b", "lv_w", "lv_b",
    "dec_w1", "dec_b1", "dec_w2", "dec_b2",
)


@dataclass
class VaeModel:
    params: dict  # name -> float32 array
    dim: int
    hidden: int
    latent: int
    epoch_losses: list[float] = field(default_factory=list)


def init_params(dim, hidden, latent, rng):
    def glorot(n_in, n_out):
        scale = math.sqrt(2.0 / (n_in + n_out))
        return rng.normal(0.0, scale, size=(n_in, n_out))

    return {
        "enc_w1": glorot(dim, hidden),
        "enc_b1": np.zeros(hidden),
        "mu_w": glorot(hidden, latent),
        "mu_b": np.zeros(latent),
        "lv_w": glorot(hidden, latent),
        "lv_b": np.zeros(latent),
        "dec_w1": glorot(latent, hidden),
        "dec_b1": np.zeros(hidden),
        "dec_w2": glorot(hidden, dim),
        "dec_b2": np.zeros(dim),
    }


def _forward(params, x, noise):
    pre1 = x @ params["enc_w1"] + params["enc_b1"]
    h1 = np.maximum(pre1, 0.0)
    mu = h1 @ params["mu_w"] + params["mu_b"]
    lv = h1 @ params["lv_w"] + params["lv_b"]
    sigma = np.exp(0.5 * lv)
    z = mu + sigma * noise
    pre2 = z @ params["dec_w1"] + params["dec_b1"]
    h2 = np.maximum(pre2, 0.0)
    xhat = h2 @ params["dec_w2"] + params["dec_b2"]
    return pre1, h1, mu, lv, sigma, z, pre2, h2, xhat


def sample_losses(params, x, noise):
    """Per-sample loss: squared reconstruction error plus KL term."""
    _, _, mu, lv, _, _, _, _, xhat = _forward(params, x, noise)
    rec = np.sum((x - xhat) ** 2, axis=1)
    kl = 0.5 * np.sum(np.exp(lv) + mu ** 2 - 1.0 - lv, axis=1)
    return rec + kl


def batch_loss(params, x, noise):
    """Total loss over a batch with the reparameterization noise held fixed."""
    return float(np.sum(sample_losses(params, x, noise)))


def loss_and_grads(params, x, noise):
    """Batch loss and its analytic gradients w.r.t. every parameter."""
    pre1, h1, mu, lv, sigma, z, pre2, h2, xhat = _forward(params, x, noise)
    rec = np.sum((x - xhat) ** 2, axis=1)
    kl = 0.5 * np.sum(np.exp(lv) + mu ** 2 - 1.0 - lv, axis=1)
    loss = float(np.sum(rec + kl))

    d_xhat = 2.0 * (xhat - x)
    g = {"dec_w2": h2.T @ d_xhat, "dec_b2": d_xhat.sum(axis=0)}
    d_pre2 = (d_xhat @ params["dec_w2"].T) * (pre2 > 0.0)
    g["dec_w1"] = z.T @ d_pre2
    g["dec_b1"] = d_pre2.sum(axis=0)
    d_z = d_pre2 @ params["dec_w1"].T
    d_mu = d_z + mu                                  # KL contributes mu
    d_lv = d_z * noise * 0.5 * sigma + 0.5 * (np.exp(lv) - 1.0)
    g["mu_w"] = h1.T @ d_mu
    g["mu_b"] = d_mu.sum(axis=0)
    g["lv_w"] = h1.T @ d_lv
    g["lv_b"] = d_lv.sum(axis=0)
    d_pre1 = (d_mu @ params["mu_w"].T + d_lv @ params["lv_w"].T) * (pre1 > 0.0)
    g["enc_w1"] = x.T @ d_pre1
    g["enc_b1"] = d_pre1.sum(axis=0)
    return loss, g


def fit_vae(embeddings, hidden=128, latent=32, epochs=50, batch=64, lr=1e-3, seed=0):
    """Train the autoencoder with Adam; deterministic for a fixed seed."""
    x = np.asarray(embeddings, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise EmptyCorpus("no embeddings to fit")
    n, dim = x.shape
    if n < 2 * batch:
        logger.warning("only %d samples for batch size %d; expect a rough fit", n, batch)

    rng = np.random.default_rng(seed)
    params = init_params(dim, hidden, latent, rng)
    m = {k: np.zeros_like(v) for k, v in params.items()}
    v = {k: np.zeros_like(vv) for k, vv in params.items()}
    beta1, beta2, eps_adam = 0.9, 0.999, 1e-8
    step = 0

    epoch_losses = []
    for epoch in range(epochs):
        order = rng.permutation(n)
        total = 0.0
        for b, start in enumerate(range(0, n, batch)):
            idx = order[start:start + batch]
            xb = x[idx]
            noise = rng.standard_normal((len(idx), latent))
            loss, grads = loss_and_grads(params, xb, noise)
            if not np.isfinite(loss):
                raise NonFiniteLoss(epoch, b, loss)
            total += loss
            step += 1
            for name, grad in grads.items():
                m[name] = beta1 * m[name] + (1 - beta1) * grad
                v[name] = beta2 * v[name] + (1 - beta2) * grad ** 2
                m_hat = m[name] / (1 - beta1 ** step)
                v_hat = v[name] / (1 - beta2 ** step)
                params[name] -= lr * m_hat / (np.sqrt(v_hat) + eps_adam)
        epoch_losses.append(total / n)

    return VaeModel(
        params={k: p.astype(np.float32) for k, p in params.items()},
        dim=dim,
        hidden=hidden,
        latent=latent,
        epoch_losses=epoch_losses,
    )


def similarity_from_loss(loss):
    """Map a non-negative loss to a similarity in (0, 1] via exp(-loss)."""
    return float(np.exp(-loss))


def encode(model, e):
    params = {k: p.astype(np.float64) for k, p in model.params.items()}
    h1 = np.maximum(e @ params["enc_w1"] + params["enc_b1"], 0.0)
    mu = h1 @ params["mu_w"] + params["mu_b"]
    lv = h1 @ params["lv_w"] + params["lv_b"]
    return mu, lv


def score_vae(model, e):
    """Similarity in (0, 1]: exp of the negated dimension-normalized loss.

    Scoring uses the posterior mean as the latent code, so repeated calls
    return the same value.
    """
    e = np.asarray(e, dtype=np.float64)
    if e.shape != (model.dim,):
        raise DimensionMismatch(f"vector of dim {e.shape}, model dim {model.dim}")
    params = {k: p.astype(np.float64) for k, p in model.params.items()}
    x = e[None, :]
    h1 = np.maximum(x @ params["enc_w1"] + params["enc_b1"], 0.0)
    mu = h1 @ params["mu_w"] + params["mu_b"]
    lv = h1 @ params["lv_w"] + params["lv_b"]
    h2 = np.maximum(mu @ params["dec_w1"] + params["dec_b1"], 0.0)
    xhat = h2 @ params["dec_w2"] + params["dec_b2"]
    rec = float(np.sum((x - xhat) ** 2))
    kl = float(0.5 * np.sum(np.exp(lv) + mu ** 2 - 1.0 - lv))
    return similarity_from_loss((rec + kl) / model.dim)
