"""Density models over document embeddings: GMM, VAE, and a centroid baseline."""

from .centroid import CentroidModel, fit_centroid, score_centroid
from .gmm import GmmModel, fit_gmm, score_gmm, silhouette_score
from .vae import VaeModel, fit_vae, score_vae, similarity_from_loss

__all__ = [
    "CentroidModel",
    "GmmModel",
    "VaeModel",
    "fit_centroid",
    "fit_gmm",
    "fit_vae",
    "score_centroid",
    "score_gmm",
    "score_vae",
    "silhouette_score",
    "similarity_from_loss",
]
