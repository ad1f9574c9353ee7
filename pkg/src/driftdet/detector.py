"""Trainable drift-detection pipelines.

A pipeline is corpus cleaning + an embedding backend + a density model,
with a threshold rule on the similarity score: strictly below the
threshold means drifted. Trained pipelines persist to a directory as a
JSON manifest plus one checksummed little-endian float32 tensor blob.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import os
import time
from dataclasses import dataclass, field

import numpy as np

from .corpus import clean
from .density.centroid import CentroidModel, fit_centroid, score_centroid
from .density.gmm import GmmModel, fit_gmm, score_gmm, weights_from_tensor
from .density.vae import PARAM_NAMES, VaeModel, fit_vae, score_vae
from .embeddings import (
    Backend,
    BackendDescriptor,
    RemoteProvider,
    WordVectorTable,
    embed_batch,
    embed_document,
    load_vector_file,
    train_skipgram,
)
from .errors import (
    ChecksumMismatch,
    EmptyAfterCleaning,
    EmptyCorpus,
    MissingFile,
    NoRepresentableTokens,
    VersionUnsupported,
)

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
MODEL_KINDS = ("gmm", "vae", "centroid")
PROVIDER_URL_ENV = "DRIFTDET_PROVIDER_URL"


@dataclass
class SkipgramParams:
    window: int = 5
    negatives: int = 5
    epochs: int = 5
    min_count: int = 2


@dataclass
class GmmParams:
    k_min: int = 2
    k_max: int = 8
    max_iter: int = 200
    tol: float = 1e-4


@dataclass
class VaeParams:
    hidden: int = 128
    latent: int = 32
    epochs: int = 50
    batch: int = 64
    lr: float = 1e-3


@dataclass
class PipelineConfig:
    backend: BackendDescriptor
    model_kind: str = "centroid"
    threshold: float = 0.995
    seed: int = 42
    remove_stopwords: bool | None = None  # None -> backend default
    vector_file: str | None = None
    batch_size: int = 32
    skipgram: SkipgramParams = field(default_factory=SkipgramParams)
    gmm: GmmParams = field(default_factory=GmmParams)
    vae: VaeParams = field(default_factory=VaeParams)

    def __post_init__(self):
        if self.model_kind not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {self.model_kind!r}")
        if not 0.0 < self.threshold < 1.0:
            raise ValueError("threshold must lie strictly between 0 and 1")

    def for_word_vectors(self):
        """Whether cleaning should drop stopwords and stem for this backend."""
        if self.remove_stopwords is not None:
            return self.remove_stopwords
        return self.backend.kind != "remote-sentence"


@dataclass
class DriftVerdict:
    score: float
    drifted: bool
    threshold: float
    flag: str | None = None
    doc_id: str | None = None

    @classmethod
    def from_score(cls, score, threshold, flag=None, doc_id=None):
        return cls(
            score=float(score),
            drifted=float(score) < threshold,
            threshold=threshold,
            flag=flag,
            doc_id=doc_id,
        )


@dataclass
class TrainedPipeline:
    config: PipelineConfig
    backend: Backend
    model: GmmModel | VaeModel | CentroidModel
    metadata: dict


def _build_provider(descriptor, provider=None):
    if provider is not None:
        return provider
    endpoint = os.environ.get(PROVIDER_URL_ENV) or descriptor.endpoint
    return RemoteProvider(endpoint)


def _build_backend(config, cleaned, provider=None):
    kind = config.backend.kind
    if kind == "native-skipgram":
        table = train_skipgram(
            cleaned,
            dim=config.backend.dim,
            window=config.skipgram.window,
            negatives=config.skipgram.negatives,
            epochs=config.skipgram.epochs,
            seed=config.seed,
            min_count=config.skipgram.min_count,
        )
        return Backend(descriptor=config.backend, table=table)
    if kind == "vector-file":
        if not config.vector_file:
            raise ValueError("vector-file backend requires config.vector_file")
        table = load_vector_file(config.vector_file)
        if table.dim != config.backend.dim:
            logger.info("vector file dim %d overrides configured %d", table.dim, config.backend.dim)
            config.backend.dim = table.dim
        return Backend(descriptor=config.backend, table=table)
    return Backend(descriptor=config.backend, provider=_build_provider(config.backend, provider))


def _fit_model(config, matrix):
    if config.model_kind == "gmm":
        return fit_gmm(
            matrix,
            k_range=range(config.gmm.k_min, config.gmm.k_max + 1),
            seed=config.seed,
            max_iter=config.gmm.max_iter,
            tol=config.gmm.tol,
        )
    if config.model_kind == "vae":
        return fit_vae(
            matrix,
            hidden=config.vae.hidden,
            latent=config.vae.latent,
            epochs=config.vae.epochs,
            batch=config.vae.batch,
            lr=config.vae.lr,
            seed=config.seed,
        )
    return fit_centroid(matrix)


def _created_at():
    # honor SOURCE_DATE_EPOCH so identical runs persist identical artifacts
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    stamp = int(epoch) if epoch else int(time.time())
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(stamp))


def train_pipeline(docs, config, provider=None):
    """Clean, embed, and fit the configured density model."""
    for_wv = config.for_word_vectors()
    cleaned = []
    dropped_cleaning = 0
    for doc in docs:
        try:
            cleaned.append(clean(doc, for_word_vectors=for_wv))
        except EmptyAfterCleaning:
            dropped_cleaning += 1
    if not cleaned:
        raise EmptyCorpus("no usable documents after cleaning")

    backend = _build_backend(config, cleaned, provider=provider)
    result = embed_batch(cleaned, backend, batch_size=config.batch_size)
    vectors = result.dense()
    if not vectors:
        raise EmptyCorpus("no embeddable documents")
    matrix = np.asarray(vectors, dtype=np.float64)
    model = _fit_model(config, matrix)

    metadata = {
        "n_train": len(vectors),
        "n_dropped_cleaning": dropped_cleaning,
        "n_dropped_oov": len(result.failures),
        "dim": backend.dim,
        "created_at": _created_at(),
        "format_version": FORMAT_VERSION,
    }
    return TrainedPipeline(config=config, backend=backend, model=model, metadata=metadata)


def score_embedding(pipe, e):
    kind = pipe.config.model_kind
    if kind == "gmm":
        return score_gmm(pipe.model, e)
    if kind == "vae":
        return score_vae(pipe.model, e)
    return score_centroid(pipe.model, e)


def score_payload(pipe, doc):
    """Score one raw document; unembeddable payloads count as drifted."""
    threshold = pipe.config.threshold
    try:
        cdoc = clean(doc, for_word_vectors=pipe.config.for_word_vectors())
    except EmptyAfterCleaning:
        return DriftVerdict(
            score=0.0, drifted=True, threshold=threshold,
            flag="empty-after-cleaning", doc_id=doc.id,
        )
    try:
        e = embed_document(cdoc, pipe.backend)
    except NoRepresentableTokens:
        return DriftVerdict(
            score=0.0, drifted=True, threshold=threshold,
            flag="no-representable-tokens", doc_id=doc.id,
        )
    return DriftVerdict.from_score(score_embedding(pipe, e), threshold, doc_id=doc.id)


# --- persistence -----------------------------------------------------------

_MANIFEST = "manifest.json"
_TENSORS = "tensors.bin"


def _tensor_entries(pipe):
    """Named float32 tensors in their fixed serialization order."""
    entries = []
    if pipe.backend.table is not None:
        entries.append(("wordvec.matrix", pipe.backend.table.matrix))
    model = pipe.model
    if isinstance(model, GmmModel):
        entries.append(("gmm.weights", model.weights32))
        entries.append(("gmm.means", model.means))
        entries.append(("gmm.variances", model.variances))
    elif isinstance(model, VaeModel):
        for name in PARAM_NAMES:
            entries.append((f"vae.{name}", model.params[name]))
    else:
        entries.append(("centroid.centroid", model.centroid))
    return entries


def _model_section(model):
    if isinstance(model, GmmModel):
        return {
            "kind": "gmm",
            "n_components": model.n_components,
            "dim": model.dim,
            "train_min": model.train_min,
            "train_max": model.train_max,
            "selected_silhouette": model.selected_silhouette,
        }
    if isinstance(model, VaeModel):
        return {"kind": "vae", "dim": model.dim, "hidden": model.hidden, "latent": model.latent}
    return {"kind": "centroid", "dim": model.dim}


def save_pipeline(pipe, model_dir):
    """Persist manifest.json plus a checksummed tensors.bin."""
    os.makedirs(model_dir, exist_ok=True)
    blob = bytearray()
    index = []
    for name, arr in _tensor_entries(pipe):
        data = np.ascontiguousarray(arr, dtype="<f4").tobytes()
        index.append(
            {"name": name, "shape": list(arr.shape), "dtype": "float32",
             "offset": len(blob), "nbytes": len(data)}
        )
        blob.extend(data)
    tensors_path = os.path.join(model_dir, _TENSORS)
    with open(tensors_path, "wb") as fh:
        fh.write(bytes(blob))

    backend_section = dataclasses.asdict(pipe.backend.descriptor)
    if pipe.backend.table is not None:
        vocab = pipe.backend.table.vocab
        backend_section["vocab"] = sorted(vocab, key=vocab.get)

    manifest = {
        "format_version": FORMAT_VERSION,
        "config": dataclasses.asdict(pipe.config),
        "metadata": pipe.metadata,
        "backend": backend_section,
        "model": _model_section(pipe.model),
        "tensors": index,
        "checksums": {_TENSORS: hashlib.sha256(bytes(blob)).hexdigest()},
    }
    with open(os.path.join(model_dir, _MANIFEST), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return model_dir


def _config_from_dict(d):
    backend = BackendDescriptor(**d.pop("backend"))
    skipgram = SkipgramParams(**d.pop("skipgram"))
    gmm = GmmParams(**d.pop("gmm"))
    vae = VaeParams(**d.pop("vae"))
    return PipelineConfig(backend=backend, skipgram=skipgram, gmm=gmm, vae=vae, **d)


def load_pipeline(model_dir, provider=None):
    """Load a persisted pipeline, verifying format version and checksums."""
    manifest_path = os.path.join(model_dir, _MANIFEST)
    tensors_path = os.path.join(model_dir, _TENSORS)
    if not os.path.exists(manifest_path):
        raise MissingFile(f"{manifest_path} not found")
    with open(manifest_path, encoding="utf-8") as fh:
        manifest = json.load(fh)
    if manifest.get("format_version") != FORMAT_VERSION:
        raise VersionUnsupported(f"format_version {manifest.get('format_version')!r}")
    if not os.path.exists(tensors_path):
        raise MissingFile(f"{tensors_path} not found")
    with open(tensors_path, "rb") as fh:
        blob = fh.read()
    digest = hashlib.sha256(blob).hexdigest()
    if digest != manifest["checksums"][_TENSORS]:
        raise ChecksumMismatch(f"{_TENSORS}: expected {manifest['checksums'][_TENSORS]}, got {digest}")

    tensors = {}
    for entry in manifest["tensors"]:
        start, nbytes = entry["offset"], entry["nbytes"]
        arr = np.frombuffer(blob[start:start + nbytes], dtype="<f4").reshape(entry["shape"])
        tensors[entry["name"]] = arr

    config = _config_from_dict(dict(manifest["config"]))
    backend_section = manifest["backend"]
    if "vocab" in backend_section:
        vocab = {w: i for i, w in enumerate(backend_section["vocab"])}
        table = WordVectorTable(vocab=vocab, matrix=tensors["wordvec.matrix"], dim=config.backend.dim)
        backend = Backend(descriptor=config.backend, table=table)
    else:
        backend = Backend(
            descriptor=config.backend,
            provider=_build_provider(config.backend, provider),
        )

    section = manifest["model"]
    if section["kind"] == "gmm":
        model = GmmModel(
            n_components=section["n_components"],
            weights32=tensors["gmm.weights"],
            weights=weights_from_tensor(tensors["gmm.weights"]),
            means=tensors["gmm.means"],
            variances=tensors["gmm.variances"],
            dim=section["dim"],
            train_min=section["train_min"],
            train_max=section["train_max"],
            selected_silhouette=section.get("selected_silhouette", 0.0),
        )
    elif section["kind"] == "vae":
        model = VaeModel(
            params={name: tensors[f"vae.{name}"] for name in PARAM_NAMES},
            dim=section["dim"],
            hidden=section["hidden"],
            latent=section["latent"],
        )
    else:
        model = CentroidModel(centroid=tensors["centroid.centroid"], dim=section["dim"])

    return TrainedPipeline(
        config=config, backend=backend, model=model, metadata=manifest["metadata"]
    )
