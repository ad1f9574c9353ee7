"""Document embedding backends.

Three interchangeable sources of fixed-width vectors: skip-gram word
vectors trained in-process, word vectors loaded from text files, and a
remote JSON-over-HTTP provider (sentence-level or token-averaged).
Documents embed as the mean of their token vectors except for the
sentence-level provider, whose vector passes through unchanged.
"""
from __future__ import annotations

import logging
import time
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
import requests

from .errors import (
    DegenerateVocabulary,
    DimensionMismatch,
    EmptyCorpus,
    FormatError,
    NoRepresentableTokens,
    ProviderError,
)

logger = logging.getLogger(__name__)

REMOTE_KINDS = ("remote-sentence", "remote-token-avg")
BACKEND_KINDS = ("native-skipgram", "vector-file") + REMOTE_KINDS


@dataclass
class BackendDescriptor:
    """Which embedding route to use and its expected vector width."""

    kind: str
    dim: int
    endpoint: str | None = None
    pooling: str = "mean"

    def __post_init__(self):
        if self.kind not in BACKEND_KINDS:
            raise ValueError(f"unknown backend kind {self.kind!r}")
        if (self.endpoint is not None) != (self.kind in REMOTE_KINDS):
            raise ValueError("endpoint must be set exactly for remote-* backends")


@dataclass
class WordVectorTable:
    vocab: dict[str, int]
    matrix: np.ndarray  # (V, dim) float32
    dim: int
    epoch_losses: list[float] = field(default_factory=list)
    duplicates_skipped: int = 0


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def _log_sigmoid(x):
    return -np.logaddexp(0.0, -x)


def train_skipgram(
    docs,
    dim=300,
    window=5,
    negatives=5,
    epochs=5,
    seed=0,
    min_count=2,
    start_lr=0.025,
):
    """Train skip-gram word vectors with negative sampling.

    Negatives are drawn from the unigram distribution raised to 0.75 and
    the learning rate decays linearly from ``start_lr``. Deterministic
    for a fixed seed. The mean negative-sampling loss of each epoch is
    recorded on the returned table.
    """
    sentences = [d.tokens for d in docs if len(d.tokens) >= 2]
    if not sentences:
        raise EmptyCorpus("need at least one document with two or more tokens")

    counts = Counter(t for sent in sentences for t in sent)
    kept = {w: c for w, c in counts.items() if c >= min_count}
    if not kept:
        kept = dict(counts)
    if len(kept) < 2:
        raise DegenerateVocabulary(f"{len(kept)} distinct word(s) after frequency filter")

    # frequency-descending, ties alphabetical, so indices are reproducible
    words = sorted(kept, key=lambda w: (-kept[w], w))
    vocab = {w: i for i, w in enumerate(words)}
    freq = np.array([kept[w] for w in words], dtype=np.float64)

    noise = freq ** 0.75
    noise_cdf = np.cumsum(noise / noise.sum())

    rng = np.random.default_rng(seed)
    vsize = len(words)
    w_in = (rng.random((vsize, dim)) - 0.5) / dim
    w_out = np.zeros((vsize, dim))

    # (center, context) pairs are static across epochs; precompute them
    pair_sets = []
    for sent in sentences:
        ids = [vocab[t] for t in sent if t in vocab]
        if len(ids) < 2:
            continue
        centers, contexts = [], []
        for i, c in enumerate(ids):
            lo = max(0, i - window)
            hi = min(len(ids), i + window + 1)
            for j in range(lo, hi):
                if j != i:
                    centers.append(c)
                    contexts.append(ids[j])
        if centers:
            pair_sets.append(
                (np.asarray(centers, dtype=np.intp), np.asarray(contexts, dtype=np.intp))
            )
    if not pair_sets:
        raise EmptyCorpus("no co-occurrence pairs after vocabulary filtering")

    total_pairs = sum(len(c) for c, _ in pair_sets) * epochs
    seen = 0
    min_lr = start_lr * 1e-4
    epoch_losses = []
    for _epoch in range(epochs):
        loss_sum = 0.0
        loss_pairs = 0
        for centers, contexts in pair_sets:
            lr = max(min_lr, start_lr * (1.0 - seen / total_pairs))
            n = len(centers)
            neg = np.searchsorted(noise_cdf, rng.random((n, negatives)))

            wc = w_in[centers]                        # (n, dim)
            cp = w_out[contexts]                      # (n, dim)
            cn = w_out[neg]                           # (n, k, dim)
            pos_act = np.einsum("nd,nd->n", wc, cp)
            neg_act = np.einsum("nd,nkd->nk", wc, cn)

            loss_sum -= _log_sigmoid(pos_act).sum() + _log_sigmoid(-neg_act).sum()
            loss_pairs += n

            gp = _sigmoid(pos_act) - 1.0              # d loss / d pos_act
            gn = _sigmoid(neg_act)                    # d loss / d neg_act
            grad_w = gp[:, None] * cp + np.einsum("nk,nkd->nd", gn, cn)

            np.add.at(w_in, centers, -lr * grad_w)
            np.add.at(w_out, contexts, -lr * gp[:, None] * wc)
            np.add.at(w_out, neg.ravel(), -lr * (gn[:, :, None] * wc[:, None, :]).reshape(-1, wc.shape[1]))
            seen += n
        epoch_losses.append(loss_sum / loss_pairs)

    return WordVectorTable(
        vocab=vocab,
        matrix=w_in.astype(np.float32),
        dim=dim,
        epoch_losses=epoch_losses,
    )


def load_vector_file(path):
    """Load word vectors in word2vec text format.

    A first line of two integers is treated as a ``<count> <dim>`` header;
    otherwise the width is inferred from the first row. Duplicate words
    keep their first occurrence.
    """
    words = []
    rows = []
    seen = {}
    duplicates = 0
    dim = None
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
        if not first:
            raise FormatError("empty vector file", line_no=1)
        parts = first.split()
        start_line = 2
        if len(parts) == 2 and all(p.lstrip("+-").isdigit() for p in parts):
            dim = int(parts[1])
        else:
            fh.seek(0)
            start_line = 1
        for line_no, line in enumerate(fh, start=start_line):
            parts = line.split()
            if not parts:
                continue
            word, values = parts[0], parts[1:]
            if dim is None:
                dim = len(values)
                if dim == 0:
                    raise FormatError("row has no vector values", line_no=line_no)
            if len(values) != dim:
                raise DimensionMismatch(
                    f"line {line_no}: row of width {len(values)} in a dim-{dim} file"
                )
            try:
                vec = [float(v) for v in values]
            except ValueError as exc:
                raise FormatError(f"bad float in row: {exc}", line_no=line_no) from exc
            if word in seen:
                duplicates += 1
                continue
            seen[word] = len(words)
            words.append(word)
            rows.append(vec)
    if not rows:
        raise FormatError("vector file contains no rows", line_no=1)
    if duplicates:
        logger.warning("skipped %d duplicate word(s) in %s", duplicates, path)
    return WordVectorTable(
        vocab=seen,
        matrix=np.asarray(rows, dtype=np.float32),
        dim=dim,
        duplicates_skipped=duplicates,
    )


def save_vector_file(table, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(table.vocab)} {table.dim}\n")
        inverse = sorted(table.vocab, key=table.vocab.get)
        for word in inverse:
            row = table.matrix[table.vocab[word]]
            fh.write(word + " " + " ".join(f"{v:.8g}" for v in row) + "\n")


class RemoteProvider:
    """JSON-over-HTTP embedding provider client.

    POSTs ``{"texts": [...]}`` to ``<endpoint>/embed`` and expects
    ``{"dim": int, "vectors": [[...], ...]}`` with one vector per text.
    Failures are retried with exponential backoff before surfacing as
    ProviderError.
    """

    def __init__(self, endpoint, timeout=30.0, max_attempts=3, backoff=0.5, session=None):
        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout
        self.max_attempts = max_attempts
        self.backoff = backoff
        self._session = session or requests.Session()

    def embed_texts(self, texts):
        url = self.endpoint + "/embed"
        last_status, last_body = None, None
        for attempt in range(self.max_attempts):
            if attempt:
                time.sleep(self.backoff * (2 ** (attempt - 1)))
            try:
                resp = self._session.post(url, json={"texts": list(texts)}, timeout=self.timeout)
            except requests.RequestException as exc:
                last_status, last_body = 0, str(exc)
                continue
            if resp.status_code == 200:
                try:
                    payload = resp.json()
                    vectors = [np.asarray(v, dtype=np.float64) for v in payload["vectors"]]
                    return int(payload["dim"]), vectors
                except (ValueError, KeyError, TypeError) as exc:
                    raise ProviderError(200, f"malformed response: {exc}") from exc
            last_status, last_body = resp.status_code, resp.text[:500]
        raise ProviderError(last_status, last_body)


@dataclass
class Backend:
    """A descriptor bound to whatever state it needs to embed documents."""

    descriptor: BackendDescriptor
    table: WordVectorTable | None = None
    provider: RemoteProvider | None = None

    @property
    def dim(self):
        return self.descriptor.dim

    def ready(self):
        if self.descriptor.kind in REMOTE_KINDS:
            return self.provider is not None
        return self.table is not None


def backend_from_table(table, kind="native-skipgram"):
    return Backend(descriptor=BackendDescriptor(kind=kind, dim=table.dim), table=table)


def _mean_pool(rows):
    return np.mean(np.asarray(rows, dtype=np.float64), axis=0)


def _table_embedding(doc, table):
    rows = [table.matrix[table.vocab[t]] for t in doc.tokens if t in table.vocab]
    if not rows:
        raise NoRepresentableTokens(f"all tokens of {doc.id!r} are out of vocabulary")
    return _mean_pool(rows)


def _check_width(vectors, dim):
    for v in vectors:
        if v.shape[0] != dim:
            raise DimensionMismatch(f"provider returned width {v.shape[0]}, expected {dim}")


def embed_document(doc, backend):
    """Embed one clean document; mean of token vectors except remote-sentence."""
    kind = backend.descriptor.kind
    if kind in ("native-skipgram", "vector-file"):
        return _table_embedding(doc, backend.table)
    if kind == "remote-token-avg":
        if not doc.tokens:
            raise NoRepresentableTokens(f"document {doc.id!r} has no tokens")
        dim, vectors = backend.provider.embed_texts(doc.tokens)
        if dim != backend.dim:
            raise DimensionMismatch(f"provider dim {dim}, expected {backend.dim}")
        _check_width(vectors, backend.dim)
        return _mean_pool(vectors)
    # remote-sentence: provider output passes through unchanged
    dim, vectors = backend.provider.embed_texts([doc.sentence_text])
    if dim != backend.dim:
        raise DimensionMismatch(f"provider dim {dim}, expected {backend.dim}")
    _check_width(vectors, backend.dim)
    return vectors[0]


@dataclass
class BatchResult:
    """Embeddings aligned with the input order; failed slots are None."""

    vectors: list[np.ndarray | None]
    failures: list[tuple[int, str]] = field(default_factory=list)

    def dense(self):
        return [v for v in self.vectors if v is not None]


def embed_batch(docs, backend, batch_size=32):
    """Embed many documents, collecting per-document failures.

    Remote-sentence requests are chunked by ``batch_size``; a chunk that
    still fails after retries raises ProviderError.
    """
    kind = backend.descriptor.kind
    vectors: list[np.ndarray | None] = []
    failures: list[tuple[int, str]] = []
    if kind == "remote-sentence":
        for start in range(0, len(docs), batch_size):
            chunk = docs[start:start + batch_size]
            dim, vecs = backend.provider.embed_texts([d.sentence_text for d in chunk])
            if dim != backend.dim:
                raise DimensionMismatch(f"provider dim {dim}, expected {backend.dim}")
            _check_width(vecs, backend.dim)
            vectors.extend(vecs)
        return BatchResult(vectors=vectors, failures=failures)
    for i, doc in enumerate(docs):
        try:
            vectors.append(embed_document(doc, backend))
        except NoRepresentableTokens as exc:
            vectors.append(None)
            failures.append((i, str(exc)))
    return BatchResult(vectors=vectors, failures=failures)
