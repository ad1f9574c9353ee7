"""Stratified drift-detection evaluation.

The in-distribution corpus splits per label class into train and
held-out parts; the pipeline trains on the train part and must keep
held-out samples (not drifted) apart from out-of-distribution samples
(drifted). Accuracy is scaled so both sides weigh equally regardless of
corpus sizes.
"""
from __future__ import annotations

import time
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .detector import score_payload, train_pipeline
from .errors import ClassTooSmall, UnlabeledDocument


@dataclass
class StratifiedSplit:
    train: list
    held_out: list
    split_fraction: float


def stratified_split(docs, fraction=0.8, seed=0):
    """Per-class seeded shuffle then split; deterministic per seed."""
    if not 0.0 < fraction < 1.0:
        raise ValueError("fraction must lie strictly between 0 and 1")
    by_class = defaultdict(list)
    for doc in docs:
        if doc.label is None:
            raise UnlabeledDocument(f"document {doc.id!r} has no label")
        by_class[doc.label].append(doc)
    rng = np.random.default_rng(seed)
    train, held_out = [], []
    for label in sorted(by_class):
        members = by_class[label]
        if len(members) < 2:
            raise ClassTooSmall(label, len(members))
        order = rng.permutation(len(members))
        n_held = int(round((1.0 - fraction) * len(members)))
        n_held = min(max(n_held, 0), len(members))
        held_idx = set(order[:n_held].tolist())
        for i, doc in enumerate(members):
            (held_out if i in held_idx else train).append(doc)
    return StratifiedSplit(train=train, held_out=held_out, split_fraction=fraction)


def scaled_accuracy(n_iid, n_ood, correct_iid, correct_ood):
    """Accuracy reweighted so the in-distribution side counts as much as
    the out-of-distribution side: (correct_iid * n_ood / n_iid + correct_ood)
    divided by 2 * n_ood."""
    if n_iid <= 0 or n_ood <= 0:
        raise ValueError("both sides of the evaluation must be non-empty")
    return (correct_iid * n_ood / n_iid + correct_ood) / (2.0 * n_ood)


@dataclass
class EvalResult:
    n_iid: int
    n_ood: int
    correct_iid: int
    correct_ood: int
    accuracy: float
    threshold: float


@dataclass
class BenchmarkReport:
    results: list[EvalResult]
    best: EvalResult
    at_default: EvalResult
    train_seconds: float
    infer_seconds: float
    iid_scores: list[float] = field(default_factory=list)
    ood_scores: list[float] = field(default_factory=list)


def _result_at(threshold, iid_scores, ood_scores):
    correct_iid = int(np.count_nonzero(iid_scores >= threshold))  # not drifted
    correct_ood = int(np.count_nonzero(ood_scores < threshold))   # drifted
    return EvalResult(
        n_iid=len(iid_scores),
        n_ood=len(ood_scores),
        correct_iid=correct_iid,
        correct_ood=correct_ood,
        accuracy=scaled_accuracy(len(iid_scores), len(ood_scores), correct_iid, correct_ood),
        threshold=float(threshold),
    )


def candidate_thresholds(iid_scores, ood_scores):
    """Midpoints between adjacent observed scores, plus both endpoints."""
    values = np.unique(np.concatenate([iid_scores, ood_scores]))
    mids = (values[:-1] + values[1:]) / 2.0 if values.size > 1 else np.empty(0)
    return np.unique(np.concatenate([[0.0], mids, [1.0], values]))


def run_benchmark(iid_docs, ood_docs, config, thresholds=None, split_fraction=0.8, provider=None):
    """Train on the stratified train part, score held-out and OOD docs,
    and sweep thresholds. Held-out documents count as correct when not
    drifted; OOD documents when drifted."""
    split = stratified_split(iid_docs, fraction=split_fraction, seed=config.seed)

    t0 = time.perf_counter()
    pipe = train_pipeline(split.train, config, provider=provider)
    train_seconds = time.perf_counter() - t0

    t0 = time.perf_counter()
    iid_scores = np.array([score_payload(pipe, d).score for d in split.held_out])
    ood_scores = np.array([score_payload(pipe, d).score for d in ood_docs])
    infer_seconds = time.perf_counter() - t0
    if iid_scores.size == 0 or ood_scores.size == 0:
        raise ValueError("both corpora must contribute at least one scored document")

    if thresholds is None:
        sweep = candidate_thresholds(iid_scores, ood_scores)
    else:
        sweep = np.asarray(sorted(thresholds), dtype=np.float64)
    results = [_result_at(t, iid_scores, ood_scores) for t in sweep]
    best = max(results, key=lambda r: (r.accuracy, -r.threshold))
    return BenchmarkReport(
        results=results,
        best=best,
        at_default=_result_at(config.threshold, iid_scores, ood_scores),
        train_seconds=train_seconds,
        infer_seconds=infer_seconds,
        iid_scores=iid_scores.tolist(),
        ood_scores=ood_scores.tolist(),
    )


__all__ = [
    "StratifiedSplit",
    "EvalResult",
    "BenchmarkReport",
    "stratified_split",
    "scaled_accuracy",
    "run_benchmark",
    "candidate_thresholds",
]
