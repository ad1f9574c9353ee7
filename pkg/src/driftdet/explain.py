"""Per-sample drift explanations by word masking.

Each visible token position is deleted in turn, the document is
re-embedded and re-scored, and the score shift (masked minus base) is
that occurrence's contribution to the drift verdict. Positive shifts
mean the word was pushing the document away from the training
distribution.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .corpus import Document, clean
from .detector import score_embedding, score_payload
from .embeddings import embed_batch
from .errors import EmptyAfterCleaning

ANSI_MARK = "\x1b[91m"
ANSI_RESET = "\x1b[0m"


@dataclass
class WordContribution:
    token: str
    position: int
    h: float
    s_masked: float
    degenerate: bool = False


@dataclass
class SampleExplanation:
    doc_id: str
    base_score: float
    contributions: list[WordContribution]
    tokens: list[str] = field(default_factory=list)


def _masked_scores_sequential(pipe, doc, visible, base_score):
    contributions = []
    for i, token in enumerate(visible):
        remaining = visible[:i] + visible[i + 1:]
        if not remaining:
            contributions.append(
                WordContribution(token=token, position=i, h=0.0 - base_score,
                                 s_masked=0.0, degenerate=True)
            )
            continue
        masked = Document(id=f"{doc.id}#mask{i}", raw_text=" ".join(remaining))
        verdict = score_payload(pipe, masked)
        contributions.append(
            WordContribution(
                token=token,
                position=i,
                h=verdict.score - base_score,
                s_masked=verdict.score,
                degenerate=verdict.flag is not None,
            )
        )
    return contributions


def _masked_scores_batched(pipe, doc, visible, base_score):
    """One provider round trip for all masked variants of the document."""
    for_wv = pipe.config.for_word_vectors()
    cleaned = []
    slots = []  # position -> index into cleaned, or None for degenerate masks
    for i in range(len(visible)):
        remaining = visible[:i] + visible[i + 1:]
        if not remaining:
            slots.append(None)
            continue
        try:
            cdoc = clean(Document(id=f"{doc.id}#mask{i}", raw_text=" ".join(remaining)), for_wv)
        except EmptyAfterCleaning:
            slots.append(None)
            continue
        slots.append(len(cleaned))
        cleaned.append(cdoc)

    result = embed_batch(cleaned, pipe.backend, batch_size=pipe.config.batch_size)
    contributions = []
    for i, token in enumerate(visible):
        slot = slots[i]
        vector = result.vectors[slot] if slot is not None else None
        if vector is None:
            score, degenerate = 0.0, True
        else:
            score, degenerate = score_embedding(pipe, vector), False
        contributions.append(
            WordContribution(token=token, position=i, h=score - base_score,
                             s_masked=score, degenerate=degenerate)
        )
    return contributions


def explain_sample(pipe, doc):
    """Score the document once per maskable position.

    Positions index the cleaned visible token stream, so repeated words
    get separate entries. Masking that empties or un-embeds the document
    records a zero masked score with a degenerate flag. For
    remote-sentence backends all masked variants go to the provider in
    batched requests instead of one call per position.
    """
    visible = clean(doc, for_word_vectors=False).tokens
    base = score_payload(pipe, doc)
    s = base.score

    if pipe.backend.descriptor.kind == "remote-sentence":
        contributions = _masked_scores_batched(pipe, doc, visible, s)
    else:
        contributions = _masked_scores_sequential(pipe, doc, visible, s)
    contributions.sort(key=lambda c: (-c.h, c.position))
    return SampleExplanation(
        doc_id=doc.id, base_score=s, contributions=contributions, tokens=visible
    )


def explanation_to_dict(exp):
    return {
        "doc_id": exp.doc_id,
        "base_score": exp.base_score,
        "contributions": [
            {
                "token": c.token,
                "position": c.position,
                "h": c.h,
                "s_masked": c.s_masked,
                "degenerate": c.degenerate,
            }
            for c in exp.contributions
        ],
    }


@dataclass
class RenderedHighlights:
    text: str
    marked: list[dict]
    note: str | None = None


def render_highlights(exp, top_k):
    """Mark the top_k positive contributors in terminal text plus JSON."""
    if top_k < 1:
        raise ValueError("top_k must be at least 1")
    positives = [c for c in exp.contributions if c.h > 0][:top_k]
    marked_positions = {c.position for c in positives}
    words = [
        f"{ANSI_MARK}{tok}{ANSI_RESET}" if i in marked_positions else tok
        for i, tok in enumerate(exp.tokens)
    ]
    note = None if positives else "no positive contributors"
    return RenderedHighlights(
        text=" ".join(words),
        marked=[{"token": c.token, "position": c.position, "h": c.h} for c in positives],
        note=note,
    )
