"""Phrase chunking over POS tag sequences.

Two chunkers live here: a grammar chunker that folds determiner +
adjective + noun runs into NP units, and a bigram tag chunker trained on
CoNLL-2000-format data (token POS chunk-tag lines) used for NP/VP
density statistics.
"""
from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field

from .errors import EmptyCorpus, FormatError

# conservative fallback mapping for corpora that only carry universal tags
PTB_FROM_UPOS = {
    "NOUN": "NN",
    "PROPN": "NNP",
    "ADJ": "JJ",
    "DET": "DT",
    "VERB": "VB",
    "AUX": "VB",
    "ADV": "RB",
    "ADP": "IN",
    "PRON": "PRP",
    "NUM": "CD",
    "PART": "RP",
    "CCONJ": "CC",
    "SCONJ": "IN",
    "INTJ": "UH",
    "PUNCT": ".",
}

VB_CLASS = frozenset({"VB", "VBD", "VBG", "VBN", "VBP", "VBZ"})

_ADJ_TAGS = frozenset({"JJ", "JJR", "JJS"})
_NOUN_TAGS = frozenset({"NN", "NNS", "NNP", "NNPS"})


def to_ptb(tag):
    return PTB_FROM_UPOS.get(tag, tag)


def chunk_np_tags(tags):
    """Fold NP spans (optional DT, adjectives, one or more nouns) greedily.

    Unmatched tags pass through in order, so the unit count never grows.
    """
    units = []
    i = 0
    n = len(tags)
    while i < n:
        j = i
        if j < n and tags[j] == "DT":
            j += 1
        while j < n and tags[j] in _ADJ_TAGS:
            j += 1
        k = j
        while k < n and tags[k] in _NOUN_TAGS:
            k += 1
        if k > j:
            units.append("NP")
            i = k
        else:
            units.append(tags[i])
            i += 1
    return units


def load_conll2000(path):
    """Read CoNLL-2000 chunking data: ``TOKEN POS CHUNKTAG`` lines."""
    sentences = []
    current = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                if current:
                    sentences.append(current)
                    current = []
                continue
            parts = line.split()
            if len(parts) != 3:
                raise FormatError(f"expected 3 fields, got {len(parts)}", line_no=line_no)
            current.append(tuple(parts))
    if current:
        sentences.append(current)
    if not sentences:
        raise EmptyCorpus(f"no sentences in {path}")
    return sentences


@dataclass
class BigramChunker:
    """(prev POS, POS) -> chunk tag with unigram fallback, default 'O'."""

    bigram: dict = field(default_factory=dict)
    unigram: dict = field(default_factory=dict)
    default: str = "O"

    def tag(self, pos_seq):
        tags = []
        prev = None
        for pos in pos_seq:
            tag = self.bigram.get((prev, pos))
            if tag is None:
                tag = self.unigram.get(pos, self.default)
            tags.append(tag)
            prev = pos
        return tags


def _most_common(counter):
    # ties break lexicographically so training is reproducible
    return min(counter.items(), key=lambda kv: (-kv[1], kv[0]))[0]


def build_bigram_chunker(sentences):
    bigram_counts = defaultdict(Counter)
    unigram_counts = defaultdict(Counter)
    for sent in sentences:
        prev = None
        for _token, pos, chunk in sent:
            bigram_counts[(prev, pos)][chunk] += 1
            unigram_counts[pos][chunk] += 1
            prev = pos
    return BigramChunker(
        bigram={ctx: _most_common(c) for ctx, c in bigram_counts.items()},
        unigram={pos: _most_common(c) for pos, c in unigram_counts.items()},
    )


def train_bigram_chunker(conll2000_path):
    return build_bigram_chunker(load_conll2000(conll2000_path))


def count_chunk_spans(chunk_tags, phrase):
    """Count maximal phrase spans under the usual IOB reading."""
    count = 0
    prev_type = None
    for tag in chunk_tags:
        if tag == "O" or "-" not in tag:
            prev_type = None
            continue
        iob, typ = tag.split("-", 1)
        if typ == phrase and (iob == "B" or prev_type != phrase):
            count += 1
        prev_type = typ
    return count


def chunk_density(chunker, corpus):
    """NP and VP spans per sentence over an annotated corpus."""
    if not corpus:
        raise EmptyCorpus("no sentences")
    np_total = 0
    vp_total = 0
    for sent in corpus:
        tags = chunker.tag([to_ptb(tok.ptb_tag) for tok in sent.tokens])
        np_total += count_chunk_spans(tags, "NP")
        vp_total += count_chunk_spans(tags, "VP")
    n = len(corpus)
    return {"np_per_sentence": np_total / n, "vp_per_sentence": vp_total / n}
