"""Corpus ingestion and text preprocessing.

Raw documents arrive as plain line files or CSV; annotated corpora arrive
as CoNLL-U with NER labels carried in the MISC column. Cleaning strips
URLs, HTML tags and emoji, lowercases, and tokenizes on word characters.
The word-vector variant additionally drops stopwords and stems tokens.
"""
from __future__ import annotations

import csv
import re
from dataclasses import dataclass, field
from importlib import resources

from .errors import EmptyAfterCleaning, EmptyCorpus, FormatError
from .stemming import stem

_HTML_RE = re.compile(r"<[^>]*>")
_URL_RE = re.compile(r"(?:[a-zA-Z][a-zA-Z0-9+.-]*://\S+|www\.\S+)")
_EMOJI_RE = re.compile("[\U0001F300-\U0001FAFF☀-➿️]")
_TOKEN_RE = re.compile(r"\w+", re.UNICODE)


@dataclass
class Document:
    """A raw text unit, optionally labeled for stratified evaluation."""

    id: str
    raw_text: str
    label: str | None = None


@dataclass
class CleanDocument:
    id: str
    tokens: list[str]
    sentence_text: str


@dataclass
class AnnotatedToken:
    form: str
    lemma: str
    upos: str
    ptb_tag: str
    ner: str  # entity label or "O"
    dep: str
    head: int


@dataclass
class AnnotatedSentence:
    tokens: list[AnnotatedToken] = field(default_factory=list)


def _load_stopwords():
    text = resources.files("driftdet").joinpath("data/stopwords_en.txt").read_text("utf-8")
    return frozenset(line.strip() for line in text.splitlines() if line.strip())


STOPWORDS = _load_stopwords()


def load_corpus(path, format="plain", text_column="text", label_column=None):
    """Load documents from a plain-lines or CSV file.

    Empty rows are skipped; documents without an id column get
    ``doc-<row#>`` ids. Raises EmptyCorpus when nothing usable remains.
    """
    if format == "plain":
        docs = []
        with open(path, encoding="utf-8") as fh:
            for i, line in enumerate(fh):
                text = line.strip()
                if not text:
                    continue
                docs.append(Document(id=f"doc-{i}", raw_text=text))
    elif format == "csv":
        docs = []
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or text_column not in reader.fieldnames:
                raise FormatError(f"missing text column {text_column!r}", line_no=1)
            if label_column is not None and label_column not in reader.fieldnames:
                raise FormatError(f"missing label column {label_column!r}", line_no=1)
            for i, row in enumerate(reader):
                if row.get(text_column) is None:
                    raise FormatError("short row", line_no=i + 2)
                text = row[text_column].strip()
                if not text:
                    continue
                label = None
                if label_column and row.get(label_column) is not None:
                    label = row[label_column].strip()
                docs.append(Document(id=f"doc-{i}", raw_text=text, label=label))
    else:
        raise ValueError(f"unknown corpus format {format!r}")
    if not docs:
        raise EmptyCorpus(f"no documents in {path}")
    return docs


_CONLLU_COLUMNS = 10


def load_annotated_corpus(path):
    """Read CoNLL-U sentences; NER comes from a ``NER=<label>`` MISC entry."""
    sentences = []
    current: list[AnnotatedToken] = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                if current:
                    sentences.append(AnnotatedSentence(tokens=current))
                    current = []
                continue
            if line.startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) != _CONLLU_COLUMNS:
                raise FormatError(
                    f"expected {_CONLLU_COLUMNS} columns, got {len(cols)}", line_no=line_no
                )
            idx, form, lemma, upos, xpos, _feats, head, deprel, _deps, misc = cols
            if "-" in idx or "." in idx:
                continue  # multiword ranges and empty nodes carry no tree position
            ner = "O"
            for item in misc.split("|"):
                if item.startswith("NER="):
                    ner = item[len("NER="):]
            try:
                head_idx = int(head)
            except ValueError as exc:
                raise FormatError(f"bad HEAD value {head!r}", line_no=line_no) from exc
            current.append(
                AnnotatedToken(
                    form=form,
                    lemma=lemma,
                    upos=upos,
                    ptb_tag=xpos if xpos != "_" else upos,
                    ner=ner,
                    dep=deprel,
                    head=head_idx,
                )
            )
    if current:
        sentences.append(AnnotatedSentence(tokens=current))
    if not sentences:
        raise EmptyCorpus(f"no sentences in {path}")
    return sentences


def write_annotated_corpus(sentences, path):
    """Write sentences back out as CoNLL-U (inverse of load_annotated_corpus)."""
    with open(path, "w", encoding="utf-8") as fh:
        for sent in sentences:
            for i, tok in enumerate(sent.tokens, start=1):
                misc = f"NER={tok.ner}" if tok.ner != "O" else "_"
                fh.write(
                    "\t".join(
                        [
                            str(i), tok.form, tok.lemma, tok.upos, tok.ptb_tag,
                            "_", str(tok.head), tok.dep, "_", misc,
                        ]
                    )
                    + "\n"
                )
            fh.write("\n")


def _strip_noise(text):
    text = _HTML_RE.sub(" ", text)
    text = _URL_RE.sub(" ", text)
    text = _EMOJI_RE.sub(" ", text)
    return " ".join(text.split())


def clean(doc, for_word_vectors=False):
    """Clean one document.

    With ``for_word_vectors`` the token stream is stopword-filtered and
    stemmed (the form density models consume); the sentence text always
    keeps stopwords and inflection for sentence-level providers.
    """
    sentence_text = _strip_noise(doc.raw_text).lower()
    tokens = _TOKEN_RE.findall(sentence_text)
    if for_word_vectors:
        tokens = [stem(t) for t in tokens if t not in STOPWORDS]
    if not tokens:
        raise EmptyAfterCleaning(f"document {doc.id!r} has no tokens after cleaning")
    return CleanDocument(id=doc.id, tokens=tokens, sentence_text=sentence_text)
