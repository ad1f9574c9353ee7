"""Dataset-level syntactic drift statistics over annotated corpora.

Six views of a corpus: verb-neighbourhood patterns over NP-chunked tag
sequences, ordered six-tag sentence rules, NER tag frequencies,
dependency relation frequencies, top dependencies per NER tag, and
NP/VP chunk densities. Comparing the training and payload views yields
the dataset-level drift report.
"""
from __future__ import annotations

import bisect
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from itertools import permutations

from .chunking import VB_CLASS, chunk_density, chunk_np_tags, to_ptb
from .errors import EmptyCorpus

SIX_TAGS = ("ADJ", "ADV", "DET", "NOUN", "PRON", "VERB")

COARSE_FROM_UPOS = {
    "NOUN": "NOUN",
    "PROPN": "NOUN",
    "PRON": "PRON",
    "VERB": "VERB",
    "AUX": "VERB",
    "ADV": "ADV",
    "ADJ": "ADJ",
    "DET": "DET",
}


@dataclass
class ChunkedSentence:
    units: list[str]


def chunk_np(sentence):
    """Chunk one annotated sentence into NP units plus residual tags."""
    return ChunkedSentence(units=chunk_np_tags([to_ptb(t.ptb_tag) for t in sentence.tokens]))


@dataclass
class PatternTable:
    counts: dict = field(default_factory=dict)
    total: int = 0

    def probability(self, pattern):
        if self.total == 0:
            return 0.0
        return self.counts.get(pattern, 0) / self.total

    def probabilities(self):
        return {p: c / self.total for p, c in self.counts.items()} if self.total else {}


def _render_unit(unit):
    return "VB" if unit in VB_CLASS else unit


def verb_neighbourhood_patterns(corpus):
    """Tally the window of up to two units either side of every verb."""
    if not corpus:
        raise EmptyCorpus("no sentences")
    counts = Counter()
    for sentence in corpus:
        units = chunk_np(sentence).units
        rendered = [_render_unit(u) for u in units]
        for i, unit in enumerate(units):
            if unit in VB_CLASS:
                window = rendered[max(0, i - 2):i + 3]
                counts["".join(f"[{u}]" for u in window)] += 1
    return PatternTable(counts=dict(counts), total=sum(counts.values()))


@dataclass
class PatternComparison:
    common: list[dict]
    new: list[dict]
    top25: list[dict]


def compare_patterns(train, payload, new_threshold=0.01):
    """Common-pattern probability deltas plus payload patterns new vs train.

    A payload pattern counts as new when its training probability falls
    below ``new_threshold``. The top-25 table (by training probability)
    feeds the side-by-side chart.
    """
    train_probs = train.probabilities()
    payload_probs = payload.probabilities()
    common = [
        {
            "pattern": p,
            "train_probability": train_probs[p],
            "payload_probability": payload_probs[p],
            "delta": payload_probs[p] - train_probs[p],
        }
        for p in sorted(set(train_probs) & set(payload_probs))
    ]
    new = [
        {
            "pattern": p,
            "payload_probability": payload_probs[p],
            "train_probability": train_probs.get(p, 0.0),
        }
        for p in sorted(payload_probs, key=lambda q: (-payload_probs[q], q))
        if train_probs.get(p, 0.0) < new_threshold
    ]
    ranked = sorted(train_probs, key=lambda p: (-train_probs[p], p))[:25]
    top25 = [
        {
            "pattern": p,
            "train_probability": train_probs[p],
            "payload_probability": payload_probs.get(p, 0.0),
        }
        for p in ranked
    ]
    return PatternComparison(common=common, new=new, top25=top25)


@dataclass
class SentenceRule:
    id: int
    tags: tuple
    regex_text: str

    @classmethod
    def from_tags(cls, rule_id, tags):
        return cls(id=rule_id, tags=tuple(tags), regex_text=r"+\S+".join(f"({t})" for t in tags) + "+")


def generate_sentence_rules():
    """All 720 orderings of the six coarse tags, each tag exactly once.

    Ids follow the lexicographic order of the tag sequences.
    """
    return [
        SentenceRule.from_tags(i, tags)
        for i, tags in enumerate(permutations(SIX_TAGS), start=1)
    ]


def coarse_tag_sequence(sentence):
    """Project a sentence onto the six coarse tags; other tags drop out."""
    seq = []
    for tok in sentence.tokens:
        mapped = COARSE_FROM_UPOS.get(tok.upos)
        if mapped is not None:
            seq.append(mapped)
    return seq


def matches_rule(tag_sequence, rule_tags):
    """True when rule_tags occur in order (gaps allowed) in tag_sequence."""
    it = iter(tag_sequence)
    return all(tag in it for tag in rule_tags)


def _matches_indexed(positions, rule_tags):
    cursor = -1
    for tag in rule_tags:
        pos_list = positions.get(tag)
        if not pos_list:
            return False
        nxt = bisect.bisect_right(pos_list, cursor)
        if nxt == len(pos_list):
            return False
        cursor = pos_list[nxt]
    return True


def rule_probabilities(corpus, rules):
    """Share of sentences matched by each rule."""
    if not corpus:
        raise EmptyCorpus("no sentences")
    matches = Counter()
    for sentence in corpus:
        seq = coarse_tag_sequence(sentence)
        positions = defaultdict(list)
        for i, tag in enumerate(seq):
            positions[tag].append(i)
        for rule in rules:
            if _matches_indexed(positions, rule.tags):
                matches[rule.id] += 1
    total = len(corpus)
    return {rule.id: matches[rule.id] / total for rule in rules}


def ner_dep_stats(corpus):
    """NER tag counts, dependency relation counts, and top-2 deps per NER tag."""
    if not corpus:
        raise EmptyCorpus("no sentences")
    ner_freq = Counter()
    dep_freq = Counter()
    pair_counts = defaultdict(Counter)
    for sentence in corpus:
        for tok in sentence.tokens:
            dep_freq[tok.dep] += 1
            if tok.ner != "O":
                ner_freq[tok.ner] += 1
                pair_counts[tok.ner][tok.dep] += 1
    top2 = {
        tag: [dep for dep, _ in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:2]]
        for tag, counts in pair_counts.items()
    }
    return {"ner_freq": dict(ner_freq), "dep_freq": dict(dep_freq), "ner_dep_top2": top2}


@dataclass
class DatasetStats:
    verb_patterns: PatternTable
    rule_probs: dict
    ner_freq: dict
    dep_freq: dict
    ner_dep_top2: dict
    chunk_density: dict | None
    sentence_count: int


def compute_dataset_stats(corpus, rules=None, chunker=None):
    if not corpus:
        raise EmptyCorpus("no sentences")
    rules = rules if rules is not None else generate_sentence_rules()
    nd = ner_dep_stats(corpus)
    return DatasetStats(
        verb_patterns=verb_neighbourhood_patterns(corpus),
        rule_probs=rule_probabilities(corpus, rules),
        ner_freq=nd["ner_freq"],
        dep_freq=nd["dep_freq"],
        ner_dep_top2=nd["ner_dep_top2"],
        chunk_density=chunk_density(chunker, corpus) if chunker is not None else None,
        sentence_count=len(corpus),
    )


def _shares(freq):
    total = sum(freq.values())
    if total == 0:
        return {}
    return {tag: count / total for tag, count in freq.items()}


def _share_deltas(train_freq, payload_freq):
    train_share = _shares(train_freq)
    payload_share = _shares(payload_freq)
    rows = []
    for tag in sorted(set(train_share) | set(payload_share)):
        t = train_share.get(tag, 0.0)
        p = payload_share.get(tag, 0.0)
        rows.append({"tag": tag, "train_share": t, "payload_share": p, "delta": p - t})
    return rows


@dataclass
class DriftStatisticsReport:
    patterns: PatternComparison
    new_rules: list[dict]
    ner_deltas: list[dict]
    dep_deltas: list[dict]
    ner_dep_mismatches: list[dict]
    chunk_density: dict | None
    train_sentences: int
    payload_sentences: int


def compare_stats(
    train,
    payload,
    new_pattern_threshold=0.01,
    rule_train_max=0.01,
    rule_payload_min=0.05,
    rules=None,
):
    """Bundle every statistic pair into one drift report.

    New sentence rules are those rare in training (< rule_train_max)
    yet common in the payload (>= rule_payload_min). Frequency deltas
    are payload share minus train share throughout.
    """
    rules = rules if rules is not None else generate_sentence_rules()
    by_id = {r.id: r for r in rules}
    new_rules = []
    for rule_id in sorted(payload.rule_probs):
        p = payload.rule_probs[rule_id]
        t = train.rule_probs.get(rule_id, 0.0)
        if t < rule_train_max and p >= rule_payload_min:
            rule = by_id.get(rule_id)
            new_rules.append(
                {
                    "rule_id": rule_id,
                    "tags": list(rule.tags) if rule else [],
                    "regex_text": rule.regex_text if rule else "",
                    "train_probability": t,
                    "payload_probability": p,
                }
            )
    new_rules.sort(key=lambda r: (-r["payload_probability"], r["rule_id"]))

    mismatches = []
    for tag in sorted(set(train.ner_dep_top2) | set(payload.ner_dep_top2)):
        t2 = train.ner_dep_top2.get(tag, [])
        p2 = payload.ner_dep_top2.get(tag, [])
        if t2 != p2:
            mismatches.append({"tag": tag, "train_top2": t2, "payload_top2": p2})

    density = None
    if train.chunk_density is not None and payload.chunk_density is not None:
        density = {
            key: {
                "train": train.chunk_density[key],
                "payload": payload.chunk_density[key],
                "delta": payload.chunk_density[key] - train.chunk_density[key],
            }
            for key in ("np_per_sentence", "vp_per_sentence")
        }

    return DriftStatisticsReport(
        patterns=compare_patterns(
            train.verb_patterns, payload.verb_patterns, new_threshold=new_pattern_threshold
        ),
        new_rules=new_rules,
        ner_deltas=_share_deltas(train.ner_freq, payload.ner_freq),
        dep_deltas=_share_deltas(train.dep_freq, payload.dep_freq),
        ner_dep_mismatches=mismatches,
        chunk_density=density,
        train_sentences=train.sentence_count,
        payload_sentences=payload.sentence_count,
    )


def report_to_dict(report):
    return {
        "verb_patterns": {
            "common": report.patterns.common,
            "new": report.patterns.new,
            "top25": report.patterns.top25,
        },
        "new_sentence_rules": report.new_rules,
        "ner_frequency_deltas": report.ner_deltas,
        "dep_frequency_deltas": report.dep_deltas,
        "ner_dep_top2_mismatches": report.ner_dep_mismatches,
        "chunk_density": report.chunk_density,
        "train_sentences": report.train_sentences,
        "payload_sentences": report.payload_sentences,
    }


def render_report(report):
    """Plain-text drift statistics report."""
    lines = []
    lines.append("DRIFT STATISTICS")
    lines.append("=" * 60)
    lines.append(
        f"train sentences: {report.train_sentences}    payload sentences: {report.payload_sentences}"
    )
    lines.append("")
    lines.append("1) Verb Neighbourhood Patterns")
    lines.append("-" * 60)
    for row in report.patterns.top25:
        lines.append(
            f"  {row['pattern']:<36} train {row['train_probability'] * 100:7.4f} %"
            f"   payload {row['payload_probability'] * 100:7.4f} %"
        )
    if report.patterns.new:
        lines.append("  new patterns in payload:")
        for row in report.patterns.new[:10]:
            lines.append(
                f"    {row['pattern']:<34} payload {row['payload_probability'] * 100:7.4f} %"
                f"   train {row['train_probability'] * 100:7.4f} %"
            )
    else:
        lines.append("  no new patterns in payload")
    lines.append("")
    lines.append("2) Sentence Rules")
    lines.append("-" * 60)
    if report.new_rules:
        lines.append("  new sentence rules (rare in train, common in payload):")
        for row in report.new_rules[:10]:
            lines.append(f"    #{row['rule_id']}: {row['regex_text']}")
            lines.append(
                f"      train {row['train_probability'] * 100:7.4f} %"
                f"   payload {row['payload_probability'] * 100:7.4f} %"
            )
    else:
        lines.append("  no new sentence rules")
    lines.append("")
    lines.append("3) NER and Dependency Drift")
    lines.append("-" * 60)
    for row in report.ner_deltas:
        lines.append(
            f"  NER {row['tag']:<12} train {row['train_share'] * 100:7.3f} %"
            f"   payload {row['payload_share'] * 100:7.3f} %   delta {row['delta'] * 100:+7.3f} %"
        )
    for row in report.dep_deltas:
        lines.append(
            f"  DEP {row['tag']:<12} train {row['train_share'] * 100:7.3f} %"
            f"   payload {row['payload_share'] * 100:7.3f} %   delta {row['delta'] * 100:+7.3f} %"
        )
    if report.ner_dep_mismatches:
        lines.append("  NER tags whose top-2 dependencies changed:")
        for row in report.ner_dep_mismatches:
            lines.append(
                f"    {row['tag']}: train {row['train_top2']} vs payload {row['payload_top2']}"
            )
    lines.append("")
    lines.append("4) Chunk Densities")
    lines.append("-" * 60)
    if report.chunk_density is None:
        lines.append("  (no chunker provided; section skipped)")
    else:
        for key, row in report.chunk_density.items():
            lines.append(
                f"  {key}: train {row['train']:.3f}   payload {row['payload']:.3f}"
                f"   delta {row['delta']:+.3f}"
            )
    return "\n".join(lines)
