import numpy as np
import pytest

from driftdet.chunking import (
    BigramChunker,
    build_bigram_chunker,
    chunk_density,
    chunk_np_tags,
    count_chunk_spans,
    load_conll2000,
    train_bigram_chunker,
)
from driftdet.errors import EmptyCorpus, FormatError

from conftest import make_sentence

# synthetic chunking templates: (pos, chunk) pairs with mutually consistent
# (prev, pos) contexts, so a bigram chunker can learn them exactly
TEMPLATES = [
    [("DT", "B-NP"), ("JJ", "I-NP"), ("NN", "I-NP"), ("VBZ", "B-VP"), ("DT", "B-NP"), ("NN", "I-NP"), (".", "O")],
    [("DT", "B-NP"), ("NN", "I-NP"), ("VBZ", "B-VP"), ("JJ", "B-ADJP"), (".", "O")],
    [("PRP", "B-NP"), ("VBD", "B-VP"), ("DT", "B-NP"), ("NN", "I-NP"), ("IN", "B-PP"), ("DT", "B-NP"), ("NN", "I-NP"), (".", "O")],
    [("NNS", "B-NP"), ("VBP", "B-VP"), ("RB", "I-VP"), ("VBG", "I-VP"), ("DT", "B-NP"), ("JJ", "I-NP"), ("NN", "I-NP"), (".", "O")],
    [("DT", "B-NP"), ("NN", "I-NP"), ("MD", "B-VP"), ("VB", "I-VP"), ("DT", "B-NP"), ("NN", "I-NP"), (".", "O")],
]

_WORDS = {
    "DT": ["the", "a"], "JJ": ["big", "old"], "NN": ["cat", "road"],
    "NNS": ["dogs", "cars"], "VBZ": ["runs", "sees"], "VBD": ["saw", "took"],
    "VBP": ["run", "see"], "VBG": ["running", "going"], "VB": ["go", "see"],
    "MD": ["can", "will"], "PRP": ["it", "she"], "IN": ["on", "in"],
    "RB": ["often", "never"], ".": ["."],
}


def write_synthetic_conll2000(path, n_sentences=300, seed=0):
    rng = np.random.default_rng(seed)
    lines = []
    for _ in range(n_sentences):
        template = TEMPLATES[rng.integers(len(TEMPLATES))]
        for pos, chunk in template:
            word = _WORDS[pos][rng.integers(len(_WORDS[pos]))]
            lines.append(f"{word} {pos} {chunk}")
        lines.append("")
    path.write_text("\n".join(lines) + "\n")
    return path


class TestNpGrammar:
    def test_dt_jj_nn_folds(self):
        assert chunk_np_tags(["DT", "JJ", "NN", "VBZ"]) == ["NP", "VBZ"]

    def test_longest_match(self):
        assert chunk_np_tags(["NN", "NN"]) == ["NP"]

    def test_no_noun_passthrough(self):
        assert chunk_np_tags(["VB", "RB"]) == ["VB", "RB"]

    def test_dt_without_noun_not_folded(self):
        assert chunk_np_tags(["DT", "JJ", "VB"]) == ["DT", "JJ", "VB"]

    def test_never_grows_and_preserves_residual_order(self, rng):
        tags = ["DT", "JJ", "NN", "NNS", "VB", "RB", "IN", "CD"]
        for _ in range(100):
            seq = list(rng.choice(tags, size=rng.integers(1, 12)))
            units = chunk_np_tags(seq)
            assert len(units) <= len(seq)
            residual = [u for u in units if u != "NP"]
            it = iter(seq)
            assert all(u in it for u in residual)


class TestConll2000:
    def test_load(self, tmp_path):
        p = tmp_path / "c.txt"
        p.write_text("the DT B-NP\ncat NN I-NP\n\nruns VBZ B-VP\n")
        sents = load_conll2000(p)
        assert len(sents) == 2
        assert sents[0][0] == ("the", "DT", "B-NP")

    def test_format_error_line_number(self, tmp_path):
        p = tmp_path / "c.txt"
        p.write_text("the DT B-NP\nbroken line here extra\n")
        with pytest.raises(FormatError) as err:
            load_conll2000(p)
        assert err.value.line_no == 2

    def test_empty(self, tmp_path):
        p = tmp_path / "c.txt"
        p.write_text("\n\n")
        with pytest.raises(EmptyCorpus):
            load_conll2000(p)


class TestBigramChunker:
    def test_deterministic(self, tmp_path):
        p = write_synthetic_conll2000(tmp_path / "train.txt")
        a = train_bigram_chunker(p)
        b = train_bigram_chunker(p)
        assert a.bigram == b.bigram and a.unigram == b.unigram

    def test_lookup_never_fails(self):
        chunker = BigramChunker(bigram={}, unigram={})
        assert chunker.tag(["ZZZ", "QQQ"]) == ["O", "O"]

    def test_unigram_fallback(self):
        chunker = BigramChunker(bigram={(None, "DT"): "B-NP"}, unigram={"NN": "I-NP"})
        assert chunker.tag(["DT", "NN"]) == ["B-NP", "I-NP"]

    def test_held_out_accuracy(self, tmp_path):
        train_path = write_synthetic_conll2000(tmp_path / "train.txt", n_sentences=250, seed=1)
        test_path = write_synthetic_conll2000(tmp_path / "test.txt", n_sentences=60, seed=2)
        chunker = train_bigram_chunker(train_path)
        correct = total = 0
        for sent in load_conll2000(test_path):
            predicted = chunker.tag([pos for _, pos, _ in sent])
            for (_, _, gold), pred in zip(sent, predicted):
                correct += gold == pred
                total += 1
        assert correct / total >= 0.80


class TestSpansAndDensity:
    def test_span_counting(self):
        assert count_chunk_spans(["B-NP", "I-NP", "B-VP"], "NP") == 1
        assert count_chunk_spans(["B-NP", "I-NP", "B-VP"], "VP") == 1
        assert count_chunk_spans(["B-NP", "B-NP", "O", "I-NP"], "NP") == 3
        assert count_chunk_spans(["O", "O"], "NP") == 0

    def test_density_manual_count(self):
        # fully specified lookup table: outcome computable by hand
        chunker = BigramChunker(
            bigram={},
            unigram={"DT": "B-NP", "NN": "I-NP", "VBZ": "B-VP", "PRP": "B-NP", "VBD": "B-VP"},
        )
        corpus = [
            make_sentence([("the", "DT", "DET"), ("cat", "NN", "NOUN"), ("runs", "VBZ", "VERB")]),
            make_sentence([("she", "PRP", "PRON"), ("slept", "VBD", "VERB")]),
            make_sentence([("the", "DT", "DET"), ("dog", "NN", "NOUN"), ("saw", "VBD", "VERB"),
                           ("the", "DT", "DET"), ("cat", "NN", "NOUN")]),
        ]
        # sentence chunk tags: [B-NP I-NP B-VP], [B-NP B-VP], [B-NP I-NP B-VP B-NP I-NP]
        # NP spans: 1 + 1 + 2 = 4; VP spans: 1 + 1 + 1 = 3; 3 sentences
        density = chunk_density(chunker, corpus)
        assert density["np_per_sentence"] == pytest.approx(4 / 3)
        assert density["vp_per_sentence"] == pytest.approx(1.0)

    def test_empty_corpus(self):
        with pytest.raises(EmptyCorpus):
            chunk_density(BigramChunker(), [])
