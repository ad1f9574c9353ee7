"""Acceptance suite: every shipping criterion, one test each.

Each test prints one PASS line with the measured values once its
assertions hold; run with ``pytest tests/test_acceptance.py -v -s`` to
see both the per-test verdicts and the measured numbers.
"""
import itertools
import math
import time
from fractions import Fraction

import numpy as np
import pytest

from driftdet.corpus import STOPWORDS, Document
from driftdet.density.gmm import fit_gmm, score_gmm
from driftdet.density.vae import similarity_from_loss
from driftdet.detector import (
    BackendDescriptor,
    GmmParams,
    PipelineConfig,
    SkipgramParams,
    VaeParams,
    load_pipeline,
    save_pipeline,
    score_payload,
    train_pipeline,
)
from driftdet.embeddings import Backend, RemoteProvider, embed_batch, embed_document
from driftdet.errors import ChecksumMismatch, DimensionMismatch, ProviderError
from driftdet.evaluation import run_benchmark, scaled_accuracy
from driftdet.explain import explain_sample
from driftdet.syntax_stats import (
    coarse_tag_sequence,
    compare_patterns,
    generate_sentence_rules,
    matches_rule,
    verb_neighbourhood_patterns,
)
from driftdet.chunking import train_bigram_chunker, load_conll2000, BigramChunker, chunk_density

from conftest import (
    StubProvider,
    make_sentence,
    make_walkthrough_sentence,
    toy_vector_table_file,
)
from test_chunking import write_synthetic_conll2000
from test_explain import leave_one_out_scores
from test_syntax_stats import five_sentence_corpus
from test_vae import finite_difference_check


def _report(tag, detail):
    print(f"ACCEPTANCE {tag}: PASS ({detail})")


# --- synthetic review corpora for the benchmark criteria --------------------

_CONSONANTS = "bcdfglmnprstvz"
_VOWELS = "aeiou"


def _pseudo_vocab(rng, n, used):
    words = []
    while len(words) < n:
        k = rng.integers(2, 4)
        w = "".join(
            _CONSONANTS[rng.integers(len(_CONSONANTS))] + _VOWELS[rng.integers(len(_VOWELS))]
            for _ in range(k)
        )
        if w in used or w in STOPWORDS:
            continue
        used.add(w)
        words.append(w)
    return words


def _mixture_docs(rng, domain, shared, n, tag, labeled=False, p_domain=0.75):
    docs = []
    for i in range(n):
        k = rng.integers(12, 26)
        tokens = [
            domain[rng.integers(len(domain))]
            if rng.random() < p_domain
            else shared[rng.integers(len(shared))]
            for _ in range(k)
        ]
        docs.append(
            Document(
                id=f"{tag}-{i}",
                raw_text=" ".join(tokens),
                label=str(i % 2) if labeled else None,
            )
        )
    return docs


def test_c01_easy_pair_benchmark_native_skipgram():
    """Cross-domain review pair: centroid over trained skip-gram vectors."""
    rng = np.random.default_rng(42)
    used = set()
    movie_words = _pseudo_vocab(rng, 150, used)
    restaurant_words = _pseudo_vocab(rng, 120, used)
    shared_words = _pseudo_vocab(rng, 80, used)

    iid = _mixture_docs(rng, movie_words, shared_words, 2500, "movie", labeled=True)
    ood = _mixture_docs(rng, restaurant_words, shared_words, 1000, "resto")

    config = PipelineConfig(
        backend=BackendDescriptor(kind="native-skipgram", dim=300),
        model_kind="centroid",
        seed=7,
        skipgram=SkipgramParams(epochs=3),
    )
    t0 = time.perf_counter()
    report = run_benchmark(iid, ood, config, split_fraction=0.8)
    elapsed = time.perf_counter() - t0

    assert report.results[0].n_iid == 500    # 2000 train / 500 held out
    assert report.results[0].n_ood == 1000
    assert report.best.accuracy >= 0.90
    assert elapsed <= 300.0
    _report(
        "easy-pair benchmark",
        f"best scaled accuracy {report.best.accuracy:.4f} in {elapsed:.1f}s",
    )


def _bimodal_fixture(tmp_path):
    """Two tight in-distribution clusters; drifted words near their centroid.

    Cosine against the single centroid cannot separate the payload, while a
    density model over the same embeddings can.
    """
    rng = np.random.default_rng(99)
    dim = 300
    u_a = np.zeros(dim); u_a[0] = 1.0
    u_b = np.zeros(dim); u_b[1] = 1.0
    bisector = (u_a + u_b) / np.linalg.norm(u_a + u_b)

    vocab = {}
    for prefix, center, count in (("claima", u_a, 60), ("claimb", u_b, 60), ("news", bisector, 50)):
        for i in range(count):
            vocab[f"{prefix}{i:03d}"] = (10.0 * center + rng.normal(0, 0.25, dim)).tolist()
    vec_path = toy_vector_table_file(tmp_path / "hard-pair-vectors.txt", vocab)

    def docs_from(words, n, tag, label=None):
        out = []
        for i in range(n):
            k = rng.integers(4, 9)
            tokens = [words[rng.integers(len(words))] for _ in range(k)]
            out.append(Document(id=f"{tag}-{i}", raw_text=" ".join(tokens), label=label))
        return out

    a_words = sorted(w for w in vocab if w.startswith("claima"))
    b_words = sorted(w for w in vocab if w.startswith("claimb"))
    n_words = sorted(w for w in vocab if w.startswith("news"))
    iid = docs_from(a_words, 150, "ia", label="auto") + docs_from(b_words, 150, "ib", label="health")
    ood = docs_from(n_words, 200, "ood")
    return str(vec_path), iid, ood


def test_c02_hard_pair_density_model_beats_centroid(tmp_path):
    vec_path, iid, ood = _bimodal_fixture(tmp_path)
    accuracies = {}
    for model in ("centroid", "gmm"):
        config = PipelineConfig(
            backend=BackendDescriptor(kind="vector-file", dim=300),
            model_kind=model,
            vector_file=vec_path,
            seed=3,
            gmm=GmmParams(k_min=2, k_max=8),
        )
        accuracies[model] = run_benchmark(iid, ood, config, split_fraction=0.8).best.accuracy

    assert 0.50 <= accuracies["centroid"] <= 0.80
    assert accuracies["gmm"] >= accuracies["centroid"] + 0.05
    _report(
        "hard-pair benchmark",
        f"centroid {accuracies['centroid']:.4f}, gmm {accuracies['gmm']:.4f}",
    )


def test_c03_vae_gradients_and_training():
    t0 = time.perf_counter()
    max_rel = finite_difference_check(dim=10, hidden=8, latent=4, n=5, step=1e-4)
    assert max_rel < 1e-4

    from driftdet.density.vae import fit_vae

    rng = np.random.default_rng(0)
    blobs = np.vstack(
        [rng.normal(0.0, 1.0, size=(128, 12)), rng.normal(4.0, 1.0, size=(128, 12))]
    )
    model = fit_vae(blobs, hidden=16, latent=4, epochs=50, batch=32, seed=2)
    assert model.epoch_losses[49] < model.epoch_losses[0]
    elapsed = time.perf_counter() - t0
    assert elapsed <= 60.0
    _report(
        "vae correctness",
        f"gradcheck max rel err {max_rel:.2e}, loss {model.epoch_losses[0]:.2f}"
        f" -> {model.epoch_losses[49]:.2f} in {elapsed:.1f}s",
    )


def test_c04_gmm_correctness():
    rng = np.random.default_rng(5)
    points = np.vstack(
        [rng.normal((0, 0), 0.3, size=(250, 2)), rng.normal((8, 8), 0.3, size=(250, 2))]
    )
    model = fit_gmm(points, k_range=range(2, 9), seed=1)
    for earlier, later in zip(model.ll_history, model.ll_history[1:]):
        assert later >= earlier - 1e-9
    assert model.n_components == 2
    assert model.selected_silhouette > 0.9

    # single diagonal Gaussian log-density against an independent summation
    tiny = np.array([[0.1, -0.3], [0.4, 0.0], [-0.2, 0.3], [0.0, -0.1], [0.3, 0.2]])
    single = fit_gmm(tiny, k_range=[1], seed=0)
    mean = single.means.astype(np.float64)[0]
    var = single.variances.astype(np.float64)[0]
    for point in tiny:
        expected = sum(
            -0.5 * math.log(2.0 * math.pi * var[d]) - 0.5 * (point[d] - mean[d]) ** 2 / var[d]
            for d in range(2)
        ) / 2.0
        recovered = (
            score_gmm(single, point) * (single.train_max - single.train_min) + single.train_min
        )
        if single.train_min < expected < single.train_max:
            assert abs(recovered - expected) < 1e-9
    _report(
        "gmm correctness",
        f"k={model.n_components}, silhouette {model.selected_silhouette:.3f}, "
        f"{len(model.ll_history)} monotone EM iterations",
    )


def test_c05_score_scaling():
    rng = np.random.default_rng(8)
    points = np.vstack(
        [rng.normal((0, 0, 0), 0.5, size=(100, 3)), rng.normal((5, 5, 5), 0.5, size=(100, 3))]
    )
    model = fit_gmm(points, k_range=[2, 3], seed=0)
    lo, hi = 1.0, 0.0
    for _ in range(10_000):
        e = rng.normal(0, 20, size=3)
        s = score_gmm(model, e)
        assert 0.0 <= s <= 1.0
        lo, hi = min(lo, s), max(hi, s)

    assert similarity_from_loss(0.0) == 1.0
    assert similarity_from_loss(math.log(2.0)) == 0.5
    _report("score scaling", f"10000 gmm scores within [0,1] (saw [{lo:.3f},{hi:.3f}]); exp map exact")


def test_c06_word_masking_oracle(tmp_path):
    rng = np.random.default_rng(21)
    words = [f"tok{i}" for i in range(12)]
    table = {w: rng.normal(size=6).tolist() for w in words}
    vec_path = toy_vector_table_file(tmp_path / "mask-vectors.txt", table)
    config = PipelineConfig(
        backend=BackendDescriptor(kind="vector-file", dim=6),
        model_kind="centroid",
        vector_file=str(vec_path),
    )
    train_docs = [
        Document(id=f"t{i}", raw_text=" ".join(rng.choice(words[:6], size=5)))
        for i in range(40)
    ]
    pipe = train_pipeline(train_docs, config)

    worst = 0.0
    for i in range(100):
        tokens = list(rng.choice(words, size=rng.integers(2, 8)))
        doc = Document(id=f"p{i}", raw_text=" ".join(tokens))
        exp = explain_sample(pipe, doc)
        oracle = leave_one_out_scores(pipe, tokens)
        by_pos = sorted(exp.contributions, key=lambda c: c.position)
        for contrib, expected in zip(by_pos, oracle):
            err = abs(contrib.s_masked - expected)
            worst = max(worst, err)
            assert err < 1e-9
        again = explain_sample(pipe, doc)
        assert [(c.token, c.position, c.h) for c in again.contributions] == [
            (c.token, c.position, c.h) for c in exp.contributions
        ]
    _report("word masking oracle", f"100 documents, max |h - oracle| = {worst:.2e}")


def test_c07_stratified_accuracy():
    assert scaled_accuracy(10, 20, 9, 18) == pytest.approx(0.9, abs=1e-15)

    rng = np.random.default_rng(17)
    checked = 0
    for _ in range(1000):
        n_iid = int(rng.integers(1, 300))
        n_ood = int(rng.integers(1, 300))
        c_iid = int(rng.integers(0, n_iid + 1))
        c_ood = int(rng.integers(0, n_ood + 1))
        k = int(rng.integers(1, 6))
        base = scaled_accuracy(n_iid, n_ood, c_iid, c_ood)
        scaled = scaled_accuracy(k * n_iid, k * n_ood, k * c_iid, k * c_ood)
        exact = (Fraction(c_iid * n_ood, n_iid) + c_ood) / (2 * n_ood)
        assert base == pytest.approx(float(exact), abs=1e-12)
        assert base == pytest.approx(scaled, abs=1e-12)
        if n_iid == n_ood:
            assert base == pytest.approx((c_iid + c_ood) / (2 * n_iid), abs=1e-12)
        checked += 1
    # the identity case deserves dedicated draws
    for _ in range(1000):
        n = int(rng.integers(1, 300))
        c_iid = int(rng.integers(0, n + 1))
        c_ood = int(rng.integers(0, n + 1))
        assert scaled_accuracy(n, n, c_iid, c_ood) == pytest.approx(
            (c_iid + c_ood) / (2 * n), abs=1e-12
        )
    _report("stratified accuracy", f"worked example exact; {checked + 1000} random tuples")


def test_c08_sentence_rules():
    rules = generate_sentence_rules()
    assert len(rules) == 720

    walkthrough = coarse_tag_sequence(make_walkthrough_sentence())
    assert matches_rule(walkthrough, ("DET", "ADJ", "PRON", "NOUN", "ADV", "VERB"))

    rng = np.random.default_rng(31)
    tags = ["ADJ", "ADV", "DET", "NOUN", "PRON", "VERB"]
    agreements = 0
    for _ in range(1000):
        seq = list(rng.choice(tags, size=rng.integers(0, 11)))
        rule = rules[rng.integers(len(rules))]
        brute = any(
            list(combo) == list(rule.tags) for combo in itertools.combinations(seq, 6)
        )
        assert matches_rule(seq, rule.tags) == brute
        agreements += 1
    _report("sentence rules", f"720 permutations; walkthrough match; {agreements} oracle agreements")


def test_c09_verb_neighbourhood_patterns():
    corpus = five_sentence_corpus()
    table = verb_neighbourhood_patterns(corpus)
    assert table.counts == {
        "[PRP][VB][NP]": 2,
        "[NP][VB][JJ]": 1,
        "[NP][VB][NP][VB]": 1,
        "[VB][NP][VB][NP]": 1,
        "[RB][VB]": 1,
    }
    assert sum(table.probabilities().values()) == pytest.approx(1.0, abs=1e-9)

    payload = verb_neighbourhood_patterns(
        [make_sentence([("sprint", "VB", "VERB"), ("away", "RB", "ADV")])]
    )
    comparison = compare_patterns(table, payload)
    assert comparison.new[0]["pattern"] == "[VB][RB]"
    assert comparison.new[0]["train_probability"] == 0.0
    _report("verb patterns", "manual tally exact; payload-only pattern flagged new at 0%")


def test_c10_bigram_chunker(tmp_path):
    train_path = write_synthetic_conll2000(tmp_path / "chunk-train.txt", n_sentences=250, seed=1)
    held_path = write_synthetic_conll2000(tmp_path / "chunk-test.txt", n_sentences=60, seed=2)
    chunker = train_bigram_chunker(train_path)
    correct = total = 0
    for sent in load_conll2000(held_path):
        predicted = chunker.tag([pos for _, pos, _ in sent])
        for (_, _, gold), pred in zip(sent, predicted):
            correct += gold == pred
            total += 1
    accuracy = correct / total
    assert accuracy >= 0.80

    manual = BigramChunker(
        unigram={"DT": "B-NP", "NN": "I-NP", "VBZ": "B-VP", "PRP": "B-NP", "VBD": "B-VP"}
    )
    corpus = [
        make_sentence([("the", "DT", "DET"), ("cat", "NN", "NOUN"), ("runs", "VBZ", "VERB")]),
        make_sentence([("she", "PRP", "PRON"), ("slept", "VBD", "VERB")]),
        make_sentence([("the", "DT", "DET"), ("dog", "NN", "NOUN"), ("saw", "VBD", "VERB"),
                       ("the", "DT", "DET"), ("cat", "NN", "NOUN")]),
    ]
    density = chunk_density(manual, corpus)
    assert density["np_per_sentence"] == pytest.approx(4 / 3)
    assert density["vp_per_sentence"] == pytest.approx(1.0)
    _report("bigram chunker", f"held-out tag accuracy {accuracy:.4f}; densities match manual count")


def test_c11_persistence_round_trips(tmp_path):
    rng = np.random.default_rng(3)
    words = [f"w{i}" for i in range(10)]
    table = {w: rng.normal(size=5).tolist() for w in words}
    vec_path = toy_vector_table_file(tmp_path / "persist-vectors.txt", table)
    docs = [
        Document(id=f"d{i}", raw_text=" ".join(rng.choice(words, size=6)))
        for i in range(40)
    ]
    payloads = [
        Document(id=f"p{i}", raw_text=" ".join(rng.choice(words, size=5)))
        for i in range(10)
    ]

    for model_kind in ("centroid", "gmm", "vae"):
        config = PipelineConfig(
            backend=BackendDescriptor(kind="vector-file", dim=5),
            model_kind=model_kind,
            vector_file=str(vec_path),
            gmm=GmmParams(k_min=2, k_max=3),
            vae=VaeParams(hidden=8, latent=3, epochs=3),
        )
        pipe = train_pipeline(docs, config)
        before = [score_payload(pipe, d).score for d in payloads]
        out = tmp_path / f"model-{model_kind}"
        save_pipeline(pipe, out)
        after = [score_payload(load_pipeline(out), d).score for d in payloads]
        assert before == after

    blob = bytearray((tmp_path / "model-gmm" / "tensors.bin").read_bytes())
    blob[7] ^= 0x55
    (tmp_path / "model-gmm" / "tensors.bin").write_bytes(bytes(blob))
    with pytest.raises(ChecksumMismatch):
        load_pipeline(tmp_path / "model-gmm")
    _report("persistence", "bit-exact round trips for centroid/gmm/vae; corruption detected")


def test_c12_remote_backend_contract():
    stub = StubProvider(dim=4)
    try:
        descriptor = BackendDescriptor(kind="remote-sentence", dim=4, endpoint=stub.url)
        backend = Backend(
            descriptor=descriptor, provider=RemoteProvider(stub.url, backoff=0.01)
        )

        from driftdet.corpus import CleanDocument

        docs = [
            CleanDocument(id=f"d{i}", tokens=[f"text{i}"], sentence_text=f"text number {i}")
            for i in range(5)
        ]
        result = embed_batch(docs, backend, batch_size=2)
        assert len(stub.calls) == 3
        flat = [t for call in stub.calls for t in call]
        assert flat == [d.sentence_text for d in docs]
        for doc, vec in zip(docs, result.vectors):
            np.testing.assert_allclose(vec, stub.server.vector_for(doc.sentence_text))

        stub.calls.clear()
        stub.plan_responses([("status", 500), ("status", 500)])
        out = embed_document(docs[0], backend)
        assert len(stub.calls) == 3  # two failures retried, third attempt succeeds
        assert out.shape == (4,)

        stub.calls.clear()
        stub.plan_responses([("status", 500)] * 3)
        with pytest.raises(ProviderError):
            embed_document(docs[0], backend)

        stub.plan_responses([("wrong-width",)])
        with pytest.raises(DimensionMismatch):
            embed_document(docs[0], backend)
    finally:
        stub.close()
    _report("remote backend", "order preserved over 3 chunked calls; 3-attempt retry; width check")
