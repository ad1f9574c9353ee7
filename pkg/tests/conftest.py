import http.server
import json
import threading

import numpy as np
import pytest

from driftdet.corpus import AnnotatedSentence, AnnotatedToken


class _StubHandler(http.server.BaseHTTPRequestHandler):
    def do_POST(self):
        server = self.server
        length = int(self.headers.get("Content-Length", 0))
        body = json.loads(self.rfile.read(length)) if length else {}
        texts = body.get("texts", [])
        server.calls.append(list(texts))

        action = server.plan.pop(0) if server.plan else ("ok",)
        if action[0] == "status":
            self.send_response(action[1])
            self.end_headers()
            self.wfile.write(b"stub failure")
            return
        if action[0] == "wrong-width":
            payload = {"dim": server.dim, "vectors": [[1.0] * (server.dim + 1) for _ in texts]}
        elif action[0] == "fixed":
            payload = {"dim": len(action[1]), "vectors": [list(action[1]) for _ in texts]}
        else:
            payload = {"dim": server.dim, "vectors": [server.vector_for(t) for t in texts]}
        data = json.dumps(payload).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, *args):
        pass


class StubProvider:
    """Local HTTP server speaking the /embed protocol, with scriptable responses."""

    def __init__(self, dim=4):
        self.server = http.server.ThreadingHTTPServer(("127.0.0.1", 0), _StubHandler)
        self.server.dim = dim
        self.server.calls = []
        self.server.plan = []
        self.server.vector_for = self._default_vector
        self.thread = threading.Thread(target=self.server.serve_forever, daemon=True)
        self.thread.start()

    def _default_vector(self, text):
        # deterministic per-text vector so order checks are meaningful
        h = sum(ord(c) for c in text)
        return [float((h + i) % 7) for i in range(self.server.dim)]

    @property
    def url(self):
        host, port = self.server.server_address
        return f"http://{host}:{port}"

    @property
    def calls(self):
        return self.server.calls

    def plan_responses(self, actions):
        self.server.plan = list(actions)

    def close(self):
        self.server.shutdown()
        self.server.server_close()


@pytest.fixture
def stub_provider():
    stub = StubProvider()
    yield stub
    stub.close()


# --- walkthrough sentence fixture -------------------------------------------

_WALKTHROUGH_ROWS = [
    # form, ptb, upos, head, dep, ner
    ("If", "IN", "SCONJ", 5, "mark", "O"),
    ("you", "PRP", "PRON", 5, "nsubj", "O"),
    ("ca", "MD", "AUX", 5, "aux", "O"),
    ("n't", "RB", "PART", 5, "neg", "O"),
    ("get", "VB", "VERB", 13, "advcl", "O"),
    ("a", "DT", "DET", 8, "det", "TIME"),
    ("good", "JJ", "ADJ", 8, "amod", "TIME"),
    ("night", "NN", "NOUN", 10, "nmod", "TIME"),
    ("'s", "POS", "PART", 8, "case", "TIME"),
    ("sleep", "NN", "NOUN", 5, "dobj", "O"),
    ("it", "PRP", "PRON", 13, "nsubj", "O"),
    ("'s", "VBZ", "AUX", 13, "cop", "O"),
    ("likely", "JJ", "ADJ", 0, "root", "O"),
    ("that", "IN", "SCONJ", 22, "mark", "O"),
    ("your", "PRP$", "PRON", 16, "poss", "O"),
    ("parents", "NNS", "NOUN", 22, "nsubj", "O"),
    ("are", "VBP", "AUX", 22, "cop", "O"),
    ("at", "IN", "ADP", 19, "case", "O"),
    ("least", "JJS", "ADV", 20, "advmod", "O"),
    ("partly", "RB", "ADV", 22, "advmod", "O"),
    ("to", "TO", "PART", 22, "mark", "O"),
    ("blame", "VB", "VERB", 13, "ccomp", "O"),
    (".", ".", "PUNCT", 13, "punct", "O"),
]


def make_walkthrough_sentence():
    return AnnotatedSentence(
        tokens=[
            AnnotatedToken(
                form=form, lemma=form.lower(), upos=upos, ptb_tag=ptb,
                ner=ner, dep=dep, head=head,
            )
            for form, ptb, upos, head, dep, ner in _WALKTHROUGH_ROWS
        ]
    )


@pytest.fixture
def walkthrough_sentence():
    return make_walkthrough_sentence()


def write_conllu(sentences, path):
    with open(path, "w", encoding="utf-8") as fh:
        for sent in sentences:
            for i, tok in enumerate(sent.tokens, start=1):
                misc = f"NER={tok.ner}" if tok.ner != "O" else "_"
                fh.write(
                    "\t".join(
                        [str(i), tok.form, tok.lemma, tok.upos, tok.ptb_tag,
                         "_", str(tok.head), tok.dep, "_", misc]
                    )
                    + "\n"
                )
            fh.write("\n")
    return path


def make_sentence(specs):
    """Build an AnnotatedSentence from (form, ptb, upos) or 6-tuples."""
    tokens = []
    for i, spec in enumerate(specs):
        if len(spec) == 3:
            form, ptb, upos = spec
            head, dep, ner = (0 if i == 0 else 1), "dep", "O"
        else:
            form, ptb, upos, head, dep, ner = spec
        tokens.append(
            AnnotatedToken(form=form, lemma=form, upos=upos, ptb_tag=ptb,
                           ner=ner, dep=dep, head=head)
        )
    return AnnotatedSentence(tokens=tokens)


def toy_vector_table_file(path, words_vectors):
    """Write a word2vec-text-format file from {word: vector}."""
    dim = len(next(iter(words_vectors.values())))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(words_vectors)} {dim}\n")
        for word, vec in words_vectors.items():
            fh.write(word + " " + " ".join(f"{v:.8g}" for v in vec) + "\n")
    return path


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
