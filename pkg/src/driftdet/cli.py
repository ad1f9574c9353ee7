"""Command-line interface: train, score, explain, stats, eval.

Configuration comes from an optional TOML or JSON file; flags win over
config values. Machine-readable output (--json) goes to stdout only,
diagnostics to stderr. Report commands can drop CSV/JSON files plus PNG
figures into an output directory.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib

from . import plots
from .chunking import train_bigram_chunker
from .corpus import load_annotated_corpus, load_corpus
from .detector import (
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
from .errors import ConfigError, DriftDetError
from .evaluation import run_benchmark
from .explain import explain_sample, explanation_to_dict, render_highlights
from .syntax_stats import (
    compare_stats,
    compute_dataset_stats,
    generate_sentence_rules,
    render_report,
    report_to_dict,
)

SCHEMA_VERSION = 1

_ALLOWED_KEYS = {
    "": {"schema_version", "backend", "pipeline", "skipgram", "gmm", "vae", "stats", "corpus"},
    "backend": {"kind", "dim", "endpoint", "pooling"},
    "pipeline": {"model", "threshold", "seed", "remove_stopwords", "vector_file", "batch_size"},
    "skipgram": {"window", "negatives", "epochs", "min_count"},
    "gmm": {"k_min", "k_max", "max_iter", "tol"},
    "vae": {"hidden", "latent", "epochs", "batch", "lr"},
    "stats": {"new_pattern_threshold", "rule_train_max", "rule_payload_min"},
    "corpus": {"format", "text_column", "label_column"},
}


def load_run_config(path):
    """Parse a TOML or JSON run configuration, rejecting unknown keys."""
    if path.endswith(".json"):
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    else:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    if not isinstance(data, dict):
        raise ConfigError("configuration root must be a table/object")
    unknown = sorted(set(data) - _ALLOWED_KEYS[""])
    if unknown:
        raise ConfigError(f"unknown configuration keys: {unknown}")
    for section, keys in _ALLOWED_KEYS.items():
        if not section or section not in data:
            continue
        if not isinstance(data[section], dict):
            raise ConfigError(f"section {section!r} must be a table/object")
        bad = sorted(set(data[section]) - keys)
        if bad:
            raise ConfigError(f"unknown keys in [{section}]: {bad}")
    return data


def build_pipeline_config(run_config, args):
    backend_cfg = dict(run_config.get("backend", {}))
    pipeline_cfg = dict(run_config.get("pipeline", {}))

    kind = getattr(args, "backend", None) or backend_cfg.get("kind", "native-skipgram")
    dim = getattr(args, "dim", None) or backend_cfg.get("dim", 300)
    endpoint = getattr(args, "endpoint", None) or backend_cfg.get("endpoint")
    if os.environ.get("DRIFTDET_PROVIDER_URL"):
        endpoint = os.environ["DRIFTDET_PROVIDER_URL"]
    if not kind.startswith("remote-"):
        endpoint = None
    descriptor = BackendDescriptor(kind=kind, dim=int(dim), endpoint=endpoint)

    model = getattr(args, "model", None) or pipeline_cfg.get("model", "centroid")
    threshold = getattr(args, "threshold", None)
    if threshold is None:
        threshold = pipeline_cfg.get("threshold", 0.995)
    seed = getattr(args, "seed", None)
    if seed is None:
        seed = pipeline_cfg.get("seed", 42)
    vector_file = getattr(args, "vector_file", None) or pipeline_cfg.get("vector_file")

    return PipelineConfig(
        backend=descriptor,
        model_kind=model,
        threshold=float(threshold),
        seed=int(seed),
        remove_stopwords=pipeline_cfg.get("remove_stopwords"),
        vector_file=vector_file,
        batch_size=int(pipeline_cfg.get("batch_size", 32)),
        skipgram=SkipgramParams(**run_config.get("skipgram", {})),
        gmm=GmmParams(**run_config.get("gmm", {})),
        vae=VaeParams(**run_config.get("vae", {})),
    )


def _corpus_options(run_config, args):
    corpus_cfg = dict(run_config.get("corpus", {}))
    fmt = getattr(args, "format", None) or corpus_cfg.get("format", "plain")
    text_column = getattr(args, "text_column", None) or corpus_cfg.get("text_column", "text")
    label_column = getattr(args, "label_column", None) or corpus_cfg.get("label_column")
    return fmt, text_column, label_column


def _emit(obj):
    print(json.dumps(obj, sort_keys=True))


def _positive_int(value):
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return n


# --- commands ---------------------------------------------------------------


def cmd_train(args):
    run_config = load_run_config(args.config) if args.config else {}
    config = build_pipeline_config(run_config, args)
    fmt, text_column, label_column = _corpus_options(run_config, args)
    docs = load_corpus(args.corpus, format=fmt, text_column=text_column, label_column=label_column)

    t0 = time.perf_counter()
    pipe = train_pipeline(docs, config)
    seconds = time.perf_counter() - t0
    save_pipeline(pipe, args.out_dir)

    if args.json:
        _emit(
            {
                "schema_version": SCHEMA_VERSION,
                "n_train": pipe.metadata["n_train"],
                "n_dropped": pipe.metadata["n_dropped_cleaning"] + pipe.metadata["n_dropped_oov"],
                "dim": pipe.metadata["dim"],
                "model_kind": config.model_kind,
                "train_seconds": round(seconds, 3),
                "model_dir": args.out_dir,
            }
        )
    else:
        print(
            f"trained {config.model_kind} pipeline: {pipe.metadata['n_train']} documents, "
            f"dim {pipe.metadata['dim']}, {seconds:.2f} s -> {args.out_dir}"
        )
    return 0


def cmd_score(args):
    pipe = load_pipeline(args.model_dir)
    docs = load_corpus(args.payload, format=args.format or "plain",
                       text_column=args.text_column or "text")
    verdicts = [score_payload(pipe, doc) for doc in docs]

    for v in verdicts:
        if args.json:
            _emit(
                {
                    "schema_version": SCHEMA_VERSION,
                    "doc_id": v.doc_id,
                    "score": v.score,
                    "drifted": v.drifted,
                    "threshold": v.threshold,
                    "flag": v.flag,
                }
            )
        else:
            label = "Drifted" if v.drifted else "Not drifted"
            suffix = f"  [{v.flag}]" if v.flag else ""
            print(f"{v.doc_id}: {label}, {v.score!r}{suffix}")

    n_drifted = sum(v.drifted for v in verdicts)
    summary = f"drift rate: {n_drifted}/{len(verdicts)} ({100.0 * n_drifted / len(verdicts):.1f}%)"
    print(summary, file=sys.stderr if args.json else sys.stdout)

    if args.out_dir:
        os.makedirs(args.out_dir, exist_ok=True)
        csv_path = os.path.join(args.out_dir, "verdicts.csv")
        with open(csv_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["doc_id", "score", "drifted", "flag"])
            for v in verdicts:
                writer.writerow([v.doc_id, repr(v.score), int(v.drifted), v.flag or ""])
        plots.render_score_histogram(
            [v.score for v in verdicts], pipe.config.threshold,
            os.path.join(args.out_dir, "score_histogram.png"),
        )
        print(f"wrote {csv_path} and score_histogram.png", file=sys.stderr)
    return 0


def cmd_explain(args):
    pipe = load_pipeline(args.model_dir)
    docs = load_corpus(args.payload, format=args.format or "plain",
                       text_column=args.text_column or "text")
    out_records = []
    for doc in docs:
        verdict = score_payload(pipe, doc)
        if not verdict.drifted:
            if args.json:
                _emit(
                    {
                        "schema_version": SCHEMA_VERSION,
                        "doc_id": doc.id,
                        "drifted": False,
                        "score": verdict.score,
                    }
                )
            else:
                print(f"{doc.id}: not drifted, no explanation (score {verdict.score!r})")
            continue
        exp = explain_sample(pipe, doc)
        rendered = render_highlights(exp, args.top_k)
        record = dict(explanation_to_dict(exp), schema_version=SCHEMA_VERSION, drifted=True)
        out_records.append((exp, record))
        if args.json:
            _emit(record)
        else:
            print(f"{doc.id}: Drifted, {exp.base_score!r}")
            print(f"  {rendered.text}")
            if rendered.note:
                print(f"  ({rendered.note})")
            print(f"  contributions: {json.dumps(rendered.marked, sort_keys=True)}")

    if args.out_dir:
        os.makedirs(args.out_dir, exist_ok=True)
        jsonl = os.path.join(args.out_dir, "explanations.jsonl")
        with open(jsonl, "w", encoding="utf-8") as fh:
            for _exp, record in out_records:
                fh.write(json.dumps(record, sort_keys=True) + "\n")
        for exp, _record in out_records:
            safe_id = exp.doc_id.replace("/", "_")
            plots.render_contributions(
                exp, args.top_k, os.path.join(args.out_dir, f"explain_{safe_id}.png")
            )
        print(f"wrote {jsonl} and {len(out_records)} figure(s)", file=sys.stderr)
    return 0


def cmd_stats(args):
    rules = generate_sentence_rules()
    chunker = None
    chunker_note = None
    if args.chunker:
        chunker = train_bigram_chunker(args.chunker)
    else:
        chunker_note = "chunk-density section skipped: no chunker training file given"

    train_stats = compute_dataset_stats(
        load_annotated_corpus(args.train_conllu), rules=rules, chunker=chunker
    )
    payload_stats = compute_dataset_stats(
        load_annotated_corpus(args.payload_conllu), rules=rules, chunker=chunker
    )
    report = compare_stats(
        train_stats,
        payload_stats,
        new_pattern_threshold=args.new_pattern_threshold,
        rule_train_max=args.rule_train_max,
        rule_payload_min=args.rule_payload_min,
        rules=rules,
    )

    payload_dict = dict(report_to_dict(report), schema_version=SCHEMA_VERSION)
    if chunker_note:
        payload_dict["note"] = chunker_note
    if args.json:
        _emit(payload_dict)
    else:
        print(render_report(report))
        if chunker_note:
            print(f"note: {chunker_note}")

    if args.out_dir:
        os.makedirs(args.out_dir, exist_ok=True)
        with open(os.path.join(args.out_dir, "stats.json"), "w", encoding="utf-8") as fh:
            json.dump(payload_dict, fh, indent=2, sort_keys=True)
        csv_path = os.path.join(args.out_dir, "patterns.csv")
        with open(csv_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["pattern", "train_probability", "payload_probability"])
            for row in report.patterns.top25:
                writer.writerow([row["pattern"], row["train_probability"], row["payload_probability"]])
        plots.render_pattern_comparison(
            report.patterns.top25, os.path.join(args.out_dir, "patterns.png")
        )
        plots.render_rule_probabilities(
            train_stats.rule_probs, payload_stats.rule_probs,
            os.path.join(args.out_dir, "rules.png"),
        )
        print(f"wrote stats.json, patterns.csv and figures to {args.out_dir}", file=sys.stderr)
    return 0


def cmd_eval(args):
    run_config = load_run_config(args.config) if args.config else {}
    config = build_pipeline_config(run_config, args)
    _fmt, text_column, label_column = _corpus_options(run_config, args)
    iid_docs = load_corpus(
        args.iid_csv, format="csv", text_column=text_column,
        label_column=label_column or "label",
    )
    ood_fmt = "csv" if args.ood_file.endswith(".csv") else "plain"
    ood_docs = load_corpus(args.ood_file, format=ood_fmt, text_column=text_column)

    thresholds = None
    if args.thresholds:
        thresholds = [float(t) for t in args.thresholds.split(",")]
    report = run_benchmark(
        iid_docs, ood_docs, config, thresholds=thresholds,
        split_fraction=args.split_fraction,
    )

    pair = f"{os.path.basename(args.iid_csv)}->{os.path.basename(args.ood_file)}"
    rows = [
        {
            "pair": pair,
            "backend": config.backend.kind,
            "model": config.model_kind,
            "threshold": r.threshold,
            "accuracy": r.accuracy,
            "train_s": round(report.train_seconds, 3),
            "infer_s": round(report.infer_seconds, 3),
        }
        for r in report.results
    ]
    if args.json:
        _emit(
            {
                "schema_version": SCHEMA_VERSION,
                "pair": pair,
                "best": rows[report.results.index(report.best)],
                "at_default": {
                    "threshold": report.at_default.threshold,
                    "accuracy": report.at_default.accuracy,
                },
                "results": rows,
            }
        )
    else:
        print(f"{pair}: backend={config.backend.kind} model={config.model_kind}")
        print(
            f"  best threshold {report.best.threshold:.6f}: scaled accuracy {report.best.accuracy:.4f}"
        )
        print(
            f"  default threshold {report.at_default.threshold}: scaled accuracy "
            f"{report.at_default.accuracy:.4f}"
        )
        print(
            f"  train {report.train_seconds:.2f} s, inference {report.infer_seconds:.2f} s"
        )

    if args.out_dir:
        os.makedirs(args.out_dir, exist_ok=True)
        csv_path = os.path.join(args.out_dir, "results.csv")
        with open(csv_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["pair", "backend", "model", "threshold", "accuracy", "train_s", "infer_s"])
            for row in rows:
                writer.writerow([row[k] for k in
                                 ("pair", "backend", "model", "threshold", "accuracy", "train_s", "infer_s")])
        with open(os.path.join(args.out_dir, "results.json"), "w", encoding="utf-8") as fh:
            json.dump({"schema_version": SCHEMA_VERSION, "pair": pair, "results": rows},
                      fh, indent=2, sort_keys=True)
        plots.render_threshold_sweep(
            report.results, config.threshold, os.path.join(args.out_dir, "threshold_sweep.png")
        )
        print(f"wrote results.csv, results.json and threshold_sweep.png to {args.out_dir}",
              file=sys.stderr)
    return 0


# --- argument parsing -------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(
        prog="driftdet",
        description="Detect and explain distribution drift of text payloads",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train and persist a drift pipeline")
    p_train.add_argument("corpus", help="training corpus (plain lines or CSV)")
    p_train.add_argument("out_dir", help="directory for the persisted model")
    p_train.add_argument("--config", help="TOML/JSON run configuration")
    p_train.add_argument("--backend", choices=["native-skipgram", "vector-file", "remote-sentence", "remote-token-avg"])
    p_train.add_argument("--model", choices=["gmm", "vae", "centroid"])
    p_train.add_argument("--dim", type=int)
    p_train.add_argument("--threshold", type=float)
    p_train.add_argument("--seed", type=int)
    p_train.add_argument("--endpoint")
    p_train.add_argument("--vector-file", dest="vector_file")
    p_train.add_argument("--format", choices=["plain", "csv"])
    p_train.add_argument("--text-column", dest="text_column")
    p_train.add_argument("--label-column", dest="label_column")
    p_train.add_argument("--json", action="store_true")
    p_train.set_defaults(func=cmd_train)

    p_score = sub.add_parser("score", help="score a payload against a trained model")
    p_score.add_argument("model_dir")
    p_score.add_argument("payload")
    p_score.add_argument("--format", choices=["plain", "csv"])
    p_score.add_argument("--text-column", dest="text_column")
    p_score.add_argument("--json", action="store_true")
    p_score.add_argument("--out-dir", dest="out_dir")
    p_score.set_defaults(func=cmd_score)

    p_explain = sub.add_parser("explain", help="per-word drift explanations for drifted payloads")
    p_explain.add_argument("model_dir")
    p_explain.add_argument("payload")
    p_explain.add_argument("--top-k", dest="top_k", type=_positive_int, default=5)
    p_explain.add_argument("--format", choices=["plain", "csv"])
    p_explain.add_argument("--text-column", dest="text_column")
    p_explain.add_argument("--json", action="store_true")
    p_explain.add_argument("--out-dir", dest="out_dir")
    p_explain.set_defaults(func=cmd_explain)

    p_stats = sub.add_parser("stats", help="dataset-level drift statistics from annotated corpora")
    p_stats.add_argument("train_conllu")
    p_stats.add_argument("payload_conllu")
    p_stats.add_argument("--chunker", help="CoNLL-2000-format file to train the phrase chunker")
    p_stats.add_argument("--new-pattern-threshold", dest="new_pattern_threshold",
                         type=float, default=0.01)
    p_stats.add_argument("--rule-train-max", dest="rule_train_max", type=float, default=0.01)
    p_stats.add_argument("--rule-payload-min", dest="rule_payload_min", type=float, default=0.05)
    p_stats.add_argument("--json", action="store_true")
    p_stats.add_argument("--out-dir", dest="out_dir")
    p_stats.set_defaults(func=cmd_stats)

    p_eval = sub.add_parser("eval", help="stratified benchmark of a pipeline configuration")
    p_eval.add_argument("iid_csv", help="labeled in-distribution CSV")
    p_eval.add_argument("ood_file", help="out-of-distribution corpus")
    p_eval.add_argument("--config", help="TOML/JSON run configuration")
    p_eval.add_argument("--backend", choices=["native-skipgram", "vector-file", "remote-sentence", "remote-token-avg"])
    p_eval.add_argument("--model", choices=["gmm", "vae", "centroid"])
    p_eval.add_argument("--dim", type=int)
    p_eval.add_argument("--threshold", type=float)
    p_eval.add_argument("--seed", type=int)
    p_eval.add_argument("--endpoint")
    p_eval.add_argument("--vector-file", dest="vector_file")
    p_eval.add_argument("--thresholds", help="comma-separated threshold sweep")
    p_eval.add_argument("--split-fraction", dest="split_fraction", type=float, default=0.8)
    p_eval.add_argument("--text-column", dest="text_column")
    p_eval.add_argument("--label-column", dest="label_column")
    p_eval.add_argument("--json", action="store_true")
    p_eval.add_argument("--out-dir", dest="out_dir")
    p_eval.set_defaults(func=cmd_eval)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DriftDetError, FileNotFoundError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
