"""Figure rendering for report outputs.

Every CLI report path can drop PNG figures next to its CSV/JSON output:
pattern probability comparisons, sentence-rule probability scatter,
threshold sweeps, score histograms, and per-word contribution charts.
"""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def render_pattern_comparison(top25, out_path):
    """Side-by-side bars of train vs payload probabilities for the top patterns."""
    patterns = [row["pattern"] for row in top25]
    train = [row["train_probability"] * 100 for row in top25]
    payload = [row["payload_probability"] * 100 for row in top25]
    pos = range(len(patterns))
    fig, ax = plt.subplots(figsize=(10, max(3, 0.35 * len(patterns) + 1)))
    ax.barh([p + 0.2 for p in pos], train, height=0.4, label="train")
    ax.barh([p - 0.2 for p in pos], payload, height=0.4, label="payload")
    ax.set_yticks(list(pos))
    ax.set_yticklabels(patterns, fontsize=7)
    ax.invert_yaxis()
    ax.set_xlabel("likelihood (%)")
    ax.set_title("Verb neighbourhood patterns")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path


def render_rule_probabilities(train_probs, payload_probs, out_path):
    """Scatter of per-rule probabilities, train vs payload."""
    ids = sorted(set(train_probs) | set(payload_probs))
    t = [train_probs.get(i, 0.0) for i in ids]
    p = [payload_probs.get(i, 0.0) for i in ids]
    fig, ax = plt.subplots(figsize=(5, 5))
    ax.scatter(t, p, s=8, alpha=0.5)
    lim = max(max(t, default=0.0), max(p, default=0.0), 0.01)
    ax.plot([0, lim], [0, lim], linewidth=0.8, color="gray")
    ax.set_xlabel("train probability")
    ax.set_ylabel("payload probability")
    ax.set_title("Sentence rule probabilities")
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path


def render_threshold_sweep(results, default_threshold, out_path):
    """Scaled accuracy as a function of the drift threshold."""
    thresholds = [r.threshold for r in results]
    accuracy = [r.accuracy for r in results]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(thresholds, accuracy, marker=".", markersize=3, linewidth=1)
    ax.axvline(default_threshold, color="gray", linestyle="--", linewidth=0.8, label="default threshold")
    ax.set_xlabel("threshold")
    ax.set_ylabel("scaled accuracy")
    ax.set_ylim(0.0, 1.05)
    ax.set_title("Threshold sweep")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path


def render_score_histogram(scores, threshold, out_path):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(scores, bins=40, range=(0.0, 1.0), color="steelblue")
    ax.axvline(threshold, color="crimson", linestyle="--", linewidth=1, label="threshold")
    ax.set_xlabel("similarity score")
    ax.set_ylabel("documents")
    ax.set_title("Payload similarity scores")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path


def render_contributions(explanation, top_k, out_path):
    """Bar chart of the highest word contributions for one document."""
    rows = explanation.contributions[:max(top_k, 1)]
    tokens = [f"{c.token}@{c.position}" for c in rows]
    values = [c.h for c in rows]
    fig, ax = plt.subplots(figsize=(6, max(2.5, 0.35 * len(rows) + 1)))
    colors = ["crimson" if v > 0 else "steelblue" for v in values]
    ax.barh(range(len(rows)), values, color=colors)
    ax.set_yticks(range(len(rows)))
    ax.set_yticklabels(tokens, fontsize=8)
    ax.invert_yaxis()
    ax.set_xlabel("score shift when masked")
    ax.set_title(f"Word contributions: {explanation.doc_id}")
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path
