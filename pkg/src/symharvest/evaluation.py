"""Multi-label evaluation reports and corpus analyses.

Per-label precision/recall/F1/support with macro and weighted averages,
label-distribution counts, and top-bigram extraction. Zero denominators
report 0.0 rather than raising: empty labels are a routine outcome on
small symptom datasets and the tables must still render.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Mapping, Sequence

from .annotation import LABEL_NAMES
from .normalize import PUNCT_TOKENS
from .store import DatasetRecord


@dataclass(frozen=True)
class LabelMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass
class EvalReport:
    labels: tuple[int, ...]
    per_label: dict[int, LabelMetrics]
    macro_avg: tuple[float, float, float]
    weighted_avg: tuple[float, float, float]
    total_support: int

    def as_rows(self) -> list[dict]:
        rows = [
            {
                "label": lab,
                "name": LABEL_NAMES.get(lab, str(lab)),
                "precision": m.precision,
                "recall": m.recall,
                "f1": m.f1,
                "support": m.support,
            }
            for lab, m in ((lab, self.per_label[lab]) for lab in self.labels)
        ]
        return rows

    def as_text(self) -> str:
        width = max(len(r["name"]) for r in self.as_rows())
        lines = [f"{'label':<{width + 6}}  prec   recall  f1      support"]
        for r in self.as_rows():
            lines.append(
                f"{r['label']:>2} {r['name']:<{width + 3}}"
                f"  {r['precision']:.2f}   {r['recall']:.2f}    {r['f1']:.2f}"
                f"    {r['support']}"
            )
        mp, mr, mf = self.macro_avg
        wp, wr, wf = self.weighted_avg
        lines.append(
            f"{'macro avg':<{width + 6}}  {mp:.2f}   {mr:.2f}    {mf:.2f}"
            f"    {self.total_support}"
        )
        lines.append(
            f"{'weighted avg':<{width + 6}}  {wp:.2f}   {wr:.2f}    {wf:.2f}"
            f"    {self.total_support}"
        )
        return "\n".join(lines)


def _safe_div(num: float, den: float) -> float:
    return num / den if den else 0.0


def classification_report(
    gold: Sequence[Iterable[int]],
    pred: Sequence[Iterable[int]],
    labels: Sequence[int],
) -> EvalReport:
    """Count TP/FP/FN per label by set membership."""
    if len(gold) != len(pred):
        raise ValueError(f"gold has {len(gold)} rows, pred has {len(pred)}")
    gold_sets = [frozenset(g) for g in gold]
    pred_sets = [frozenset(p) for p in pred]

    per_label: dict[int, LabelMetrics] = {}
    for lab in labels:
        tp = sum(1 for g, p in zip(gold_sets, pred_sets) if lab in g and lab in p)
        fp = sum(1 for g, p in zip(gold_sets, pred_sets) if lab not in g and lab in p)
        fn = sum(1 for g, p in zip(gold_sets, pred_sets) if lab in g and lab not in p)
        precision = _safe_div(tp, tp + fp)
        recall = _safe_div(tp, tp + fn)
        f1 = _safe_div(2 * precision * recall, precision + recall)
        per_label[lab] = LabelMetrics(precision, recall, f1, tp + fn)

    n_labels = len(labels)
    macro = tuple(
        _safe_div(sum(getattr(per_label[lab], m) for lab in labels), n_labels)
        for m in ("precision", "recall", "f1")
    )
    total = sum(per_label[lab].support for lab in labels)
    weighted = tuple(
        _safe_div(
            sum(getattr(per_label[lab], m) * per_label[lab].support for lab in labels),
            total,
        )
        for m in ("precision", "recall", "f1")
    )
    return EvalReport(
        labels=tuple(labels),
        per_label=per_label,
        macro_avg=macro,
        weighted_avg=weighted,
        total_support=total,
    )


def report_metrics_dict(report: EvalReport) -> dict[int, dict[str, float]]:
    """Plain-dict view used by the rule miner's weak/strong partition."""
    return {
        lab: {"precision": m.precision, "recall": m.recall, "f1": m.f1}
        for lab, m in report.per_label.items()
    }


def label_distribution(
    dataset: Sequence[DatasetRecord], labels: Sequence[int] | None = None
) -> dict[int, dict[str, float]]:
    """Counts and post-ratios per label; multi-label posts count once per label."""
    counts: Counter[int] = Counter()
    for post in dataset:
        for lab in post.labels or ():
            counts[lab] += 1
    total = len(dataset)
    if labels is None:
        labels = sorted(counts)
    return {
        lab: {"count": counts.get(lab, 0), "ratio": _safe_div(counts.get(lab, 0), total)}
        for lab in labels
    }


def total_variation_distance(
    dist_a: Mapping[int, Mapping[str, float]], dist_b: Mapping[int, Mapping[str, float]]
) -> float:
    """TV distance between two label distributions (normalized over counts)."""
    keys = set(dist_a) | set(dist_b)
    sum_a = sum(dist_a.get(k, {}).get("count", 0) for k in keys)
    sum_b = sum(dist_b.get(k, {}).get("count", 0) for k in keys)
    return 0.5 * sum(
        abs(
            _safe_div(dist_a.get(k, {}).get("count", 0), sum_a)
            - _safe_div(dist_b.get(k, {}).get("count", 0), sum_b)
        )
        for k in keys
    )


def load_stopwords(path=None) -> frozenset[str]:
    if path is None:
        res = resources.files("symharvest.data") / "stopwords.txt"
        with resources.as_file(res) as p:
            text = p.read_text(encoding="utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    return frozenset(w.strip() for w in text.splitlines() if w.strip())


def top_bigrams(
    dataset: Sequence[DatasetRecord],
    label: int,
    k: int,
    stopwords: frozenset[str] | None = None,
) -> list[tuple[str, int]]:
    """Most frequent adjacent word pairs among posts carrying the label.

    Stopword and punctuation tokens are removed first, so pairs may span
    removed words; ties break lexicographically.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if stopwords is None:
        stopwords = load_stopwords()
    counts: Counter[str] = Counter()
    for post in dataset:
        if label not in (post.labels or ()):
            continue
        words = [
            t for t in post.tokens if t not in stopwords and t not in PUNCT_TOKENS
        ]
        for a, b in zip(words, words[1:]):
            counts[f"{a} {b}"] += 1
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return ranked[:k]
