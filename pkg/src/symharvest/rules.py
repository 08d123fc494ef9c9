"""Single-antecedent label association rules (strong -> weak).

Mines pairwise co-occurrence rules from a labelled dataset and applies
them at prediction time: if a strong label is predicted, its weak
consequents are added. Only 1 -> 1 rules exist here; the full frequent-
itemset lattice is unnecessary for label pairs.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .store import DatasetRecord


@dataclass(frozen=True)
class LabelRule:
    antecedent: int
    consequent: int
    support: float | None = None
    confidence: float | None = None

    def __post_init__(self):
        if self.antecedent == self.consequent:
            raise ValueError("rule antecedent equals consequent")
        if self.support is not None and not 0.0 < self.support <= 1.0:
            raise ValueError(f"support out of range: {self.support}")
        if self.confidence is not None and not 0.0 < self.confidence <= 1.0:
            raise ValueError(f"confidence out of range: {self.confidence}")


def mine_rules(
    dataset: Sequence[DatasetRecord],
    weak: Iterable[int],
    strong: Iterable[int],
) -> list[LabelRule]:
    """Emit s -> w for every strong/weak pair that co-occurs at least once.

    support = |posts with both| / |posts|, confidence = |both| / |posts
    with s|. Sorted by (antecedent, consequent).
    """
    weak = frozenset(weak)
    strong = frozenset(strong)
    if weak & strong:
        raise ValueError(f"weak and strong overlap: {sorted(weak & strong)}")
    if not dataset:
        raise ValueError("empty dataset")

    n = len(dataset)
    label_sets = [post.labels or frozenset() for post in dataset]
    rules = []
    for s in sorted(strong):
        n_s = sum(1 for labs in label_sets if s in labs)
        if n_s == 0:
            continue
        for w in sorted(weak):
            n_both = sum(1 for labs in label_sets if s in labs and w in labs)
            if n_both:
                rules.append(
                    LabelRule(s, w, support=n_both / n, confidence=n_both / n_s)
                )
    return rules


def apply_rules(
    pred: Iterable[int], rules: Sequence[LabelRule], closure: bool = False
) -> frozenset[int]:
    """Augment a predicted label set with rule consequents.

    Single pass by default: consequents fired by the original prediction
    only. closure=True iterates to a fixpoint instead.
    """
    result = frozenset(pred)
    while True:
        added = frozenset(r.consequent for r in rules if r.antecedent in result)
        merged = result | added
        if merged == result or not closure:
            return merged
        result = merged


def weak_strong_from_metrics(
    per_label: Mapping[int, Mapping[str, float]],
    weak_recall_floor: float = 0.1,
    strong_recall_floor: float = 0.5,
) -> tuple[frozenset[int], frozenset[int]]:
    """Partition labels by train metrics: weak = zero F1 or recall below
    the weak floor; strong = recall at or above the strong floor."""
    weak = frozenset(
        lab
        for lab, m in per_label.items()
        if m["f1"] == 0.0 or m["recall"] < weak_recall_floor
    )
    strong = frozenset(
        lab
        for lab, m in per_label.items()
        if lab not in weak and m["recall"] >= strong_recall_floor
    )
    return weak, strong


def save_rules(path, rules: Sequence[LabelRule]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["antecedent", "consequent", "support", "confidence"])
        for r in rules:
            writer.writerow([
                r.antecedent,
                r.consequent,
                "" if r.support is None else repr(r.support),
                "" if r.confidence is None else repr(r.confidence),
            ])


def load_rules(path) -> list[LabelRule]:
    rules = []
    with open(path, encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            rules.append(
                LabelRule(
                    antecedent=int(row["antecedent"]),
                    consequent=int(row["consequent"]),
                    support=float(row["support"]) if row.get("support") else None,
                    confidence=float(row["confidence"]) if row.get("confidence") else None,
                )
            )
    return rules
