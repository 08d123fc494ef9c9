"""Label taxonomy, consensus aggregation and inter-annotator agreement.

The taxonomy has 13 labels: ten depression symptoms plus three
non-symptom categories (evidence-of-depression, no-evidence, gibberish).
Consensus over a panel of annotators uses per-label majority voting with
a clinician-preference fallback.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Iterable, Mapping, Sequence

ANHEDONIA = 1
LOW_MOOD = 2
SLEEP_CHANGE = 3
FATIGUE = 4
WEIGHT_CHANGE = 5
WORTHLESSNESS = 6
INDECISIVENESS = 7
AGITATION = 8
RETARDATION = 9
SUICIDAL_THOUGHTS = 10
ED = 11
NOED = 12
GIBBERISH = 13

LABEL_NAMES: dict[int, str] = {
    ANHEDONIA: "Anhedonia",
    LOW_MOOD: "Low mood",
    SLEEP_CHANGE: "Change in sleep pattern",
    FATIGUE: "Fatigue",
    WEIGHT_CHANGE: "Weight change",
    WORTHLESSNESS: "Feelings of worthlessness",
    INDECISIVENESS: "Indecisiveness",
    AGITATION: "Agitation",
    RETARDATION: "Retardation",
    SUICIDAL_THOUGHTS: "Suicidal thoughts",
    ED: "ED",
    NOED: "NoED",
    GIBBERISH: "Gibberish",
}

SYMPTOM_LABELS: tuple[int, ...] = tuple(range(1, 11))
ALL_LABELS: tuple[int, ...] = tuple(range(1, 14))
# Labels that must appear alone in a label set.
SINGLETON_LABELS: frozenset[int] = frozenset({NOED, GIBBERISH})


class LabelSetError(ValueError):
    """A label set violates a taxonomy rule; `rule` names the violated rule."""

    def __init__(self, rule: str, message: str):
        super().__init__(message)
        self.rule = rule


def validate_label_set(labels: Iterable[int]) -> frozenset[int]:
    """Check taxonomy rules and return the set as a frozenset.

    Rules: every label is in 1..13, and NoED or Gibberish can only appear
    as a singleton. Symptoms and ED may co-occur freely.
    """
    out = frozenset(int(x) for x in labels)
    for lab in out:
        if lab not in LABEL_NAMES:
            raise LabelSetError("unknown-label", f"unknown label id {lab}")
    for singleton in sorted(out & SINGLETON_LABELS):
        if len(out) > 1:
            name = LABEL_NAMES[singleton].lower()
            raise LabelSetError(
                f"{name}-singleton",
                f"label {singleton} ({LABEL_NAMES[singleton]}) must be the only label",
            )
    return out


@dataclass(frozen=True)
class AnnotationRecord:
    """One annotator's label set for one post in one assignment round."""

    annotator_id: str
    post_id: str
    labels: frozenset[int]
    round: int = 1
    is_clinician: bool = False
    clinician_rank: int = 0
    timestamp: str = ""

    def key(self) -> tuple[str, str, int]:
        return (self.annotator_id, self.post_id, self.round)


def make_record(
    annotator_id: str,
    post_id: str,
    labels: Iterable[int],
    round: int = 1,
    is_clinician: bool = False,
    clinician_rank: int = 0,
    timestamp: str | None = None,
) -> AnnotationRecord:
    if timestamp is None:
        timestamp = datetime.now(timezone.utc).isoformat()
    return AnnotationRecord(
        annotator_id=annotator_id,
        post_id=post_id,
        labels=validate_label_set(labels),
        round=int(round),
        is_clinician=bool(is_clinician),
        clinician_rank=int(clinician_rank),
        timestamp=timestamp,
    )


def record_to_dict(rec: AnnotationRecord) -> dict:
    return {
        "annotator_id": rec.annotator_id,
        "post_id": rec.post_id,
        "labels": sorted(rec.labels),
        "round": rec.round,
        "is_clinician": rec.is_clinician,
        "clinician_rank": rec.clinician_rank,
        "timestamp": rec.timestamp,
    }


def record_from_dict(d: Mapping) -> AnnotationRecord:
    return make_record(
        annotator_id=str(d["annotator_id"]),
        post_id=str(d["post_id"]),
        labels=d.get("labels", []),
        round=int(d.get("round", 1)),
        is_clinician=bool(d.get("is_clinician", False)),
        clinician_rank=int(d.get("clinician_rank", 0)),
        timestamp=str(d.get("timestamp", "")),
    )


def read_annotations(path) -> list[AnnotationRecord]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(record_from_dict(json.loads(line)))
    return records


def write_annotations(path, records: Iterable[AnnotationRecord]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(record_to_dict(rec)) + "\n")


class NoAnnotationsError(ValueError):
    pass


def _repair_singletons(result: set[int], counts: Mapping[int, int]) -> frozenset[int]:
    # A singleton label that wins majority alongside other labels cannot
    # stand with them; keep whichever side has the higher vote count, with
    # ties going to the non-singleton side.
    offenders = sorted(result & SINGLETON_LABELS)
    if not offenders or len(result) == 1:
        return frozenset(result)
    others = sorted(result - SINGLETON_LABELS)
    best_offender = max(offenders, key=lambda lab: (counts[lab], -lab))
    if not others:
        return frozenset({best_offender})
    best_other = max(counts[lab] for lab in others)
    if counts[best_offender] > best_other:
        return frozenset({best_offender})
    return frozenset(others)


def mvcp_aggregate(
    records: Sequence[AnnotationRecord],
    n_annotators: int | None = None,
) -> frozenset[int] | None:
    """Consensus label set for one post: majority voting with clinician preference.

    A label wins if strictly more than half the panel chose it. With no
    majority for any label, the highest-priority clinician's full label
    set is used; with no clinician either, returns None (unlabelled).
    Only round-1 records enter the consensus.
    """
    rounds1 = [r for r in records if r.round == 1]
    if not rounds1:
        raise NoAnnotationsError("no round-1 annotations for post")
    post_ids = {r.post_id for r in rounds1}
    if len(post_ids) != 1:
        raise ValueError(f"records span multiple posts: {sorted(post_ids)}")
    if n_annotators is None:
        n_annotators = len({r.annotator_id for r in rounds1})

    counts: dict[int, int] = {}
    for rec in rounds1:
        for lab in rec.labels:
            counts[lab] = counts.get(lab, 0) + 1
    majority = {lab for lab, c in counts.items() if c * 2 > n_annotators}
    if majority:
        return _repair_singletons(majority, counts)

    clinicians = [r for r in rounds1 if r.is_clinician]
    if clinicians:
        best = min(clinicians, key=lambda r: (r.clinician_rank, r.annotator_id))
        return best.labels
    return None


def cohen_kappa_binary(a: Sequence, b: Sequence) -> float:
    """Cohen's kappa for two equal-length binary presence lists.

    When expected agreement is 1 (both raters constant), returns 1.0 for
    identical lists and 0.0 otherwise.
    """
    if len(a) != len(b):
        raise ValueError(f"length mismatch: {len(a)} vs {len(b)}")
    if not a:
        raise ValueError("empty presence lists")
    n = len(a)
    xs = [1 if x else 0 for x in a]
    ys = [1 if y else 0 for y in b]
    agree = sum(1 for x, y in zip(xs, ys) if x == y)
    p_o = agree / n
    a1, b1 = sum(xs), sum(ys)
    p_e = (a1 * b1 + (n - a1) * (n - b1)) / (n * n)
    if p_e == 1.0:
        return 1.0 if xs == ys else 0.0
    return (p_o - p_e) / (1.0 - p_e)


def _presence(labels_by_post: Mapping[str, frozenset[int]], posts: Sequence[str], label: int) -> list[int]:
    return [1 if label in labels_by_post[p] else 0 for p in posts]


def _pair_kappa(
    x: Mapping[str, frozenset[int]],
    y: Mapping[str, frozenset[int]],
    label: int,
) -> float | None:
    shared = sorted(set(x) & set(y))
    if not shared:
        return None
    va = _presence(x, shared, label)
    vb = _presence(y, shared, label)
    # A label neither party ever used on the shared posts is not assessable.
    if not any(va) and not any(vb):
        return None
    return cohen_kappa_binary(va, vb)


def _mean_std(values: Sequence[float]) -> tuple[float, float] | None:
    if not values:
        return None
    mean = sum(values) / len(values)
    var = sum((v - mean) ** 2 for v in values) / len(values)
    return (mean, math.sqrt(var))


@dataclass
class KappaCell:
    mean: float
    std: float
    n_pairs: int


@dataclass
class KappaReport:
    """Per-label kappa averages over annotator pairs, annotator-vs-consensus
    pairs, and the pooled collection of both."""

    labels: list[int]
    annotator_pairs: dict[int, KappaCell | None] = field(default_factory=dict)
    annotator_consensus: dict[int, KappaCell | None] = field(default_factory=dict)
    all_pairs: dict[int, KappaCell | None] = field(default_factory=dict)

    def to_rows(self) -> list[dict]:
        rows = []
        for lab in self.labels:
            row: dict = {"label": lab, "name": LABEL_NAMES[lab]}
            for col, cells in (
                ("annotators", self.annotator_pairs),
                ("annotators_vs_consensus", self.annotator_consensus),
                ("all", self.all_pairs),
            ):
                cell = cells.get(lab)
                if cell is None:
                    row[col] = None
                    row[col + "_std"] = None
                else:
                    row[col] = cell.mean
                    row[col + "_std"] = cell.std
            rows.append(row)
        return rows


def kappa_report(
    records: Sequence[AnnotationRecord],
    mvcp_labels: Mapping[str, frozenset[int] | None],
    labels: Sequence[int] = ALL_LABELS,
) -> KappaReport:
    """Pairwise kappa analytics per label.

    `mvcp_labels` maps post id to the consensus label set (None entries are
    treated as posts the consensus did not label). Pair kappas are computed
    over the posts both parties annotated.
    """
    by_annotator: dict[str, dict[str, frozenset[int]]] = {}
    for rec in records:
        if rec.round != 1:
            continue
        by_annotator.setdefault(rec.annotator_id, {})[rec.post_id] = rec.labels
    consensus = {p: labs for p, labs in mvcp_labels.items() if labs is not None}

    annotators = sorted(by_annotator)
    report = KappaReport(labels=list(labels))
    for lab in labels:
        aa: list[float] = []
        for i in range(len(annotators)):
            for j in range(i + 1, len(annotators)):
                k = _pair_kappa(by_annotator[annotators[i]], by_annotator[annotators[j]], lab)
                if k is not None:
                    aa.append(k)
        am: list[float] = []
        for ann in annotators:
            k = _pair_kappa(by_annotator[ann], consensus, lab)
            if k is not None:
                am.append(k)
        pooled = aa + am
        for col, vals in (("annotator_pairs", aa), ("annotator_consensus", am), ("all_pairs", pooled)):
            ms = _mean_std(vals)
            cell = None if ms is None else KappaCell(ms[0], ms[1], len(vals))
            getattr(report, col)[lab] = cell
    return report


class NoRetestDataError(ValueError):
    pass


def test_retest(records: Sequence[AnnotationRecord]) -> float:
    """Fraction of repeat assignments re-annotated identically by the same
    annotator, against their round-1 label set for the same post."""
    first: dict[tuple[str, str], frozenset[int]] = {}
    for rec in records:
        if rec.round == 1:
            first[(rec.annotator_id, rec.post_id)] = rec.labels
    total = 0
    matched = 0
    for rec in records:
        if rec.round <= 1:
            continue
        baseline = first.get((rec.annotator_id, rec.post_id))
        if baseline is None:
            continue
        total += 1
        if rec.labels == baseline:
            matched += 1
    if total == 0:
        raise NoRetestDataError("no repeat assignments in the record set")
    return matched / total


# The name collides with pytest's collection convention when imported into
# a test module; this attribute opts it out.
test_retest.__test__ = False
