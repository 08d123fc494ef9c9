"""Dataset persistence and deterministic dataset algebra.

Datasets are JSONL files of post records with optional label sets and a
provenance string. Identity is the record id, not the text: duplicate
texts are legitimate (reposts, repeat assignments), duplicate ids are
resolved by keeping the first occurrence and conflicting labels are a
hard error.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

from .annotation import validate_label_set


@dataclass(frozen=True)
class DatasetRecord:
    id: str
    text: str
    tokens: tuple[str, ...] = ()
    labels: frozenset[int] | None = None
    provenance: str = ""
    source: str = ""

    def with_labels(self, labels: Iterable[int] | None) -> "DatasetRecord":
        new = None if labels is None else validate_label_set(labels)
        return replace(self, labels=new)


class DatasetConflictError(ValueError):
    """Same id appears with different label sets."""

    def __init__(self, ids: Sequence[str]):
        super().__init__(f"conflicting labels for ids: {sorted(ids)}")
        self.ids = sorted(ids)


def record_to_dict(rec: DatasetRecord) -> dict:
    d = {
        "id": rec.id,
        "text": rec.text,
        "tokens": list(rec.tokens),
        "provenance": rec.provenance,
        "source": rec.source,
    }
    if rec.labels is not None:
        d["labels"] = sorted(rec.labels)
    return d


def record_from_dict(d: Mapping) -> DatasetRecord:
    labels = d.get("labels")
    return DatasetRecord(
        id=str(d["id"]),
        text=d.get("text", ""),
        tokens=tuple(d.get("tokens", ())),
        labels=None if labels is None else validate_label_set(labels),
        provenance=d.get("provenance", ""),
        source=d.get("source", ""),
    )


def read_dataset(path) -> list[DatasetRecord]:
    records = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            rec = record_from_dict(json.loads(line))
            if rec.id in seen:
                raise ValueError(f"{path}:{lineno}: duplicate id {rec.id!r}")
            seen.add(rec.id)
            records.append(rec)
    return records


def write_dataset(path, records: Sequence[DatasetRecord]) -> None:
    """Atomic write: temp file in the target directory, then rename."""
    ids = [r.id for r in records]
    if len(set(ids)) != len(ids):
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        raise ValueError(f"duplicate ids in dataset: {dupes}")
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            for rec in records:
                fh.write(json.dumps(record_to_dict(rec)) + "\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def union(a: Sequence[DatasetRecord], b: Sequence[DatasetRecord]) -> list[DatasetRecord]:
    """Concatenate keeping the first record per id.

    A duplicate id must carry the same label set on both sides; any
    disagreement (including labelled vs unlabelled) is a conflict.
    """
    out: list[DatasetRecord] = []
    by_id: dict[str, DatasetRecord] = {}
    conflicts: list[str] = []
    for rec in list(a) + list(b):
        first = by_id.get(rec.id)
        if first is None:
            by_id[rec.id] = rec
            out.append(rec)
        elif first.labels != rec.labels:
            conflicts.append(rec.id)
    if conflicts:
        raise DatasetConflictError(conflicts)
    return out


def subtract(a: Sequence[DatasetRecord], b: Sequence[DatasetRecord]) -> list[DatasetRecord]:
    drop = {r.id for r in b}
    return [r for r in a if r.id not in drop]


def sample_controls(
    pool: Sequence[DatasetRecord], n: int, seed: int
) -> list[DatasetRecord]:
    """Draw n records uniformly without replacement, seeded."""
    if n > len(pool):
        raise ValueError(f"asked for {n} controls from a pool of {len(pool)}")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(pool))[:n]
    return [pool[i] for i in order]
