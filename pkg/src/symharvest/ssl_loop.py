"""Self-training pipeline: seed split, pool harvesting, retraining.

The orchestrator grows a labelled training set out of a small clinician
seed plus large unlabelled pools. Every post id is tracked in a ledger of
named buckets so dataset composition can be audited after the fact, and a
hard no-leakage rule keeps held-out test posts out of every training set.

Stages, in order: partition the seed by label kind; split the symptom
posts into train/test; fit a first symptom model; fit a binary
depression-post detector on relabelled positives plus an equal number of
sampled controls; sweep the unlabelled pool through the detector and the
symptom model, keeping confidently labelled posts; widen those labels
with zero-shot predictions; retrain; sweep the remaining sources with
the stronger model; train the final model on everything gathered. Each
model is scored on the held-out test split and the run stops with a
recorded reason.
"""

from __future__ import annotations

import json
import math
import os
import warnings
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .annotation import ED, GIBBERISH, NOED, SYMPTOM_LABELS
from .classifier import (
    DEPRESSION,
    DEPRESSION_SPACE,
    SYMPTOM_SPACE,
    Model,
    dpd_predict,
    make_zsl_voter,
    predict_batch,
    project_labels,
    save_model,
    train,
)
from .config import RunConfig, make_provider
from .embeddings import build_descriptor_embeddings, load_descriptor_corpus
from .evaluation import EvalReport, classification_report, report_metrics_dict
from .rules import apply_rules, mine_rules, weak_strong_from_metrics
from .store import DatasetRecord, union, sample_controls, write_dataset
from .zsl import UnembeddableError, zsl_label

STOP_POOL_EXHAUSTED = "pool-exhausted"
STOP_NO_GAIN = "no-gain"

# Ledger bucket names. The first five partition the seed; the harvest
# buckets partition pool posts that made it into training; "final" lists
# the composed final training set.
BUCKETS = (
    "seed-train",
    "seed-test",
    "ed-pool",
    "noed-pool",
    "gibberish",
    "harvested-confident",
    "harvested-less-confident",
    "zsl-union",
    "final",
)

_TRAINING_BUCKETS = ("seed-train", "zsl-union", "harvested-less-confident")


class LedgerError(ValueError):
    """A dataset ledger invariant does not hold."""


class LeakageError(LedgerError):
    """A held-out test post id appears in a training bucket."""


@dataclass
class DatasetLedger:
    """Id-level bookkeeping for every dataset the pipeline touches."""

    buckets: dict[str, tuple[str, ...]] = field(default_factory=dict)
    pools: dict[str, tuple[str, ...]] = field(default_factory=dict)

    def declare_pool(self, name: str, records: Iterable) -> None:
        self.pools[name] = tuple(_ids(records))

    def record(self, bucket: str, records: Iterable) -> None:
        if bucket not in BUCKETS:
            raise LedgerError(f"unknown ledger bucket {bucket!r}")
        ids = tuple(_ids(records))
        if len(set(ids)) != len(ids):
            raise LedgerError(f"duplicate ids recorded in bucket {bucket!r}")
        self.buckets[bucket] = self.buckets.get(bucket, ()) + ids

    def ids(self, bucket: str) -> frozenset[str]:
        return frozenset(self.buckets.get(bucket, ()))

    def counts(self) -> dict[str, int]:
        return {name: len(ids) for name, ids in self.buckets.items()}

    def check(self) -> None:
        """Raise if any recorded bucket breaks an invariant.

        Invariants: training buckets are pairwise disjoint; no training
        bucket (nor the final set) touches seed-test; harvested posts
        all come from declared pools; the final set is exactly the
        disjoint union of seed-train, the zero-shot-widened harvest, and
        the less-confident harvest.
        """
        test = self.ids("seed-test")
        if self.ids("seed-train") & test:
            raise LeakageError("seed-train and seed-test share ids")
        for name in ("harvested-confident", *_TRAINING_BUCKETS[1:], "final"):
            overlap = self.ids(name) & test
            if overlap:
                raise LeakageError(
                    f"seed-test posts leaked into {name!r}: {sorted(overlap)[:5]}"
                )
        for a_i in range(len(_TRAINING_BUCKETS)):
            for b_i in range(a_i + 1, len(_TRAINING_BUCKETS)):
                a, b = _TRAINING_BUCKETS[a_i], _TRAINING_BUCKETS[b_i]
                if self.ids(a) & self.ids(b):
                    raise LedgerError(f"buckets {a!r} and {b!r} overlap")
        if self.pools:
            declared = frozenset().union(*self.pools.values())
            declared |= self.ids("ed-pool")  # swept in the second harvest
            for name in ("harvested-confident", "harvested-less-confident"):
                stray = self.ids(name) - declared
                if stray:
                    raise LedgerError(
                        f"{name!r} contains ids from no declared pool: "
                        f"{sorted(stray)[:5]}"
                    )
        if self.ids("zsl-union") - self.ids("harvested-confident"):
            raise LedgerError("zsl-union contains posts never harvested")
        if "final" in self.buckets:
            parts = [self.buckets.get(n, ()) for n in _TRAINING_BUCKETS]
            if sorted(self.buckets["final"]) != sorted(sum(parts, ())):
                raise LedgerError(
                    "final set is not the union of seed-train, zsl-union "
                    "and harvested-less-confident"
                )

    def to_dict(self) -> dict:
        return {
            "buckets": {k: list(v) for k, v in self.buckets.items()},
            "pools": {k: list(v) for k, v in self.pools.items()},
            "counts": self.counts(),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "DatasetLedger":
        return cls(
            buckets={k: tuple(v) for k, v in d.get("buckets", {}).items()},
            pools={k: tuple(v) for k, v in d.get("pools", {}).items()},
        )


def _ids(records: Iterable) -> list[str]:
    return [r if isinstance(r, str) else r.id for r in records]


class MetricPoint(NamedTuple):
    iteration: int
    macro_f1: float
    weighted_f1: float
    stage: str = ""


@dataclass
class SslState:
    iteration: int = 0
    current_model: Model | None = None
    metric_history: list[MetricPoint] = field(default_factory=list)
    ledger: DatasetLedger = field(default_factory=DatasetLedger)
    stop_reason: str | None = None
    models: dict[str, Model] = field(default_factory=dict)
    reports: dict[str, EvalReport] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "iteration": self.iteration,
            "stop_reason": self.stop_reason,
            "metric_history": [p._asdict() for p in self.metric_history],
            "ledger": self.ledger.to_dict(),
            "stages": list(self.models),
            "reports": {name: r.as_rows() for name, r in self.reports.items()},
        }


@dataclass
class FilterResult:
    original: list[DatasetRecord]
    ed_pool: list[DatasetRecord]
    noed_pool: list[DatasetRecord]
    gibberish: list[DatasetRecord]
    unlabelled: int


def filter_seed(records: Sequence[DatasetRecord]) -> FilterResult:
    """Partition seed posts by label kind.

    Posts with at least one symptom label go to the symptom set even if
    they also carry the depression label; pure depression posts, control
    posts and gibberish get their own pools. Unlabelled posts are
    excluded and only counted.
    """
    out = FilterResult([], [], [], [], 0)
    symptoms = frozenset(SYMPTOM_LABELS)
    for rec in records:
        if not rec.labels:
            out.unlabelled += 1
        elif rec.labels & symptoms:
            out.original.append(rec)
        elif ED in rec.labels:
            out.ed_pool.append(rec)
        elif NOED in rec.labels:
            out.noed_pool.append(rec)
        elif GIBBERISH in rec.labels:
            out.gibberish.append(rec)
    return out


def split_seed(
    records: Sequence[DatasetRecord], train_frac: float = 0.7, seed: int = 42
) -> tuple[list[DatasetRecord], list[DatasetRecord]]:
    """Stratified train/test split with exact sizes.

    |train| = floor(train_frac * N), scarcest labels placed first so
    every label keeps close to the global ratio on both sides. Labels
    carried by fewer than two posts cannot appear on both sides; those
    posts are forced into train with a warning. Deterministic for a
    given seed.
    """
    if not 0.0 < train_frac < 1.0:
        raise ValueError("train_frac must lie strictly between 0 and 1")
    n = len(records)
    cap_train = math.floor(train_frac * n)
    cap_test = n - cap_train
    rng = np.random.default_rng(seed)
    posts = [records[i] for i in rng.permutation(n)]

    label_count: Counter[int] = Counter()
    for p in posts:
        label_count.update(p.labels or ())
    rare = {lab for lab, c in label_count.items() if c < 2}
    for lab in sorted(rare):
        warnings.warn(
            f"label {lab} appears on fewer than 2 posts; forcing into train",
            stacklevel=2,
        )

    side: dict[str, str] = {}
    got_train: Counter[int] = Counter()
    got_test: Counter[int] = Counter()
    n_train = n_test = 0

    def assign(post: DatasetRecord, want_train: bool) -> None:
        nonlocal n_train, n_test
        if want_train and n_train < cap_train or n_test >= cap_test:
            side[post.id] = "train"
            n_train += 1
            got_train.update(post.labels or ())
        else:
            side[post.id] = "test"
            n_test += 1
            got_test.update(post.labels or ())

    for post in posts:
        if post.labels and post.labels & rare and post.id not in side:
            assign(post, True)

    # Scarcest label first; within a label, the side that is furthest
    # behind its per-label quota takes the next post.
    for lab in sorted(label_count, key=lambda l: (label_count[l], l)):
        want = train_frac * label_count[lab]
        for post in posts:
            if post.id in side or lab not in (post.labels or ()):
                continue
            deficit_train = want - got_train[lab]
            deficit_test = (label_count[lab] - want) - got_test[lab]
            assign(post, deficit_train >= deficit_test)

    for post in posts:  # posts without labels, if any slipped through
        if post.id not in side:
            assign(post, n_train < cap_train)

    train_set = [r for r in records if side[r.id] == "train"]
    test_set = [r for r in records if side[r.id] == "test"]
    return train_set, test_set


@dataclass
class HarvestResult:
    confident: list[DatasetRecord]
    less_confident: list[DatasetRecord]
    rejected: list[DatasetRecord]


def harvest(
    model: Model,
    ensemble: Sequence[Model],
    pool: Sequence[DatasetRecord],
    provider,
    extra_voters: Sequence = (),
    max_seq_len: int = 30,
) -> HarvestResult:
    """Sweep a pool: detector gate first, then symptom labelling.

    Posts the depression-post ensemble rejects are dropped. Accepted
    posts the symptom model can label (>= 1 label at threshold) come back
    labelled; the rest stay unlabelled as the less-confident remainder.
    Every accepted post lands in exactly one of the two outputs.
    """
    result = HarvestResult([], [], [])
    if not pool:
        return result
    X = _embed_records(pool, provider, max_seq_len)
    positives, pos_rows = [], []
    for i, rec in enumerate(pool):
        if dpd_predict(ensemble, X[i], extra_voters) == DEPRESSION:
            positives.append(rec)
            pos_rows.append(i)
        else:
            result.rejected.append(rec)
    if not positives:
        return result
    labels, _ = predict_batch(model, X[pos_rows])
    for rec, labs in zip(positives, labels):
        if labs:
            result.confident.append(
                replace(rec, labels=labs, provenance="harvested-confident")
            )
        else:
            result.less_confident.append(
                replace(rec, labels=None, provenance="harvested-less-confident")
            )
    return result


def zsl_predictions(
    records: Sequence[DatasetRecord],
    provider,
    descriptors: Mapping[int, np.ndarray],
    threshold: float = 1.0,
    k: int = 3,
    max_seq_len: int = 30,
) -> dict[str, frozenset[int]]:
    """Zero-shot label sets per post id; unembeddable posts get empty sets."""
    out: dict[str, frozenset[int]] = {}
    if not records:
        return out
    X = _embed_records(records, provider, max_seq_len)
    for rec, v in zip(records, X):
        try:
            scored = zsl_label(v, descriptors, threshold=threshold, k=k)
        except UnembeddableError:
            scored = []
        out[rec.id] = frozenset(s.label for s in scored)
    return out


def zsl_union(
    pool: Sequence[DatasetRecord],
    model_preds: Mapping[str, Iterable[int]],
    zsl_preds: Mapping[str, Iterable[int]],
    provenance: str = "zsl-union",
) -> list[DatasetRecord]:
    """Per post, union of model and zero-shot labels; empty unions drop out."""
    out = []
    for rec in pool:
        labels = frozenset(model_preds.get(rec.id, ())) | frozenset(
            zsl_preds.get(rec.id, ())
        )
        if labels:
            out.append(replace(rec, labels=labels, provenance=provenance))
    return out


def stopping_check(
    state: SslState, pool_remaining: int, epsilon: float = 0.01
) -> str | None:
    """Why the loop should stop, or None to continue.

    Pool exhaustion wins over the gain test. The gain test needs two
    completed iterations and stops when the latest macro-F1 improvement
    falls below epsilon.
    """
    if not state.metric_history:
        raise ValueError("stopping_check needs at least one completed iteration")
    if pool_remaining == 0:
        return STOP_POOL_EXHAUSTED
    if len(state.metric_history) >= 2:
        gain = state.metric_history[-1].macro_f1 - state.metric_history[-2].macro_f1
        if gain < epsilon:
            return STOP_NO_GAIN
    return None


def _embed_records(posts, provider, max_seq_len: int) -> np.ndarray:
    truncated = [
        DatasetRecord(id=p.id, text=p.text, tokens=tuple(p.tokens)[:max_seq_len])
        for p in posts
    ]
    return np.asarray(provider.embed_posts(truncated), dtype=np.float64)


def _project_dataset(records: Sequence[DatasetRecord]) -> list[DatasetRecord]:
    """Restrict labels to the symptom space for symptom-model training."""
    return [
        replace(r, labels=project_labels(r.labels, SYMPTOM_SPACE)) for r in records
    ]


def _assert_no_leakage(train_ids: Iterable[str], test_ids: frozenset[str], stage: str):
    leaked = frozenset(train_ids) & test_ids
    if leaked:
        raise LeakageError(
            f"{stage}: seed-test posts in training data: {sorted(leaked)[:5]}"
        )


class _RunDir:
    """Per-stage persistence; a no-op when no directory is given."""

    def __init__(self, root):
        self.root = os.fspath(root) if root is not None else None
        if self.root:
            os.makedirs(os.path.join(self.root, "models"), exist_ok=True)
            os.makedirs(os.path.join(self.root, "datasets"), exist_ok=True)

    def save_state(self, state: SslState) -> None:
        if not self.root:
            return
        with open(os.path.join(self.root, "state.json"), "w", encoding="utf-8") as fh:
            json.dump(state.to_dict(), fh, indent=2)

    def save_model(self, name: str, model: Model) -> None:
        if self.root:
            save_model(os.path.join(self.root, "models", f"{name}.json"), model)

    def save_dataset(self, name: str, records) -> None:
        if self.root:
            write_dataset(
                os.path.join(self.root, "datasets", f"{name}.jsonl"), records
            )

    def save_abort_snapshot(self, state: SslState) -> None:
        if not self.root:
            return
        path = os.path.join(self.root, "ledger-abort.json")
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(state.ledger.to_dict(), fh, indent=2)


def run_ssl(
    cfg: RunConfig,
    seed_data: Sequence[DatasetRecord],
    pool: Sequence[DatasetRecord] = (),
    external_pool: Sequence[DatasetRecord] = (),
    out_dir=None,
    provider=None,
) -> SslState:
    """Run the full pipeline; returns the final state with a stop reason.

    On any mid-run failure the ledger so far is written to the run
    directory before the exception propagates.
    """
    state = SslState()
    rundir = _RunDir(out_dir)
    try:
        return _run_ssl(cfg, seed_data, pool, external_pool, rundir, provider, state)
    except BaseException:
        rundir.save_abort_snapshot(state)
        raise


def _run_ssl(cfg, seed_data, pool, external_pool, rundir, provider, state) -> SslState:
    provider = provider or make_provider(cfg)
    ledger = state.ledger
    ledger.declare_pool("pool", pool)
    ledger.declare_pool("external", external_pool)

    flt = filter_seed(seed_data)
    if flt.unlabelled:
        warnings.warn(f"excluded {flt.unlabelled} unlabelled seed posts")
    ledger.record("ed-pool", flt.ed_pool)
    ledger.record("noed-pool", flt.noed_pool)
    ledger.record("gibberish", flt.gibberish)

    seed_train, seed_test = split_seed(flt.original, cfg.train_frac, cfg.seed)
    seed_train = [replace(r, provenance="seed-train") for r in seed_train]
    seed_test = [replace(r, provenance="seed-test") for r in seed_test]
    ledger.record("seed-train", seed_train)
    ledger.record("seed-test", seed_test)
    test_ids = ledger.ids("seed-test")

    descriptors = build_descriptor_embeddings(load_descriptor_corpus(), provider)
    X_test = _embed_records(seed_test, provider, cfg.max_seq_len)
    gold = [project_labels(r.labels, SYMPTOM_SPACE) for r in seed_test]

    def evaluate(name: str, model: Model) -> None:
        state.iteration += 1
        pred, _ = predict_batch(model, X_test)
        report = classification_report(gold, pred, SYMPTOM_SPACE)
        state.reports[name] = report
        state.metric_history.append(
            MetricPoint(state.iteration, report.macro_avg[2], report.weighted_avg[2], name)
        )
        state.models[name] = model
        state.current_model = model
        rundir.save_model(name, model)
        rundir.save_state(state)

    # First symptom model, seed data only.
    train_1 = _project_dataset(seed_train)
    _assert_no_leakage(_ids(train_1), test_ids, "symptom model 1")
    model_1 = train(
        train_1, provider, cfg.dsd_train_config(), SYMPTOM_SPACE, cfg.predict_threshold
    )
    rundir.save_dataset("seed-train", seed_train)
    rundir.save_dataset("seed-test", seed_test)
    evaluate("dsd-1", model_1)

    final_train = seed_train

    def finalize(reason: str, final_model: Model, stage: str) -> SslState:
        state.stop_reason = reason
        state.current_model = final_model
        state.models["final"] = final_model
        if "final" not in ledger.buckets:
            ledger.record("final", final_train)
        _assert_no_leakage(ledger.ids("final"), test_ids, "final")
        ledger.check()
        if cfg.rules_enabled and stage in state.reports:
            _rule_report(state, stage, final_train, gold, X_test, cfg, provider)
        rundir.save_model("final", final_model)
        rundir.save_dataset("final", final_train)
        rundir.save_state(state)
        return state

    swept_later = len(external_pool) + len(flt.ed_pool)
    if stopping_check(state, len(pool) + swept_later, cfg.epsilon) == STOP_POOL_EXHAUSTED:
        return finalize(STOP_POOL_EXHAUSTED, model_1, "dsd-1")

    # Binary depression-post detector: clinician positives relabelled to
    # the single depression label, plus an equal count of sampled controls.
    positives = [replace(r, labels=frozenset({ED})) for r in seed_train + flt.ed_pool]
    n_controls = min(len(positives), len(flt.noed_pool))
    if n_controls < len(positives):
        warnings.warn(
            f"control pool smaller than positives ({len(flt.noed_pool)} < "
            f"{len(positives)}); detector training set is unbalanced"
        )
    controls = [
        replace(r, labels=frozenset())
        for r in sample_controls(flt.noed_pool, n_controls, cfg.seed)
    ]
    dpd_data = positives + controls
    _assert_no_leakage(_ids(dpd_data), test_ids, "depression-post detector")
    ensemble = [
        train(
            dpd_data,
            provider,
            cfg.dpd_train_config(cfg.seed + i),
            DEPRESSION_SPACE,
            cfg.predict_threshold,
        )
        for i in range(cfg.dpd_ensemble_size)
    ]
    zsl_voter = make_zsl_voter(descriptors, cfg.zsl_threshold, cfg.zsl_k)

    # Sweep the unlabelled pool, widen labels with zero-shot agreement.
    h1 = harvest(
        model_1, ensemble, pool, provider, (zsl_voter,), cfg.max_seq_len
    )
    ledger.record("harvested-confident", h1.confident)
    model_preds = {r.id: r.labels for r in h1.confident}
    zsl_preds = zsl_predictions(
        h1.confident, provider, descriptors, cfg.zsl_threshold, cfg.zsl_k,
        cfg.max_seq_len,
    )
    union_ds = zsl_union(h1.confident, model_preds, zsl_preds)
    ledger.record("zsl-union", union_ds)
    rundir.save_dataset("zsl-union", union_ds)

    model_2 = model_1
    if union_ds:
        train_2 = union(seed_train, union_ds)
        final_train = train_2
        _assert_no_leakage(_ids(train_2), test_ids, "symptom model 2")
        model_2 = train(
            _project_dataset(train_2), provider, cfg.dsd_train_config(),
            SYMPTOM_SPACE, cfg.predict_threshold,
        )
        evaluate("dsd-2", model_2)

    reason = stopping_check(state, swept_later, cfg.epsilon)
    if reason:
        return finalize(reason, model_2, "dsd-2" if union_ds else "dsd-1")

    # Second sweep: external weak posts plus the clinician depression
    # pool, judged by the stronger model.
    lc_pool = list(external_pool) + list(flt.ed_pool)
    h2 = harvest(model_2, ensemble, lc_pool, provider, (zsl_voter,), cfg.max_seq_len)
    zsl_preds_2 = zsl_predictions(
        h2.confident, provider, descriptors, cfg.zsl_threshold, cfg.zsl_k,
        cfg.max_seq_len,
    )
    lc_labelled = zsl_union(
        h2.confident,
        {r.id: r.labels for r in h2.confident},
        zsl_preds_2,
        provenance="harvested-less-confident",
    )
    ledger.record("harvested-less-confident", lc_labelled)
    rundir.save_dataset("harvested-less-confident", lc_labelled)

    final_model = model_2
    if lc_labelled:
        final_train = union(final_train, lc_labelled)
        _assert_no_leakage(_ids(final_train), test_ids, "final model")
        final_model = train(
            _project_dataset(final_train), provider, cfg.dsd_train_config(),
            SYMPTOM_SPACE, cfg.predict_threshold,
        )
        evaluate("final-dsd", final_model)

    # Every declared source has now been swept.
    stage = "final-dsd" if lc_labelled else ("dsd-2" if union_ds else "dsd-1")
    return finalize(stopping_check(state, 0, cfg.epsilon), final_model, stage)


def _rule_report(state, stage, final_train, gold, X_test, cfg, provider) -> None:
    """Score the final model again with label-implication rules applied."""
    train_report = classification_report(
        [project_labels(r.labels, SYMPTOM_SPACE) for r in final_train],
        predict_batch(
            state.models["final"],
            _embed_records(final_train, provider, cfg.max_seq_len),
        )[0],
        SYMPTOM_SPACE,
    )
    weak, strong = weak_strong_from_metrics(
        report_metrics_dict(train_report),
        cfg.weak_recall_floor,
        cfg.strong_recall_floor,
    )
    rules = mine_rules(_project_dataset(final_train), weak, strong)
    pred, _ = predict_batch(state.models["final"], X_test)
    augmented = [apply_rules(p, rules, closure=cfg.rules_closure) for p in pred]
    state.reports[f"{stage}+rules"] = classification_report(
        gold, augmented, SYMPTOM_SPACE
    )
