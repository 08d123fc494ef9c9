"""HTTP service backing live annotation work.

Serves assignment batches (with seeded duplicate re-assignments for
test-retest), accepts submissions exactly once, and exposes progress,
agreement analytics, consensus export, and the guideline text.

The core is a plain object so the behavior is testable without HTTP;
`create_app` wraps it in a FastAPI application. Accepted annotations go
to an append-only JSONL journal and the in-memory index is rebuilt by
replaying that journal, which also reproduces the seeded duplicate
injections, so a restarted service continues exactly where it stopped.
"""

from __future__ import annotations

import json
import os
import random
import threading
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .annotation import (
    ALL_LABELS,
    LABEL_NAMES,
    AnnotationRecord,
    LabelSetError,
    NoRetestDataError,
    kappa_report,
    make_record,
    mvcp_aggregate,
    test_retest,
    validate_label_set,
)
from .guideline import guideline_as_dicts
from .store import DatasetRecord, record_to_dict


class ServiceError(Exception):
    def __init__(self, status: int, code: str, message: str, detail: str = ""):
        super().__init__(message)
        self.status = status
        self.code = code
        self.detail = detail

    def as_dict(self) -> dict:
        return {"code": self.code, "message": str(self), "detail": self.detail}


@dataclass
class AssignmentPlan:
    """One annotator's ordered queue of (post_id, round) slots."""

    annotator_id: str
    queue: list[tuple[str, int]]
    duplicate_rate: float = 0.05
    seed: int = 42

    def __post_init__(self):
        if not 0.0 <= self.duplicate_rate < 1.0:
            raise ValueError("duplicate_rate must lie in [0, 1)")
        # rng stream is private to (seed, annotator): plans never share draws
        self._rng = random.Random(f"{self.seed}:{self.annotator_id}")
        self._slots = set(self.queue)

    def extend_with_duplicate(self, post_id: str, answered_round: int) -> bool:
        """Seeded draw: re-assign the post at the next round, maybe."""
        if self._rng.random() >= self.duplicate_rate:
            return False
        slot = (post_id, answered_round + 1)
        if slot in self._slots:  # cannot happen while submissions are unique
            raise AssertionError(f"slot {slot} assigned twice")
        self.queue.append(slot)
        self._slots.add(slot)
        return True

    def is_assigned(self, post_id: str, round: int) -> bool:
        return (post_id, round) in self._slots


@dataclass
class PlanConfig:
    annotators: list[str]
    clinicians: dict[str, int] = field(default_factory=dict)
    duplicate_rate: float = 0.05
    seed: int = 42


def parse_plan_config(text: str) -> PlanConfig:
    """`key = value` lines: annotators CSV, clinicians as id:rank CSV."""
    values: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, raw = line.partition("=")
        if not sep:
            raise ValueError(f"line {lineno}: expected key = value")
        values[key.strip()] = raw.strip()
    unknown = set(values) - {"annotators", "clinicians", "duplicate_rate", "seed"}
    if unknown:
        raise ValueError(f"unknown plan keys: {sorted(unknown)}")
    if not values.get("annotators"):
        raise ValueError("plan must list annotators")
    annotators = [a.strip() for a in values["annotators"].split(",") if a.strip()]
    clinicians: dict[str, int] = {}
    for entry in values.get("clinicians", "").split(","):
        entry = entry.strip()
        if not entry:
            continue
        name, sep, rank = entry.partition(":")
        if not sep:
            raise ValueError(f"clinician entry {entry!r} must be id:rank")
        clinicians[name.strip()] = int(rank)
    missing = set(clinicians) - set(annotators)
    if missing:
        raise ValueError(f"clinicians not in annotator list: {sorted(missing)}")
    return PlanConfig(
        annotators=annotators,
        clinicians=clinicians,
        duplicate_rate=float(values.get("duplicate_rate", 0.05)),
        seed=int(values.get("seed", 42)),
    )


def load_plan_config(path) -> PlanConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_plan_config(fh.read())


class AnnotationService:
    def __init__(
        self,
        posts: Sequence[DatasetRecord],
        plan: PlanConfig,
        journal_path=None,
    ):
        if not posts:
            raise ValueError("no posts to annotate")
        self.posts: dict[str, DatasetRecord] = {}
        for p in posts:
            if p.id in self.posts:
                raise ValueError(f"duplicate post id {p.id!r}")
            self.posts[p.id] = p
        self.plan_config = plan
        self.plans = {
            a: AssignmentPlan(
                annotator_id=a,
                queue=[(p.id, 1) for p in posts],
                duplicate_rate=plan.duplicate_rate,
                seed=plan.seed,
            )
            for a in plan.annotators
        }
        self.answered: dict[tuple[str, str, int], AnnotationRecord] = {}
        self.journal_path = os.fspath(journal_path) if journal_path else None
        self._lock = threading.Lock()
        if self.journal_path and os.path.exists(self.journal_path):
            self._replay_journal()

    # ------------------------------------------------------------ intake

    def _plan(self, annotator_id: str) -> AssignmentPlan:
        plan = self.plans.get(annotator_id)
        if plan is None:
            raise ServiceError(
                404,
                "unknown-annotator",
                f"annotator {annotator_id!r} is not registered",
                "annotator ids are fixed in the plan config",
            )
        return plan

    def next_batch(self, annotator_id: str, n: int) -> list[dict]:
        if n < 1:
            raise ServiceError(400, "invalid-parameter", "n must be >= 1")
        with self._lock:
            plan = self._plan(annotator_id)
            batch = []
            for post_id, round_ in plan.queue:
                if (annotator_id, post_id, round_) in self.answered:
                    continue
                batch.append(
                    {
                        "post_id": post_id,
                        "text": self.posts[post_id].text,
                        "round": round_,
                    }
                )
                if len(batch) == n:
                    break
            return batch

    def submit(self, annotator_id: str, post_id: str, labels, round: int = 1) -> dict:
        with self._lock:
            plan = self._plan(annotator_id)
            try:
                label_set = validate_label_set(labels)
            except LabelSetError as exc:
                raise ServiceError(400, exc.rule, str(exc)) from exc
            except (TypeError, ValueError) as exc:
                raise ServiceError(400, "malformed-labels", str(exc)) from exc
            if post_id not in self.posts or not plan.is_assigned(post_id, round):
                raise ServiceError(
                    400,
                    "not-assigned",
                    f"({annotator_id}, {post_id}, round {round}) is not assigned",
                )
            if (annotator_id, post_id, round) in self.answered:
                raise ServiceError(
                    409,
                    "already-answered",
                    f"{annotator_id} already answered {post_id} at round {round}",
                )
            record = make_record(
                annotator_id=annotator_id,
                post_id=post_id,
                labels=label_set,
                round=round,
                is_clinician=annotator_id in self.plan_config.clinicians,
                clinician_rank=self.plan_config.clinicians.get(annotator_id, 0),
            )
            self._accept(record)
            self._journal(record)
            return {"status": "accepted", "post_id": post_id, "round": round}

    def _accept(self, record: AnnotationRecord) -> None:
        self.answered[record.key()] = record
        self.plans[record.annotator_id].extend_with_duplicate(
            record.post_id, record.round
        )

    # ------------------------------------------------------------ journal

    def _journal(self, record: AnnotationRecord) -> None:
        if not self.journal_path:
            return
        entry = {
            "annotator_id": record.annotator_id,
            "post_id": record.post_id,
            "labels": sorted(record.labels),
            "round": record.round,
            "is_clinician": record.is_clinician,
            "clinician_rank": record.clinician_rank,
            "timestamp": record.timestamp,
        }
        with open(self.journal_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(entry) + "\n")

    def _replay_journal(self) -> None:
        """Rebuild state by re-accepting journal entries in order.

        Replaying through the same code path re-draws the duplicate
        injections from the same seeded streams, so queues come back
        identical to the pre-restart state.
        """
        with open(self.journal_path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.strip()
                if not line:
                    continue
                entry = json.loads(line)
                record = make_record(**entry)
                if record.annotator_id not in self.plans:
                    raise ValueError(
                        f"journal line {lineno}: annotator "
                        f"{record.annotator_id!r} not in plan"
                    )
                if record.post_id not in self.posts:
                    raise ValueError(
                        f"journal line {lineno}: unknown post {record.post_id!r}"
                    )
                if record.key() in self.answered:
                    raise ValueError(f"journal line {lineno}: duplicate {record.key()}")
                self._accept(record)

    # ------------------------------------------------------------ reports

    def progress(self, annotator_id: str) -> dict:
        with self._lock:
            plan = self._plan(annotator_id)
            answered = sum(
                1 for key in self.answered if key[0] == annotator_id
            )
            return {
                "annotator_id": annotator_id,
                "assigned": len(plan.queue),
                "answered": answered,
                "remaining": len(plan.queue) - answered,
            }

    def _records(self) -> list[AnnotationRecord]:
        return list(self.answered.values())

    def consensus(self) -> dict[str, frozenset[int] | None]:
        by_post: dict[str, list[AnnotationRecord]] = {}
        for rec in self._records():
            if rec.round == 1:
                by_post.setdefault(rec.post_id, []).append(rec)
        n = len(self.plans)
        return {
            pid: mvcp_aggregate(recs, n_annotators=n)
            for pid, recs in by_post.items()
        }

    def agreement(self) -> dict:
        with self._lock:
            records = self._records()
            report = kappa_report(records, self.consensus(), labels=ALL_LABELS)
            try:
                retest = test_retest(records)
            except NoRetestDataError:
                retest = None
            return {"rows": report.to_rows(), "test_retest": retest}

    def export_mvcp(self) -> dict:
        with self._lock:
            rows = []
            for pid, labels in sorted(self.consensus().items()):
                post = self.posts[pid]
                rec = DatasetRecord(
                    id=pid,
                    text=post.text,
                    tokens=post.tokens,
                    labels=labels,
                    provenance="mvcp-consensus",
                    source=post.source,
                )
                rows.append(record_to_dict(rec))
            return {"records": rows}

    def guideline(self) -> dict:
        return {"entries": guideline_as_dicts()}

    def labels(self) -> dict:
        return {
            "labels": [{"id": lab, "name": LABEL_NAMES[lab]} for lab in ALL_LABELS]
        }


def create_app(service: AnnotationService):
    from fastapi import Body, FastAPI, Request
    from fastapi.exceptions import RequestValidationError
    from fastapi.responses import JSONResponse

    app = FastAPI(title="annotation service", docs_url=None, redoc_url=None)
    app.state.service = service

    @app.exception_handler(ServiceError)
    async def service_error(request: Request, exc: ServiceError):
        return JSONResponse(status_code=exc.status, content=exc.as_dict())

    @app.exception_handler(RequestValidationError)
    async def validation_error(request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400,
            content={
                "code": "invalid-request",
                "message": "request does not match the endpoint contract",
                "detail": str(exc.errors()),
            },
        )

    @app.get("/api/batch")
    def batch(annotator: str, n: int = 10):
        return {"items": service.next_batch(annotator, n)}

    @app.post("/api/annotations")
    def annotations(payload: dict = Body(...)):
        missing = {"annotator", "post_id", "labels"} - set(payload)
        if missing:
            raise ServiceError(
                400, "invalid-request", f"missing fields: {sorted(missing)}"
            )
        return service.submit(
            annotator_id=payload["annotator"],
            post_id=payload["post_id"],
            labels=payload["labels"],
            round=int(payload.get("round", 1)),
        )

    @app.get("/api/progress")
    def progress(annotator: str):
        return service.progress(annotator)

    @app.get("/api/agreement")
    def agreement():
        return service.agreement()

    @app.get("/api/export/mvcp")
    def export_mvcp():
        return service.export_mvcp()

    @app.get("/api/guideline")
    def guideline():
        return service.guideline()

    @app.get("/api/labels")
    def labels():
        return service.labels()

    return app


def create_app_from_files(data_path, plan_path, journal_path=None):
    from .store import read_dataset

    posts = read_dataset(data_path)
    plan = load_plan_config(plan_path)
    return create_app(AnnotationService(posts, plan, journal_path=journal_path))
