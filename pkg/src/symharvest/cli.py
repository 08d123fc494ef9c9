"""Command-line front end.

One subcommand per pipeline operation, all reading and writing the JSONL
dataset format. Exit code 0 on success, 1 on expected failures (bad
input, conflicting datasets, unreachable embedding server), 2 on usage
errors from argparse.
"""

import argparse
import csv
import json
import sys
from dataclasses import replace

from .annotation import (
    LABEL_NAMES,
    NoRetestDataError,
    kappa_report,
    mvcp_aggregate,
    read_annotations,
    test_retest,
)
from .classifier import (
    DEPRESSION_SPACE,
    dpd_predict,
    load_model,
    make_zsl_voter,
    predict_batch,
    save_model,
    train,
)
from .config import RunConfig, load_run_config, make_provider
from .embeddings import build_descriptor_embeddings, load_descriptor_corpus
from .evaluation import (
    classification_report,
    label_distribution,
    load_stopwords,
    top_bigrams,
)
from .normalize import Dropped, RawPost, load_contraction_map, normalize
from .rules import apply_rules, load_rules, mine_rules, save_rules
from .ssl_loop import run_ssl
from .store import (
    read_dataset,
    sample_controls,
    subtract,
    union,
    write_dataset,
)
from .zsl import UnembeddableError, zsl_label


def parse_label_arg(text: str) -> tuple[int, ...]:
    """Parse "1-10" / "1,2,5" / "1-3,11" into a sorted label tuple."""
    out: set[int] = set()
    for part in text.split(","):
        part = part.strip()
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            out.update(range(int(lo), int(hi) + 1))
        elif part:
            out.add(int(part))
    if not out:
        raise ValueError(f"no labels in {text!r}")
    return tuple(sorted(out))


def _load_cfg(path: str | None) -> RunConfig:
    return load_run_config(path) if path else RunConfig()


def _tokenized(records):
    """Fill in tokens from the text for records that lack them."""
    out = []
    for rec in records:
        if not rec.tokens:
            norm = normalize(RawPost(id=rec.id, text=rec.text), drop_on_disclosure=False)
            rec = replace(rec, tokens=norm.tokens)
        out.append(rec)
    return out


def _embed(records, provider, cfg: RunConfig):
    import numpy as np

    clipped = [
        replace(r, tokens=tuple(r.tokens)[: cfg.max_seq_len]) for r in records
    ]
    return np.asarray(provider.embed_posts(clipped), dtype=float)


# ------------------------------------------------------------ commands


def _cmd_normalize(args) -> int:
    cmap = load_contraction_map(args.contractions) if args.contractions else None
    kept, dropped = [], 0
    with open(args.infile, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            row = json.loads(line)
            result = normalize(
                RawPost(id=str(row["id"]), text=row["text"], source=row.get("source", "")),
                contraction_map=cmap,
                drop_on_disclosure=not args.keep_disclosure,
            )
            if isinstance(result, Dropped):
                dropped += 1
                continue
            rec = {
                "id": result.id,
                "text": row["text"],
                "tokens": list(result.tokens),
                "provenance": "normalized",
                "source": result.source,
            }
            if row.get("labels") is not None:
                rec["labels"] = sorted(row["labels"])
            kept.append(rec)
    with open(args.out, "w", encoding="utf-8") as fh:
        for rec in kept:
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
    print(f"normalized {len(kept)} posts -> {args.out} ({dropped} dropped)")
    return 0


def _group_by_post(records):
    grouped: dict[str, list] = {}
    for rec in records:
        grouped.setdefault(rec.post_id, []).append(rec)
    return grouped


def _cmd_aggregate(args) -> int:
    records = read_annotations(args.annotations)
    panel = args.panel or len({r.annotator_id for r in records})
    texts = {}
    if args.posts:
        texts = {r.id: r for r in read_dataset(args.posts)}
    labelled = unlabelled = 0
    with open(args.out, "w", encoding="utf-8") as fh:
        for post_id, group in _group_by_post(records).items():
            consensus = mvcp_aggregate(group, n_annotators=panel)
            source = texts.get(post_id)
            row: dict = {
                "id": post_id,
                "text": source.text if source else "",
                "tokens": list(source.tokens) if source else [],
                "provenance": "mvcp-consensus",
                "source": source.source if source else "",
            }
            if consensus is None:
                unlabelled += 1
            else:
                row["labels"] = sorted(consensus)
                labelled += 1
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")
    print(f"consensus for {labelled} posts, {unlabelled} unlabelled -> {args.out}")
    return 0


def _consensus_map(records, panel: int):
    return {
        pid: mvcp_aggregate(group, n_annotators=panel)
        for pid, group in _group_by_post(records).items()
    }


def _cmd_agreement(args) -> int:
    records = read_annotations(args.annotations)
    panel = len({r.annotator_id for r in records})
    rows = kappa_report(records, _consensus_map(records, panel)).to_rows()
    fields = [
        "label", "name",
        "annotators", "annotators_std",
        "annotators_vs_consensus", "annotators_vs_consensus_std",
        "all", "all_std",
    ]
    with open(args.report, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        writer.writerows(rows)
    print(f"kappa report for {len(rows)} labels -> {args.report}")
    return 0


def _cmd_retest(args) -> int:
    records = read_annotations(args.annotations)
    try:
        value = test_retest(records)
    except NoRetestDataError:
        print("test-retest: n/a (no repeat assignments)")
        return 0
    print(f"test-retest: {value:.4f}")
    return 0


def _cmd_zsl(args) -> int:
    cfg = _load_cfg(args.config)
    provider = make_provider(cfg)
    corpus = load_descriptor_corpus(args.descriptors)
    descriptors = build_descriptor_embeddings(corpus, provider)
    records = _tokenized(read_dataset(args.infile))
    X = _embed(records, provider, cfg)
    hits = 0
    with open(args.out, "w", encoding="utf-8") as fh:
        for rec, v in zip(records, X):
            try:
                scored = zsl_label(v, descriptors, threshold=args.threshold, k=args.k)
            except UnembeddableError:
                scored = []
            row = {
                "id": rec.id,
                "text": rec.text,
                "tokens": list(rec.tokens),
                "labels": sorted(s.label for s in scored),
                "provenance": "zsl",
                "zsl_scores": [
                    {"label": s.label, "distance": s.distance} for s in scored
                ],
            }
            hits += bool(scored)
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")
    print(f"zsl labelled {hits}/{len(records)} posts -> {args.out}")
    return 0


def _cmd_train(args) -> int:
    cfg = _load_cfg(args.config)
    records = _tokenized(read_dataset(args.data))
    labels = parse_label_arg(args.labels)
    model = train(
        records,
        make_provider(cfg),
        cfg.dsd_train_config(),
        label_space=labels,
        threshold=cfg.predict_threshold,
    )
    save_model(args.out, model)
    print(
        f"trained on {len(records)} posts, {len(labels)} labels, "
        f"final loss {model.epoch_losses[-1]:.4f} -> {args.out}"
    )
    return 0


def _cmd_dpd_train(args) -> int:
    cfg = _load_cfg(args.config)
    records = _tokenized(read_dataset(args.data))
    model = train(
        records,
        make_provider(cfg),
        cfg.dpd_train_config(),
        label_space=DEPRESSION_SPACE,
        threshold=cfg.predict_threshold,
    )
    save_model(args.out, model)
    print(f"trained dpd model on {len(records)} posts -> {args.out}")
    return 0


def _cmd_predict(args) -> int:
    cfg = _load_cfg(args.config)
    model = load_model(args.model)
    records = _tokenized(read_dataset(args.infile))
    X = _embed(records, make_provider(cfg), cfg)
    labels, _ = predict_batch(model, X)
    out = [replace(r, labels=labs, provenance="predicted") for r, labs in zip(records, labels)]
    write_dataset(args.out, out)
    print(f"predicted {len(out)} posts -> {args.out}")
    return 0


def _cmd_dpd_predict(args) -> int:
    cfg = _load_cfg(args.config)
    provider = make_provider(cfg)
    ensemble = [load_model(p) for p in args.model]
    voters = []
    if args.zsl_voter:
        corpus = load_descriptor_corpus(args.descriptors)
        descriptors = build_descriptor_embeddings(corpus, provider)
        voters.append(
            make_zsl_voter(descriptors, threshold=cfg.zsl_threshold, k=cfg.zsl_k)
        )
    records = _tokenized(read_dataset(args.infile))
    X = _embed(records, provider, cfg)
    n_dep = 0
    with open(args.out, "w", encoding="utf-8") as fh:
        for rec, v in zip(records, X):
            verdict = dpd_predict(ensemble, v, voters)
            n_dep += verdict == "depression"
            fh.write(json.dumps({"id": rec.id, "verdict": verdict}) + "\n")
    print(f"{n_dep}/{len(records)} posts flagged depression -> {args.out}")
    return 0


def _cmd_mine_rules(args) -> int:
    records = read_dataset(args.infile)
    rules = mine_rules(
        records, parse_label_arg(args.weak), parse_label_arg(args.strong)
    )
    rules = [
        r
        for r in rules
        if r.support >= args.min_support and r.confidence >= args.min_confidence
    ]
    save_rules(args.out, rules)
    print(f"mined {len(rules)} rules from {len(records)} posts -> {args.out}")
    return 0


def _cmd_apply_rules(args) -> int:
    rules = load_rules(args.rules)
    records = read_dataset(args.infile)
    out = []
    changed = 0
    for rec in records:
        if rec.labels is None:
            out.append(rec)
            continue
        augmented = apply_rules(rec.labels, rules, closure=args.closure)
        changed += augmented != rec.labels
        out.append(replace(rec, labels=augmented))
    write_dataset(args.out, out)
    print(f"applied {len(rules)} rules, {changed} posts augmented -> {args.out}")
    return 0


def _cmd_evaluate(args) -> int:
    gold = read_dataset(args.gold)
    pred_by_id = {r.id: r for r in read_dataset(args.pred)}
    missing = [r.id for r in gold if r.id not in pred_by_id]
    if missing:
        raise ValueError(f"predictions missing for {len(missing)} gold ids, e.g. {missing[:3]}")
    gold_sets = [r.labels or frozenset() for r in gold]
    pred_sets = [pred_by_id[r.id].labels or frozenset() for r in gold]
    report = classification_report(gold_sets, pred_sets, parse_label_arg(args.labels))
    text = report.as_text()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
        print(f"report for {len(gold)} posts -> {args.out}")
    else:
        print(text)
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="") as fh:
            writer = csv.DictWriter(
                fh, fieldnames=["label", "name", "precision", "recall", "f1", "support"]
            )
            writer.writeheader()
            writer.writerows(report.as_rows())
    return 0


def _cmd_bigrams(args) -> int:
    records = read_dataset(args.infile)
    stopwords = load_stopwords(args.stopwords) if args.stopwords else None
    for phrase, count in top_bigrams(records, args.label, args.k, stopwords):
        print(f"{count:6d}  {phrase}")
    return 0


def _cmd_distribution(args) -> int:
    records = read_dataset(args.infile)
    dist = label_distribution(records)
    width = max((len(LABEL_NAMES.get(lab, str(lab))) for lab in dist), default=5)
    print(f"{'label':<{width + 5}}  count   ratio")
    for lab, row in dist.items():
        name = LABEL_NAMES.get(lab, str(lab))
        print(f"{lab:>2} {name:<{width + 2}}  {row['count']:5d}   {row['ratio']:.3f}")
    print(f"total posts: {len(records)}")
    return 0


def _cmd_dataset(args) -> int:
    if args.op == "union":
        out = union(read_dataset(args.a), read_dataset(args.b))
    elif args.op == "subtract":
        out = subtract(read_dataset(args.a), read_dataset(args.b))
    else:
        out = sample_controls(read_dataset(args.a), args.n, args.seed)
    write_dataset(args.out, out)
    print(f"{args.op}: {len(out)} records -> {args.out}")
    return 0


def _cmd_ssl_run(args) -> int:
    cfg = _load_cfg(args.config)
    seed_data = read_dataset(args.seed_data)
    pool = read_dataset(args.pool) if args.pool else []
    external = read_dataset(args.external) if args.external else []
    state = run_ssl(cfg, seed_data, pool=pool, external_pool=external, out_dir=args.out)
    print(f"stopped: {state.stop_reason} after {len(state.metric_history)} evaluations")
    for point in state.metric_history:
        print(
            f"  [{point.iteration}] {point.stage:<12} "
            f"macro-F1 {point.macro_f1:.4f}  weighted-F1 {point.weighted_f1:.4f}"
        )
    for bucket, count in sorted(state.ledger.counts().items()):
        print(f"  {bucket}: {count}")
    if args.out:
        print(f"run artifacts -> {args.out}")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app_from_files

    app = create_app_from_files(args.data, args.plan, journal_path=args.journal)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


# ------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="symharvest",
        description="Weak-supervision pipeline for symptom labelling of short posts.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("normalize", help="normalize raw posts")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--contractions", help="surface<TAB>expansion map, defaults to the packaged one")
    p.add_argument("--keep-disclosure", action="store_true",
                   help="keep posts mentioning a diagnosis instead of dropping them")
    p.set_defaults(fn=_cmd_normalize)

    p = sub.add_parser("aggregate", help="MVCP consensus from annotations")
    p.add_argument("--annotations", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--posts", help="dataset supplying post text for the output")
    p.add_argument("--panel", type=int, help="panel size; default = distinct annotators")
    p.set_defaults(fn=_cmd_aggregate)

    p = sub.add_parser("agreement", help="per-label kappa report")
    p.add_argument("--annotations", required=True)
    p.add_argument("--report", required=True, help="CSV output path")
    p.set_defaults(fn=_cmd_agreement)

    p = sub.add_parser("retest", help="test-retest reliability")
    p.add_argument("--annotations", required=True)
    p.set_defaults(fn=_cmd_retest)

    p = sub.add_parser("zsl", help="zero-shot labelling by descriptor similarity")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--descriptors", help="JSON descriptor corpus; defaults to the packaged one")
    p.add_argument("--threshold", type=float, default=1.0)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.set_defaults(fn=_cmd_zsl)

    p = sub.add_parser("train", help="train the multi-label symptom model")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--labels", default="1-10")
    p.add_argument("--config")
    p.set_defaults(fn=_cmd_train)

    p = sub.add_parser("predict", help="label posts with a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.set_defaults(fn=_cmd_predict)

    p = sub.add_parser("dpd-train", help="train a binary depression-vs-control model")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.set_defaults(fn=_cmd_dpd_train)

    p = sub.add_parser("dpd-predict", help="majority-vote depression screening")
    p.add_argument("--model", action="append", required=True,
                   help="model file; repeat for an ensemble")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--zsl-voter", action="store_true", help="add a zero-shot voter")
    p.add_argument("--descriptors")
    p.add_argument("--config")
    p.set_defaults(fn=_cmd_dpd_predict)

    p = sub.add_parser("mine-rules", help="mine strong->weak label rules")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--weak", required=True, help="weak labels, e.g. 3,8,10")
    p.add_argument("--strong", required=True, help="strong labels, e.g. 1,4")
    p.add_argument("--min-support", type=float, default=0.0)
    p.add_argument("--min-confidence", type=float, default=0.0)
    p.set_defaults(fn=_cmd_mine_rules)

    p = sub.add_parser("apply-rules", help="augment predicted labels with rules")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--rules", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--closure", action="store_true", help="fire rules to a fixpoint")
    p.set_defaults(fn=_cmd_apply_rules)

    p = sub.add_parser("evaluate", help="precision/recall/F1 report")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--labels", default="1-10")
    p.add_argument("--out", help="text report path; stdout when omitted")
    p.add_argument("--csv", help="also write the rows as CSV")
    p.set_defaults(fn=_cmd_evaluate)

    p = sub.add_parser("bigrams", help="most frequent bigrams for a label")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--label", type=int, required=True)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--stopwords")
    p.set_defaults(fn=_cmd_bigrams)

    p = sub.add_parser("distribution", help="label counts and ratios")
    p.add_argument("--in", dest="infile", required=True)
    p.set_defaults(fn=_cmd_distribution)

    p = sub.add_parser("dataset", help="combine or sample datasets")
    p.add_argument("op", choices=["union", "subtract", "sample"])
    p.add_argument("a", help="first dataset")
    p.add_argument("b", nargs="?", help="second dataset (union/subtract)")
    p.add_argument("--out", required=True)
    p.add_argument("--n", type=int, help="sample size")
    p.add_argument("--seed", type=int, default=42)
    p.set_defaults(fn=_cmd_dataset)

    p = sub.add_parser("ssl-run", help="run the full harvest-and-retrain loop")
    p.add_argument("--config")
    p.add_argument("--seed-data", required=True)
    p.add_argument("--pool")
    p.add_argument("--external")
    p.add_argument("--out", help="run directory for state, models, and datasets")
    p.set_defaults(fn=_cmd_ssl_run)

    p = sub.add_parser("serve", help="run the annotation service")
    p.add_argument("--data", required=True)
    p.add_argument("--plan", required=True)
    p.add_argument("--port", type=int, required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--journal", help="append-only JSONL journal for crash recovery")
    p.set_defaults(fn=_cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "dataset":
        if args.op in ("union", "subtract") and args.b is None:
            print(f"error: dataset {args.op} needs two datasets", file=sys.stderr)
            return 2
        if args.op == "sample" and args.n is None:
            print("error: dataset sample needs --n", file=sys.stderr)
            return 2
    try:
        return args.fn(args)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
