"""End-to-end runs of the command-line surface, in process."""

import csv
import json
import subprocess
import sys

import pytest
from corpus_synth import make_corpus

from symharvest.annotation import make_record, mvcp_aggregate, write_annotations
from symharvest.cli import main, parse_label_arg
from symharvest.store import read_dataset, write_dataset


def jsonl(path, rows):
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")


def read_jsonl(path):
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def test_parse_label_arg():
    assert parse_label_arg("1-10") == tuple(range(1, 11))
    assert parse_label_arg("3,1,2") == (1, 2, 3)
    assert parse_label_arg("1-3,11") == (1, 2, 3, 11)
    with pytest.raises(ValueError):
        parse_label_arg("")


def test_normalize_command(tmp_path, capsys):
    raw = tmp_path / "raw.jsonl"
    out = tmp_path / "norm.jsonl"
    jsonl(raw, [
        {"id": "a", "text": "I've been soooo tired", "labels": [4]},
        {"id": "b", "text": "was diagnosed with it last week"},
        {"id": "c", "text": "Looong day"},
    ])
    assert main(["normalize", "--in", str(raw), "--out", str(out)]) == 0
    assert "1 dropped" in capsys.readouterr().out
    rows = {r["id"]: r for r in read_jsonl(out)}
    assert set(rows) == {"a", "c"}
    assert rows["a"]["tokens"][:3] == ["i", "have", "been"]
    assert "so" in rows["a"]["tokens"]
    assert rows["a"]["labels"] == [4]
    assert rows["c"]["tokens"] == ["long", "day"]

    assert main([
        "normalize", "--in", str(raw), "--out", str(out), "--keep-disclosure",
    ]) == 0
    assert len(read_jsonl(out)) == 3


ANNOTATIONS = [
    ("a1", "p1", [1], False, 0), ("a2", "p1", [1], False, 0),
    ("a3", "p1", [1], False, 0), ("doc", "p1", [2], True, 1),
    ("a1", "p2", [3], False, 0), ("a2", "p2", [4], False, 0),
    ("a3", "p2", [5], False, 0), ("doc", "p2", [6], True, 1),
    ("a1", "p3", [10], False, 0), ("a2", "p3", [10], False, 0),
    ("a3", "p3", [2], False, 0), ("doc", "p3", [10], True, 1),
]


def annotation_file(tmp_path):
    path = tmp_path / "ann.jsonl"
    records = [
        make_record(a, p, labs, is_clinician=c, clinician_rank=r, timestamp="t")
        for a, p, labs, c, r in ANNOTATIONS
    ]
    write_annotations(path, records)
    return path, records


def test_aggregate_command(tmp_path):
    ann, records = annotation_file(tmp_path)
    posts = tmp_path / "posts.jsonl"
    write_dataset(posts, read_dataset_fixture())
    out = tmp_path / "mvcp.jsonl"
    assert main([
        "aggregate", "--annotations", str(ann), "--out", str(out),
        "--posts", str(posts),
    ]) == 0
    rows = {r["id"]: r for r in read_jsonl(out)}
    for pid in ("p1", "p2", "p3"):
        expected = mvcp_aggregate(
            [r for r in records if r.post_id == pid], n_annotators=4
        )
        assert rows[pid].get("labels") == (
            None if expected is None else sorted(expected)
        )
    assert rows["p1"]["text"] == "first post"


def read_dataset_fixture():
    from symharvest.store import DatasetRecord

    return [
        DatasetRecord(id="p1", text="first post", tokens=("first", "post")),
        DatasetRecord(id="p2", text="second post", tokens=("second", "post")),
        DatasetRecord(id="p3", text="third post", tokens=("third", "post")),
    ]


def test_agreement_and_retest_commands(tmp_path, capsys):
    ann, _ = annotation_file(tmp_path)
    report = tmp_path / "kappa.csv"
    assert main(["agreement", "--annotations", str(ann), "--report", str(report)]) == 0
    with open(report, encoding="utf-8", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 13
    assert rows[0]["label"] == "1" and rows[0]["name"] == "Anhedonia"

    assert main(["retest", "--annotations", str(ann)]) == 0
    assert "n/a" in capsys.readouterr().out


def conf_file(tmp_path, **overrides):
    values = {
        "embed_dim": 128, "dsd_epochs": 800, "dpd_epochs": 120,
        "learning_rate": 2.0, "seed": 7, "zsl_threshold": 0.6,
        "rules_enabled": "false",
    }
    values.update(overrides)
    path = tmp_path / "run.conf"
    path.write_text(
        "".join(f"{k} = {v}\n" for k, v in values.items()), encoding="utf-8"
    )
    return str(path)


def test_train_predict_evaluate_chain(tmp_path, capsys):
    seed_posts, _, _ = make_corpus(n_seed=60, n_pool=0, n_external=0, n_ed=0,
                                   n_noed=0, n_gibberish=0, n_pool_controls=0)
    data = tmp_path / "seed.jsonl"
    write_dataset(data, seed_posts)
    cfg = conf_file(tmp_path, embed_dim=256, dsd_epochs=1200)
    model = tmp_path / "model.json"
    assert main(["train", "--data", str(data), "--out", str(model),
                 "--config", cfg]) == 0

    pred = tmp_path / "pred.jsonl"
    assert main(["predict", "--model", str(model), "--in", str(data),
                 "--out", str(pred), "--config", cfg]) == 0

    report = tmp_path / "report.txt"
    report_csv = tmp_path / "report.csv"
    assert main(["evaluate", "--gold", str(data), "--pred", str(pred),
                 "--labels", "1-10", "--out", str(report),
                 "--csv", str(report_csv)]) == 0
    text = report.read_text(encoding="utf-8")
    assert "macro avg" in text and "Anhedonia" in text
    with open(report_csv, encoding="utf-8", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 10
    # the model must at least fit its own training data
    f1_by_label = {row["label"]: float(row["f1"]) for row in rows}
    assert sum(f1_by_label.values()) / 10 > 0.9


def test_evaluate_rejects_missing_predictions(tmp_path, capsys):
    gold = tmp_path / "gold.jsonl"
    pred = tmp_path / "pred.jsonl"
    jsonl(gold, [{"id": "x", "text": "t", "labels": [1]}])
    jsonl(pred, [])
    assert main(["evaluate", "--gold", str(gold), "--pred", str(pred)]) == 1
    assert "missing" in capsys.readouterr().err


def test_dpd_train_and_predict(tmp_path, capsys):
    seed_posts, _, _ = make_corpus(n_seed=30, n_pool=0, n_external=0, n_ed=20,
                                   n_noed=30, n_gibberish=0, n_pool_controls=0)
    controls = [r for r in seed_posts if r.labels == frozenset({12})]
    positives = [r for r in seed_posts if r not in controls]
    train_set = [rec.with_labels([11]) for rec in positives] + [
        rec.with_labels(None) for rec in controls
    ]
    data = tmp_path / "dpd.jsonl"
    write_dataset(data, train_set)
    cfg = conf_file(tmp_path)
    model = tmp_path / "dpd.json"
    assert main(["dpd-train", "--data", str(data), "--out", str(model),
                 "--config", cfg]) == 0

    out = tmp_path / "verdicts.jsonl"
    assert main(["dpd-predict", "--model", str(model), "--in", str(data),
                 "--out", str(out), "--zsl-voter", "--config", cfg]) == 0
    verdicts = read_jsonl(out)
    assert {v["verdict"] for v in verdicts} <= {"depression", "control"}
    n_dep = sum(v["verdict"] == "depression" for v in verdicts)
    assert n_dep >= 45  # positives dominate this training set


def test_zsl_command(tmp_path, capsys):
    seed_posts, _, _ = make_corpus(n_seed=20, n_pool=0, n_external=0, n_ed=0,
                                   n_noed=0, n_gibberish=0, n_pool_controls=0)
    data = tmp_path / "posts.jsonl"
    write_dataset(data, [r.with_labels(None) for r in seed_posts])
    out = tmp_path / "zsl.jsonl"
    assert main(["zsl", "--in", str(data), "--out", str(out),
                 "--threshold", "0.6", "--config", conf_file(tmp_path)]) == 0
    rows = read_jsonl(out)
    assert len(rows) == 20
    hit = [r for r in rows if r["labels"]]
    assert hit, "descriptor-derived posts should match their own descriptors"
    assert all(s["distance"] < 0.6 for r in hit for s in r["zsl_scores"])


def test_rules_commands(tmp_path, capsys):
    data = tmp_path / "labelled.jsonl"
    jsonl(data, [
        {"id": "a", "text": "", "labels": [1, 2]},
        {"id": "b", "text": "", "labels": [1, 2]},
        {"id": "c", "text": "", "labels": [1]},
        {"id": "d", "text": "", "labels": [4]},
    ])
    rules = tmp_path / "rules.csv"
    assert main(["mine-rules", "--in", str(data), "--out", str(rules),
                 "--weak", "2", "--strong", "1,4"]) == 0
    with open(rules, encoding="utf-8", newline="") as fh:
        mined = list(csv.DictReader(fh))
    assert [(r["antecedent"], r["consequent"]) for r in mined] == [("1", "2")]

    pred = tmp_path / "pred.jsonl"
    jsonl(pred, [
        {"id": "x", "text": "", "labels": [1]},
        {"id": "y", "text": "", "labels": [4]},
        {"id": "z", "text": ""},
    ])
    out = tmp_path / "aug.jsonl"
    assert main(["apply-rules", "--in", str(pred), "--rules", str(rules),
                 "--out", str(out)]) == 0
    rows = {r["id"]: r.get("labels") for r in read_jsonl(out)}
    assert rows == {"x": [1, 2], "y": [4], "z": None}


def test_packaged_rules_fixture(tmp_path):
    from importlib import resources

    res = resources.files("symharvest.data") / "strong_rules.csv"
    pred = tmp_path / "pred.jsonl"
    jsonl(pred, [{"id": "a", "text": "", "labels": [4]},
                 {"id": "b", "text": "", "labels": [1, 9]}])
    out = tmp_path / "aug.jsonl"
    with resources.as_file(res) as rules_path:
        assert main(["apply-rules", "--in", str(pred),
                     "--rules", str(rules_path), "--out", str(out)]) == 0
    rows = {r["id"]: r["labels"] for r in read_jsonl(out)}
    assert rows["a"] == [3, 4, 8, 10]
    assert rows["b"] == [1, 2, 6, 8, 9, 10]


def test_distribution_and_bigrams(tmp_path, capsys):
    data = tmp_path / "data.jsonl"
    jsonl(data, [
        {"id": "a", "text": "", "tokens": ["want", "go", "away"], "labels": [10]},
        {"id": "b", "text": "", "tokens": ["want", "go", "home"], "labels": [10]},
        {"id": "c", "text": "", "tokens": ["fine"], "labels": [12]},
    ])
    assert main(["distribution", "--in", str(data)]) == 0
    out = capsys.readouterr().out
    assert "Suicidal thoughts" in out and "total posts: 3" in out

    assert main(["bigrams", "--in", str(data), "--label", "10", "--k", "2"]) == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0].strip() == "2  want go"


def test_dataset_commands(tmp_path, capsys):
    a = tmp_path / "a.jsonl"
    b = tmp_path / "b.jsonl"
    jsonl(a, [{"id": "1", "text": "x", "labels": [1]},
              {"id": "2", "text": "y", "labels": [2]}])
    jsonl(b, [{"id": "2", "text": "y", "labels": [2]},
              {"id": "3", "text": "z", "labels": [3]}])

    out = tmp_path / "u.jsonl"
    assert main(["dataset", "union", str(a), str(b), "--out", str(out)]) == 0
    assert [r["id"] for r in read_jsonl(out)] == ["1", "2", "3"]

    assert main(["dataset", "subtract", str(a), str(b), "--out", str(out)]) == 0
    assert [r["id"] for r in read_jsonl(out)] == ["1"]

    assert main(["dataset", "sample", str(a), "--n", "1", "--seed", "3",
                 "--out", str(out)]) == 0
    assert len(read_jsonl(out)) == 1

    # conflicting labels for the same id is an error, not a merge
    jsonl(b, [{"id": "1", "text": "x", "labels": [5]}])
    assert main(["dataset", "union", str(a), str(b), "--out", str(out)]) == 1
    assert "conflicting" in capsys.readouterr().err

    assert main(["dataset", "union", str(a), "--out", str(out)]) == 2
    assert main(["dataset", "sample", str(a), "--out", str(out)]) == 2


def test_ssl_run_command(tmp_path, capsys):
    seed_posts, pool_posts, external_posts = make_corpus(
        n_seed=40, n_pool=40, n_external=10, n_ed=15,
        n_noed=60, n_gibberish=3, n_pool_controls=8,
    )
    seed = tmp_path / "seed.jsonl"
    pool = tmp_path / "pool.jsonl"
    external = tmp_path / "ext.jsonl"
    write_dataset(seed, seed_posts)
    write_dataset(pool, pool_posts)
    write_dataset(external, external_posts)
    out_dir = tmp_path / "run"
    cfg = conf_file(tmp_path, dsd_epochs=250, dpd_epochs=80)
    assert main([
        "ssl-run", "--config", cfg, "--seed-data", str(seed),
        "--pool", str(pool), "--external", str(external), "--out", str(out_dir),
    ]) == 0
    printed = capsys.readouterr().out
    assert "stopped: " in printed and "macro-F1" in printed
    state = json.loads((out_dir / "state.json").read_text(encoding="utf-8"))
    assert state["stop_reason"] in ("pool-exhausted", "no-gain")
    assert (out_dir / "datasets" / "final.jsonl").exists()


def test_module_entrypoint_help():
    proc = subprocess.run(
        [sys.executable, "-m", "symharvest.cli", "--help"],
        capture_output=True, text=True, timeout=60,
    )
    assert proc.returncode == 0
    for command in ("normalize", "ssl-run", "serve", "dataset"):
        assert command in proc.stdout
