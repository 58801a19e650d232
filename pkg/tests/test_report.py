"""Report exports: metrics.json schema, CSV layout, SVG determinism."""

import csv
import json

import numpy as np
import pytest

from gaitnet.features import NUM_PAIRS, pair_from_index
from gaitnet.metrics import report_from_predictions
from gaitnet.model import AttentionReport
from gaitnet.report import (
    accuracy_table,
    export_attention,
    export_report,
    format_accuracy_row,
    metrics_json_dict,
)
from gaitnet.skeleton import CLASS_MANIFEST_NAMES, NUM_JOINTS


def fabricated_reports(seed=0, folds=3, n=40, epochs=5):
    """Per-fold reports from random-but-plausible predictions."""
    rng = np.random.default_rng(seed)
    reports = []
    for _ in range(folds):
        labels = rng.integers(0, 4, size=n)
        probs = rng.dirichlet(np.ones(4), size=n)
        # Tilt probabilities toward the truth so metrics are non-trivial.
        probs[np.arange(n), labels] += 1.0
        probs /= probs.sum(axis=1, keepdims=True)
        r = report_from_predictions(labels, probs, 4)
        r.train_loss = [1.4 - 0.1 * e for e in range(epochs)]
        r.test_loss = [1.5 - 0.08 * e for e in range(epochs)]
        reports.append((r, labels, probs))
    pooled_labels = np.concatenate([l for _, l, _ in reports])
    pooled_probs = np.concatenate([p for _, _, p in reports])
    return [r for r, _, _ in reports], (pooled_labels, pooled_probs)


class TestExportReport:
    def test_file_set(self, tmp_path):
        reports, pooled = fabricated_reports()
        out = export_report(
            reports,
            tmp_path / "run",
            variant="2s-cnn",
            seed=7,
            param_count=934,
            per_sample_test_ms=1.25,
            pooled=pooled,
        )
        expected = {
            "metrics.json",
            "timing.json",
            "confusion.csv",
            "roc_points.csv",
            "loss_curves.csv",
            "confusion.svg",
            "roc.svg",
            "loss.svg",
        }
        assert {p.name for p in out.iterdir()} == expected

    def test_metrics_json_schema(self, tmp_path):
        reports, pooled = fabricated_reports()
        out = export_report(reports, tmp_path, variant="fcnet", seed=3, param_count=123, pooled=pooled)
        doc = json.loads((out / "metrics.json").read_text())
        assert set(doc) == {"variant", "seed", "folds", "average", "param_count", "per_sample_test_ms"}
        assert doc["variant"] == "fcnet"
        assert doc["seed"] == 3
        assert doc["param_count"] == 123
        assert doc["per_sample_test_ms"] is None  # timing lives in timing.json
        assert len(doc["folds"]) == 3
        for i, fold in enumerate(doc["folds"]):
            assert fold["fold"] == i
            assert len(fold["confusion"]) == 4
        avg = doc["average"]
        assert set(avg) == {"accuracy", "precision", "recall", "f1", "auc", "per_class", "confusion"}

    def test_timing_sidecar(self, tmp_path):
        reports, _ = fabricated_reports()
        out = export_report(reports, tmp_path, per_sample_test_ms=2.5)
        doc = json.loads((out / "timing.json").read_text())
        assert doc == {"per_sample_test_ms": 2.5}
        out2 = export_report(reports, tmp_path / "b")
        assert not (out2 / "timing.json").exists()

    def test_byte_deterministic(self, tmp_path):
        reports, pooled = fabricated_reports()
        a = export_report(reports, tmp_path / "a", pooled=pooled, per_sample_test_ms=1.0)
        b = export_report(reports, tmp_path / "b", pooled=pooled, per_sample_test_ms=1.0)
        names = sorted(p.name for p in a.iterdir())
        assert names == sorted(p.name for p in b.iterdir())
        for name in names:
            if name == "timing.json":
                continue  # wall-clock value is the caller's input here anyway
            assert (a / name).read_bytes() == (b / name).read_bytes(), name

    def test_confusion_csv_layout(self, tmp_path):
        reports, _ = fabricated_reports(folds=3)
        out = export_report(reports, tmp_path)
        with open(out / "confusion.csv", newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["fold", "true_class"] + list(CLASS_MANIFEST_NAMES)
        assert len(rows) == 1 + 3 * 4 + 4  # header, per-fold rows, "all" rows
        all_rows = [r for r in rows[1:] if r[0] == "all"]
        assert [r[1] for r in all_rows] == list(CLASS_MANIFEST_NAMES)
        # Summed confusion: "all" cells equal the column sums of fold rows.
        for c, name in enumerate(CLASS_MANIFEST_NAMES):
            fold_vals = [
                sum(int(r[2 + k]) for r in rows[1:] if r[0] != "all" and r[1] == name)
                for k in range(4)
            ]
            assert [int(v) for v in all_rows[c][2:]] == fold_vals

    def test_loss_curves_csv(self, tmp_path):
        reports, _ = fabricated_reports(folds=2, epochs=4)
        out = export_report(reports, tmp_path)
        with open(out / "loss_curves.csv", newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["fold", "epoch", "train_loss", "test_loss"]
        assert len(rows) == 1 + 2 * 4
        # repr round-trips exactly
        assert float(rows[1][2]) == reports[0].train_loss[0]

    def test_roc_points_include_pooled(self, tmp_path):
        reports, pooled = fabricated_reports()
        out = export_report(reports, tmp_path, pooled=pooled)
        with open(out / "roc_points.csv", newline="") as fh:
            rows = list(csv.reader(fh))
        folds_seen = {r[0] for r in rows[1:]}
        assert "all" in folds_seen and "0" in folds_seen

    def test_empty_rejected(self, tmp_path):
        with pytest.raises(ValueError, match="no reports"):
            export_report([], tmp_path)


class TestAccuracyTable:
    def test_row_formatting(self):
        reports, _ = fabricated_reports(folds=1)
        row = format_accuracy_row(reports[0], "2s-CNN")
        assert row.startswith("2s-CNN")
        assert f"{100 * reports[0].accuracy:6.2f}" in row

    def test_none_rendered_as_dash(self):
        reports, _ = fabricated_reports(folds=1)
        reports[0].per_class[CLASS_MANIFEST_NAMES[0]]["accuracy"] = None
        assert "--" in format_accuracy_row(reports[0], "x")

    def test_table_has_header(self):
        reports, _ = fabricated_reports(folds=1)
        table = accuracy_table(reports[0], "FCNet")
        lines = table.splitlines()
        assert len(lines) == 2
        assert lines[0].startswith("Method")
        assert lines[0].endswith("Avg")
        assert lines[1].startswith("FCNet")


class TestExportAttention:
    def make_report(self, seed=0):
        rng = np.random.default_rng(seed)
        pair = rng.uniform(0.1, 0.9, size=NUM_PAIRS)
        agg = np.zeros(NUM_JOINTS)
        for f in range(NUM_PAIRS):
            i, j = pair_from_index(f)
            agg[i - 1] += pair[f]
            agg[j - 1] += pair[f]
        order = np.argsort(-pair, kind="stable")
        top = [(int(f), *pair_from_index(int(f)), float(pair[f])) for f in order]
        return AttentionReport(
            joint_importance_jp=rng.uniform(0.1, 0.9, size=NUM_JOINTS),
            joint_importance_rjdp=agg / (2 * (NUM_JOINTS - 1)),
            pair_importance=pair,
            per_joint_aggregate=agg,
            top_pairs=top,
        )

    def test_file_set_and_topk(self, tmp_path):
        out = export_attention(self.make_report(), tmp_path, top_k=10)
        assert {p.name for p in out.iterdir()} == {
            "joint_importance.csv",
            "pair_importance.csv",
            "per_joint_aggregate.csv",
            "top10_pairs.csv",
            "skeleton_importance.svg",
            "top_pairs.svg",
        }
        with open(out / "top10_pairs.csv", newline="") as fh:
            rows = list(csv.reader(fh))
        assert len(rows) == 11
        values = [float(r[4]) for r in rows[1:]]
        assert values == sorted(values, reverse=True)
        assert [int(r[0]) for r in rows[1:]] == list(range(1, 11))

    def test_pair_csv_complete(self, tmp_path):
        out = export_attention(self.make_report(), tmp_path)
        with open(out / "pair_importance.csv", newline="") as fh:
            rows = list(csv.reader(fh))
        assert len(rows) == 1 + NUM_PAIRS
        assert [int(r[0]) for r in rows[1:]] == list(range(NUM_PAIRS))

    def test_joint_importance_streams(self, tmp_path):
        out = export_attention(self.make_report(), tmp_path)
        with open(out / "joint_importance.csv", newline="") as fh:
            rows = list(csv.reader(fh))
        streams = [r[0] for r in rows[1:]]
        assert streams.count("3djp") == NUM_JOINTS
        assert streams.count("3drjdp") == NUM_JOINTS

    def test_deterministic(self, tmp_path):
        rep = self.make_report()
        a = export_attention(rep, tmp_path / "a")
        b = export_attention(rep, tmp_path / "b")
        for name in sorted(p.name for p in a.iterdir()):
            assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_metrics_json_dict_sorted_serialization():
    reports, _ = fabricated_reports(folds=2)
    from gaitnet.metrics import average_reports

    doc = metrics_json_dict(reports, average_reports(reports), "2s-cnn", 0, 934)
    text = json.dumps(doc, indent=2, sort_keys=True)
    assert json.loads(text) == doc
