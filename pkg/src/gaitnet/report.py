"""Report export: metrics JSON, CSV tables, and SVG figures.

metrics.json is fully deterministic (sorted keys, no timestamps, no
wall-clock values); measured per-sample inference time goes to the
timing.json sidecar instead so reruns stay byte-identical. All CSVs are
UTF-8 with a header row and '.' decimals.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .metrics import MetricsReport, roc_auc
from .model import AttentionReport
from .skeleton import (
    CLASS_MANIFEST_NAMES,
    CLASS_DISPLAY_NAMES,
    ClassLabel,
    JOINT_NAMES,
    REST_POSE_2D,
    SKELETON_EDGES,
)


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    # Stable clip-path ids and no creation date, so SVGs rerun identically.
    matplotlib.rcParams["svg.hashsalt"] = "gaitnet"
    import matplotlib.pyplot as plt

    return plt


def _save_svg(fig, path: Path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})


def metrics_json_dict(
    fold_reports: list[MetricsReport],
    average: MetricsReport,
    variant: str,
    seed: int,
    param_count: int,
) -> dict:
    return {
        "variant": variant,
        "seed": seed,
        "folds": [
            {
                "fold": i,
                "confusion": [[int(v) for v in row] for row in r.confusion],
                "per_class": r.per_class,
                "auc": r.auc,
            }
            for i, r in enumerate(fold_reports)
        ],
        "average": {
            "accuracy": average.accuracy,
            "precision": average.macro.get("precision"),
            "recall": average.macro.get("recall"),
            "f1": average.macro.get("f1"),
            "auc": average.macro.get("auc"),
            "per_class": average.per_class,
            "confusion": [[int(v) for v in row] for row in average.confusion],
        },
        "param_count": param_count,
        # Wall-clock timing is nondeterministic; see timing.json.
        "per_sample_test_ms": None,
    }


def write_json(path: Path, obj: dict) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def export_report(
    fold_reports: list[MetricsReport],
    out_dir: str | Path,
    average: MetricsReport | None = None,
    variant: str = "2s-cnn",
    seed: int = 0,
    param_count: int = 0,
    per_sample_test_ms: float | None = None,
    pooled: tuple[np.ndarray, np.ndarray] | None = None,
) -> Path:
    """Write metrics.json, CSV tables and SVG plots for a CV run.

    Args:
        fold_reports: per-fold MetricsReports (must be non-empty).
        out_dir: target directory, created if missing.
        average: fold-averaged report; recomputed if omitted.
        pooled: optional (labels, probs) over all test folds, for the
            pooled ROC figure.
    """
    if not fold_reports:
        raise ValueError("no reports to export")
    from .metrics import average_reports

    if average is None:
        average = average_reports(fold_reports)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    write_json(out / "metrics.json", metrics_json_dict(fold_reports, average, variant, seed, param_count))
    if per_sample_test_ms is not None:
        write_json(out / "timing.json", {"per_sample_test_ms": per_sample_test_ms})

    names = CLASS_MANIFEST_NAMES
    rows = []
    for i, r in enumerate(fold_reports):
        for c, name in enumerate(names):
            rows.append([i, name] + [int(v) for v in r.confusion[c]])
    for c, name in enumerate(names):
        rows.append(["all", name] + [int(v) for v in average.confusion[c]])
    _write_csv(out / "confusion.csv", ["fold", "true_class"] + list(names), rows)

    rows = []
    for i, r in enumerate(fold_reports):
        for name in names:
            for fpr, tpr in r.roc.get(name, []):
                rows.append([i, name, repr(fpr), repr(tpr)])
    pooled_roc: dict = {}
    pooled_auc: dict = {}
    if pooled is not None:
        labels, probs = pooled
        for c, name in enumerate(names):
            try:
                pooled_roc[name], pooled_auc[name] = roc_auc(probs, labels, c)
            except ValueError:
                continue
            for fpr, tpr in pooled_roc[name]:
                rows.append(["all", name, repr(fpr), repr(tpr)])
    _write_csv(out / "roc_points.csv", ["fold", "class", "fpr", "tpr"], rows)

    rows = []
    for i, r in enumerate(fold_reports):
        for epoch, train in enumerate(r.train_loss):
            test = r.test_loss[epoch] if epoch < len(r.test_loss) else ""
            rows.append([i, epoch, repr(train), repr(test) if test != "" else ""])
    _write_csv(out / "loss_curves.csv", ["fold", "epoch", "train_loss", "test_loss"], rows)

    plot_confusion(average.confusion, out / "confusion.svg")
    if pooled_roc:
        plot_roc(pooled_roc, pooled_auc, out / "roc.svg")
    if any(r.train_loss for r in fold_reports):
        plot_loss(fold_reports, out / "loss.svg")
    return out


def format_accuracy_row(report: MetricsReport, method: str) -> str:
    """One table row: per-class accuracy then Average, in percent."""
    cells = []
    for name in CLASS_MANIFEST_NAMES:
        v = report.per_class[name]["accuracy"]
        cells.append("   --" if v is None else f"{100 * v:6.2f}")
    cells.append(f"{100 * report.accuracy:6.2f}")
    return f"{method:<12}" + " ".join(cells)


def accuracy_table(report: MetricsReport, method: str) -> str:
    header = f"{'Method':<12}" + " ".join(
        f"{CLASS_DISPLAY_NAMES[ClassLabel(i)][:6]:>6}" for i in range(len(CLASS_MANIFEST_NAMES))
    )
    return header + "  Avg\n" + format_accuracy_row(report, method)


# -- figures -----------------------------------------------------------


def plot_confusion(cm: np.ndarray, path: Path) -> None:
    plt = _pyplot()
    display = [CLASS_DISPLAY_NAMES[ClassLabel(i)] for i in range(cm.shape[0])]
    fig, ax = plt.subplots(figsize=(5.2, 4.6))
    im = ax.imshow(cm, cmap="Blues")
    ax.set_xticks(range(len(display)), display, rotation=30, ha="right")
    ax.set_yticks(range(len(display)), display)
    ax.set_xlabel("Predicted")
    ax.set_ylabel("True")
    thresh = cm.max() / 2 if cm.max() else 0.5
    for i in range(cm.shape[0]):
        for j in range(cm.shape[1]):
            ax.text(
                j, i, str(int(cm[i, j])),
                ha="center", va="center",
                color="white" if cm[i, j] > thresh else "black",
            )
    fig.colorbar(im, ax=ax, shrink=0.85)
    fig.tight_layout()
    _save_svg(fig, path)
    plt.close(fig)


def plot_roc(roc: dict, auc: dict, path: Path) -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5.2, 4.6))
    for name, points in roc.items():
        pts = np.asarray(points)
        label = CLASS_DISPLAY_NAMES[ClassLabel(CLASS_MANIFEST_NAMES.index(name))]
        a = auc.get(name)
        if a is not None:
            label = f"{label} (AUC {a:.3f})"
        ax.plot(pts[:, 0], pts[:, 1], label=label)
    ax.plot([0, 1], [0, 1], "k--", linewidth=0.8)
    ax.set_xlabel("False positive rate")
    ax.set_ylabel("True positive rate")
    ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    _save_svg(fig, path)
    plt.close(fig)


def plot_loss(fold_reports: list[MetricsReport], path: Path) -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5.6, 4.2))
    for r in fold_reports:
        ax.plot(r.train_loss, color="tab:blue", alpha=0.35, linewidth=0.9)
        if r.test_loss:
            ax.plot(r.test_loss, color="tab:orange", alpha=0.35, linewidth=0.9)
    mean_train = np.mean([r.train_loss for r in fold_reports], axis=0)
    ax.plot(mean_train, color="tab:blue", linewidth=1.8, label="train (mean)")
    if all(r.test_loss for r in fold_reports):
        mean_test = np.mean([r.test_loss for r in fold_reports], axis=0)
        ax.plot(mean_test, color="tab:orange", linewidth=1.8, label="test (mean)")
    ax.set_xlabel("Epoch")
    ax.set_ylabel("Cross-entropy loss")
    ax.legend()
    fig.tight_layout()
    _save_svg(fig, path)
    plt.close(fig)


# -- attention exports -------------------------------------------------


def export_attention(report: AttentionReport, out_dir: str | Path, top_k: int = 50) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    rows = []
    for stream, values in (("3djp", report.joint_importance_jp), ("3drjdp", report.joint_importance_rjdp)):
        for j, v in enumerate(values):
            rows.append([stream, j, JOINT_NAMES[j], repr(float(v))])
    _write_csv(out / "joint_importance.csv", ["stream", "joint_index", "joint_name", "importance"], rows)

    from .features import pair_from_index

    rows = []
    for f, v in enumerate(report.pair_importance):
        i, j = pair_from_index(f)
        rows.append([f, i, j, JOINT_NAMES[i - 1], JOINT_NAMES[j - 1], repr(float(v))])
    _write_csv(
        out / "pair_importance.csv",
        ["pair_index", "anchor", "other", "anchor_name", "other_name", "importance"],
        rows,
    )

    rows = [[j, JOINT_NAMES[j], repr(float(v))] for j, v in enumerate(report.per_joint_aggregate)]
    _write_csv(out / "per_joint_aggregate.csv", ["joint_index", "joint_name", "aggregate_importance"], rows)

    rows = []
    for rank, (f, i, j, v) in enumerate(report.top_pairs[:top_k], start=1):
        rows.append([rank, f, JOINT_NAMES[i - 1], JOINT_NAMES[j - 1], repr(float(v))])
    _write_csv(
        out / f"top{top_k}_pairs.csv",
        ["rank", "pair_index", "anchor_name", "other_name", "importance"],
        rows,
    )

    plot_skeleton_importance(report.per_joint_aggregate, out / "skeleton_importance.svg")
    plot_top_pairs(report.top_pairs[:top_k], out / "top_pairs.svg")
    return out


def plot_skeleton_importance(values: np.ndarray, path: Path) -> None:
    """Stick figure with marker area proportional to joint importance."""
    plt = _pyplot()
    xy = np.array([REST_POSE_2D[name] for name in JOINT_NAMES])
    v = np.asarray(values, dtype=np.float64)
    vmax = v.max() if v.max() > 0 else 1.0
    fig, ax = plt.subplots(figsize=(4.2, 5.4))
    for a, b in SKELETON_EDGES:
        ax.plot([xy[a, 0], xy[b, 0]], [xy[a, 1], xy[b, 1]], color="0.6", linewidth=1.2, zorder=1)
    ax.scatter(xy[:, 0], xy[:, 1], s=40 + 360 * v / vmax, color="black", zorder=2)
    for j, name in enumerate(JOINT_NAMES):
        ax.annotate(name, (xy[j, 0], xy[j, 1]), fontsize=5, xytext=(4, 3), textcoords="offset points")
    ax.set_aspect("equal")
    ax.axis("off")
    fig.tight_layout()
    _save_svg(fig, path)
    plt.close(fig)


def plot_top_pairs(top_pairs: list, path: Path) -> None:
    plt = _pyplot()
    labels = [f"{JOINT_NAMES[i - 1]} - {JOINT_NAMES[j - 1]}" for _, i, j, _ in top_pairs]
    values = [v for _, _, _, v in top_pairs]
    fig, ax = plt.subplots(figsize=(6.2, 0.16 * len(top_pairs) + 1.2))
    pos = np.arange(len(top_pairs))
    ax.barh(pos, values, color="tab:blue")
    ax.set_yticks(pos, labels, fontsize=5)
    ax.invert_yaxis()
    ax.set_xlabel("Gate importance")
    fig.tight_layout()
    _save_svg(fig, path)
    plt.close(fig)
