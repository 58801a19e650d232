"""Synthetic-sample generation for balancing training classes.

A synthetic sample is a convex combination of two real samples from
different classes; it inherits the label of the dominant parent. Class
balancing tops every class up to a common target count, drawing the
dominant parent from the deficit class and the partner from a uniformly
random other class.
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from .data import MotionSample
from .skeleton import ClassLabel

DEFAULT_LAMBDA = 0.9


class AugmentError(ValueError):
    """Raised for invalid mixing requests or unbalanceable splits."""


@dataclass
class MixupConfig:
    lam: float = DEFAULT_LAMBDA
    target_per_class: int | None = None  # None: match the largest class
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.lam <= 1.0:
            raise AugmentError(f"lambda must be in [0, 1], got {self.lam}")
        if self.target_per_class is not None and self.target_per_class < 1:
            raise AugmentError("target_per_class must be positive")


def mixup(a: MotionSample, b: MotionSample, lam: float, sample_id: str | None = None) -> MotionSample:
    """Blend two samples of different classes: lam * a + (1 - lam) * b."""
    if a.positions.shape != b.positions.shape:
        raise AugmentError(
            f"shape mismatch: {a.positions.shape} vs {b.positions.shape}"
        )
    if a.label == b.label:
        raise AugmentError(f"mixup parents must differ in class, both are {a.label.name}")
    if not 0.0 <= lam <= 1.0:
        raise AugmentError(f"lambda must be in [0, 1], got {lam}")
    positions = lam * a.positions + (1.0 - lam) * b.positions
    return MotionSample(
        positions=positions,
        label=a.label,
        sample_id=sample_id or f"mix({a.sample_id},{b.sample_id})",
        is_synthetic=True,
    )


def balance_split(
    train: list[MotionSample], cfg: MixupConfig
) -> tuple[list[MotionSample], list[dict]]:
    """Top up every class in a training split to a common per-class count.

    Returns the balanced list (originals first, in input order) and a record
    of the synthetic samples created: one dict per sample with parents,
    lambda and seed, suitable for writing as an augmentation manifest.

    Deterministic given cfg.seed and the input order.
    """
    by_class: dict[ClassLabel, list[MotionSample]] = defaultdict(list)
    for sample in train:
        by_class[sample.label].append(sample)

    present = [label for label in ClassLabel if by_class[label]]
    if len(present) < 2:
        raise AugmentError("balancing needs at least 2 classes present")
    missing = [label.name for label in ClassLabel if not by_class[label]]
    if missing:
        raise AugmentError(f"classes absent from training split: {missing}")

    counts = {label: len(by_class[label]) for label in ClassLabel}
    target = cfg.target_per_class
    if target is None:
        target = max(counts.values())
    low = [f"{label.name}={n}" for label, n in counts.items() if n > target]
    if low:
        raise AugmentError(f"target {target} below existing class counts: {low}")

    rng = np.random.default_rng(cfg.seed)
    out = list(train)
    records = []
    serial = 0
    for label in ClassLabel:
        pool_a = by_class[label]
        for _ in range(target - counts[label]):
            a = pool_a[rng.integers(len(pool_a))]
            other = [c for c in ClassLabel if c != label]
            partner_class = other[rng.integers(len(other))]
            pool_b = by_class[partner_class]
            b = pool_b[rng.integers(len(pool_b))]
            sample_id = f"syn{serial:04d}_{a.sample_id}_{b.sample_id}"
            serial += 1
            out.append(mixup(a, b, cfg.lam, sample_id=sample_id))
            records.append(
                {
                    "synthetic_id": sample_id,
                    "parent_a": a.sample_id,
                    "parent_b": b.sample_id,
                    "label": label.manifest_name,
                    "lambda": cfg.lam,
                    "seed": cfg.seed,
                }
            )
    return out, records


def write_augmentation_manifest(path: str, records: list[dict]) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(records, handle, indent=2, sort_keys=True)
        handle.write("\n")
