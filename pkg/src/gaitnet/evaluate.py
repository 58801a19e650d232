"""Stratified k-fold cross-validation and the training loop.

Folds are built over original samples only; each fold's training set is
balanced with mixup synthetics before training, so synthetic samples
can never leak into a test split. All randomness for a fold (model
init, mixup pairing, batch shuffling) derives from (seed, fold index),
which makes results independent of fold execution order.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from .augment import MixupConfig, balance_split
from .data import Dataset, MotionSample
from .features import build_jp, build_rjdp, stack_features
from .metrics import MetricsReport, average_reports, report_from_predictions
from .model import GaitClassifier, ModelConfig
from .nn import Adam, NumericError
from .nn.loss import one_hot


@dataclass
class TrainConfig:
    epochs: int = 80
    lr: float = 0.003
    batch_size: int = 57
    seed: int = 0
    k_folds: int = 5
    mixup: MixupConfig = field(default_factory=MixupConfig)

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.lr < 0:
            raise ValueError("lr must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.k_folds < 2:
            raise ValueError("k_folds must be >= 2")


@dataclass
class FoldSplit:
    fold: int
    train_ids: list[str]
    test_ids: list[str]


def stratified_kfold(dataset: Dataset, k: int, seed: int) -> list[FoldSplit]:
    """Deterministic stratified folds; per-class fold counts differ by <= 1."""
    if k < 2:
        raise ValueError("k must be >= 2")
    if not dataset.samples:
        raise ValueError("empty dataset")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    folds: list[list[str]] = [[] for _ in range(k)]
    assigned = 0
    for label, ids in sorted(dataset.ids_by_class().items()):
        order = rng.permutation(len(ids))
        # Round-robin deal starting where the previous class stopped,
        # so remainders spread across folds instead of piling on fold 0.
        for i, pos in enumerate(order):
            folds[(assigned + i) % k].append(ids[pos])
        assigned += len(ids)
    all_ids = set()
    for fold_ids in folds:
        all_ids.update(fold_ids)
    return [
        FoldSplit(
            fold=f,
            train_ids=[sid for g in range(k) if g != f for sid in folds[g]],
            test_ids=list(folds[f]),
        )
        for f in range(k)
    ]


def _fold_seeds(seed: int, fold: int) -> tuple[int, int, int]:
    """Independent (model, mixup, shuffle) seeds for one fold."""
    state = np.random.SeedSequence(entropy=(seed, fold)).generate_state(3)
    return int(state[0]), int(state[1]), int(state[2])


def _features_for(model: GaitClassifier, samples: list[MotionSample]):
    cfg = model.cfg
    jp = stack_features(samples, build_jp) if cfg.variant in ("2s-cnn", "3djp-cnn", "fcnet") else None
    rjdp = stack_features(samples, build_rjdp) if cfg.variant in ("2s-cnn", "3drjdp-cnn", "fcnet") else None
    return jp, rjdp


def _batched_losses(model: GaitClassifier, jp, rjdp, targets, batch_size: int = 64) -> np.ndarray:
    n = targets.shape[0]
    out = np.empty(n)
    for lo in range(0, n, batch_size):
        hi = min(lo + batch_size, n)
        losses, _, _ = model.loss_and_grad(
            None if jp is None else jp[lo:hi],
            None if rjdp is None else rjdp[lo:hi],
            targets[lo:hi],
        )
        out[lo:hi] = losses
    return out


@dataclass
class TrainResult:
    train_loss: list[float]
    test_loss: list[float]
    adam: Adam
    synthetic_records: list[dict]
    rng_state: dict


def train(
    model: GaitClassifier,
    train_samples: list[MotionSample],
    cfg: TrainConfig,
    test_samples: list[MotionSample] | None = None,
    mixup_seed: int | None = None,
    shuffle_seed: int | None = None,
) -> TrainResult:
    """Augment, then run epochs of shuffled minibatch Adam steps.

    Records the mean per-sample training loss of each epoch and, when a
    test set is given, the test loss per epoch (evaluation only; test
    data never influences updates). Aborts with NumericError naming the
    offending layer if a non-finite loss appears.
    """
    if not train_samples:
        raise ValueError("empty training split")
    mix_cfg = replace(cfg.mixup, seed=cfg.mixup.seed if mixup_seed is None else mixup_seed)
    augmented, records = balance_split(train_samples, mix_cfg)
    jp, rjdp = _features_for(model, augmented)
    y = one_hot(np.array([int(s.label) for s in augmented]), model.cfg.num_classes)
    test_feats = None
    if test_samples:
        tjp, trjdp = _features_for(model, test_samples)
        ty = one_hot(np.array([int(s.label) for s in test_samples]), model.cfg.num_classes)
        test_feats = (tjp, trjdp, ty)

    n = len(augmented)
    adam = Adam(model.parameters(), lr=cfg.lr)
    rng = np.random.default_rng(
        np.random.SeedSequence(cfg.seed if shuffle_seed is None else shuffle_seed)
    )
    train_curve: list[float] = []
    test_curve: list[float] = []
    for _ in range(cfg.epochs):
        perm = rng.permutation(n)
        total = 0.0
        for lo in range(0, n, cfg.batch_size):
            idx = perm[lo : lo + cfg.batch_size]
            bjp = None if jp is None else jp[idx]
            brjdp = None if rjdp is None else rjdp[idx]
            adam.zero_grad()
            losses, _, grad = model.loss_and_grad(bjp, brjdp, y[idx])
            if not np.isfinite(losses).all():
                model.forward(bjp, brjdp, checked=True)  # names the layer
                raise NumericError("non-finite loss")
            model.backward(grad / idx.size)
            adam.step()
            total += float(losses.sum())
        train_curve.append(total / n)
        if test_feats is not None:
            tjp, trjdp, ty = test_feats
            test_curve.append(float(_batched_losses(model, tjp, trjdp, ty).mean()))
    return TrainResult(
        train_loss=train_curve,
        test_loss=test_curve,
        adam=adam,
        synthetic_records=records,
        rng_state=rng.bit_generator.state,
    )


def evaluate_model(model: GaitClassifier, test_samples: list[MotionSample]) -> MetricsReport:
    """Metrics of the frozen model on a test split."""
    if not test_samples:
        raise ValueError("empty test set")
    jp, rjdp = _features_for(model, test_samples)
    y_true = np.array([int(s.label) for s in test_samples])
    probs = model.predict_proba(jp, rjdp)
    return report_from_predictions(y_true, probs, model.cfg.num_classes)


@dataclass
class FoldRun:
    split: FoldSplit
    report: MetricsReport
    model: GaitClassifier
    adam: Adam
    rng_state: dict
    synthetic_records: list[dict]


@dataclass
class CVResult:
    folds: list[FoldRun]
    average: MetricsReport
    param_count: int
    per_sample_test_ms: float
    pooled_labels: np.ndarray
    pooled_probs: np.ndarray


def _run_fold(
    dataset: Dataset, split: FoldSplit, model_cfg: ModelConfig, train_cfg: TrainConfig
) -> tuple[FoldRun, np.ndarray, np.ndarray, float]:
    """Train and evaluate one fold; pure function of its arguments."""
    by_id = dataset.by_id()
    train_set = [by_id[sid] for sid in split.train_ids]
    test_set = [by_id[sid] for sid in split.test_ids]
    # Leakage guard: test folds contain disjoint original samples only.
    assert not any(s.is_synthetic for s in test_set), "synthetic sample in test fold"
    assert not set(split.train_ids) & set(split.test_ids), "train/test overlap"
    model_seed, mixup_seed, shuffle_seed = _fold_seeds(train_cfg.seed, split.fold)
    model = GaitClassifier(replace(model_cfg, seed=model_seed))
    result = train(
        model,
        train_set,
        train_cfg,
        test_samples=test_set,
        mixup_seed=mixup_seed,
        shuffle_seed=shuffle_seed,
    )
    split.train_ids = split.train_ids + [r["synthetic_id"] for r in result.synthetic_records]
    jp, rjdp = _features_for(model, test_set)
    t0 = time.perf_counter()
    probs = model.predict_proba(jp, rjdp)
    test_seconds = time.perf_counter() - t0
    y_true = np.array([int(s.label) for s in test_set])
    report = report_from_predictions(y_true, probs, model.cfg.num_classes)
    report.train_loss = result.train_loss
    report.test_loss = result.test_loss
    run = FoldRun(
        split=split,
        report=report,
        model=model,
        adam=result.adam,
        rng_state=result.rng_state,
        synthetic_records=result.synthetic_records,
    )
    return run, y_true, probs, test_seconds


def cross_validate(
    dataset: Dataset,
    model_cfg: ModelConfig,
    train_cfg: TrainConfig,
    jobs: int = 1,
    progress=None,
) -> CVResult:
    """Fold -> augment -> train -> evaluate, then average across folds.

    Every fold's randomness derives from (seed, fold index), so results
    are bit-identical whether folds run sequentially or in `jobs` worker
    processes. `progress`, when given, is called with one line per fold.
    """
    splits = stratified_kfold(dataset, train_cfg.k_folds, train_cfg.seed)
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor
        from itertools import repeat

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outs = []
            for out in pool.map(
                _run_fold, repeat(dataset), splits, repeat(model_cfg), repeat(train_cfg)
            ):
                outs.append(out)
                if progress is not None:
                    progress(f"fold {out[0].split.fold}: accuracy {out[0].report.accuracy:.4f}")
    else:
        outs = []
        for split in splits:
            out = _run_fold(dataset, split, model_cfg, train_cfg)
            outs.append(out)
            if progress is not None:
                progress(f"fold {split.fold}: accuracy {out[0].report.accuracy:.4f}")
    fold_runs = [out[0] for out in outs]
    test_seconds = sum(out[3] for out in outs)
    test_count = sum(out[1].size for out in outs)
    average = average_reports([run.report for run in fold_runs])
    return CVResult(
        folds=fold_runs,
        average=average,
        param_count=fold_runs[0].model.param_count(),
        per_sample_test_ms=1000.0 * test_seconds / max(1, test_count),
        pooled_labels=np.concatenate([out[1] for out in outs]),
        pooled_probs=np.concatenate([out[2] for out in outs]),
    )
