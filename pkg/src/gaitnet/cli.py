"""Command-line entry point: synth, cv, ablate, attention.

One binary with subcommands; every run is deterministic given its flags
and writes an effective-config echo (config.ini) into its output
directory. Progress goes to stderr; machine-readable results go to
files, human-readable summaries to stdout.

Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 numeric
failure during training or evaluation.
"""

from __future__ import annotations

import argparse
import configparser
import sys
from dataclasses import dataclass, replace
from pathlib import Path

from .augment import MixupConfig
from .data import DataError, Dataset, load_dataset, normalize_dataset
from .evaluate import TrainConfig, cross_validate
from .features import build_jp, build_rjdp, stack_features
from .model import (
    HEAD_DISPLAY,
    HEAD_VARIANTS,
    VARIANT_DISPLAY,
    VARIANTS,
    ModelConfig,
    extract_attention,
)
from .nn import NumericError
from .report import accuracy_table, export_attention, export_report, write_json
from .skeleton import NUM_CLASSES, ClassLabel
from .synth import generate_dataset

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_NUMERIC = 4

# Table-5 row order.
ABLATION_ORDER = ("no-cnn", "no-maxp", "sin-cnn", "full")


class ConfigError(ValueError):
    """Invalid flag, config key, or config value."""


def _log(message: str) -> None:
    print(f"[gaitnet] {message}", file=sys.stderr, flush=True)


# -- run configuration --------------------------------------------------


@dataclass
class RunConfig:
    """Effective settings of one run; mirrors the config file sections."""

    data: str = ""
    frames: int = 100
    variant: str = "2s-cnn"
    stream_channels: int = 3
    head_channels: int = 8
    head_variant: str = "full"
    pool_h: int = 1
    pool_w: int = 1
    attention: bool = False
    fc_hidden: tuple[int, ...] = (256, 128, 64)
    epochs: int = 80
    lr: float = 0.003
    batch_size: int = 57
    k_folds: int = 5
    seed: int = 0
    jobs: int = 1
    lam: float = 0.9
    target_per_class: int | None = None
    augment_seed: int = 0


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _parse_ints(text: str) -> tuple[int, ...]:
    cells = [c.strip() for c in text.split(",") if c.strip()]
    if not cells:
        raise ValueError("expected a comma-separated list of integers")
    return tuple(int(c) for c in cells)


def _parse_opt_int(text: str) -> int | None:
    return None if not text.strip() else int(text)


# section -> key -> (RunConfig attribute, parser)
_SCHEMA = {
    "data": {
        "path": ("data", str),
        "frames": ("frames", int),
    },
    "model": {
        "variant": ("variant", str),
        "stream_channels": ("stream_channels", int),
        "head_channels": ("head_channels", int),
        "head_variant": ("head_variant", str),
        "pool_h": ("pool_h", int),
        "pool_w": ("pool_w", int),
        "attention": ("attention", _parse_bool),
        "fc_hidden": ("fc_hidden", _parse_ints),
    },
    "train": {
        "epochs": ("epochs", int),
        "lr": ("lr", float),
        "batch_size": ("batch_size", int),
        "k_folds": ("k_folds", int),
        "seed": ("seed", int),
        "jobs": ("jobs", int),
    },
    "augment": {
        "lam": ("lam", float),
        "target_per_class": ("target_per_class", _parse_opt_int),
        "seed": ("augment_seed", int),
    },
}


def read_config(path: str | Path) -> RunConfig:
    """Parse a config file, rejecting unknown sections and keys."""
    parser = configparser.RawConfigParser()
    try:
        with open(path, "r", encoding="utf-8") as handle:
            parser.read_file(handle)
    except OSError:
        raise
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    cfg = RunConfig()
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"{path}: unknown config section [{section}]")
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"{path}: unknown config key {key!r} in [{section}]")
            attr, parse = _SCHEMA[section][key]
            try:
                setattr(cfg, attr, parse(raw))
            except ValueError as exc:
                raise ConfigError(f"{path}: [{section}] {key} = {raw!r}: {exc}") from exc
    return cfg


def write_config_echo(cfg: RunConfig, path: Path) -> None:
    """Write the effective configuration in the accepted file format."""
    parser = configparser.RawConfigParser()
    values = {
        "data": {"path": cfg.data, "frames": cfg.frames},
        "model": {
            "variant": cfg.variant,
            "stream_channels": cfg.stream_channels,
            "head_channels": cfg.head_channels,
            "head_variant": cfg.head_variant,
            "pool_h": cfg.pool_h,
            "pool_w": cfg.pool_w,
            "attention": str(cfg.attention).lower(),
            "fc_hidden": ",".join(str(v) for v in cfg.fc_hidden),
        },
        "train": {
            "epochs": cfg.epochs,
            "lr": cfg.lr,
            "batch_size": cfg.batch_size,
            "k_folds": cfg.k_folds,
            "seed": cfg.seed,
            "jobs": cfg.jobs,
        },
        "augment": {
            "lam": cfg.lam,
            "target_per_class": "" if cfg.target_per_class is None else cfg.target_per_class,
            "seed": cfg.augment_seed,
        },
    }
    for section, keys in values.items():
        parser.add_section(section)
        for key, value in keys.items():
            parser.set(section, key, str(value))
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as handle:
        parser.write(handle)


_FLAG_ATTRS = [
    "data",
    "frames",
    "variant",
    "stream_channels",
    "head_channels",
    "head_variant",
    "pool_h",
    "pool_w",
    "attention",
    "fc_hidden",
    "epochs",
    "lr",
    "batch_size",
    "k_folds",
    "seed",
    "jobs",
    "lam",
    "target_per_class",
    "augment_seed",
]


def effective_config(args: argparse.Namespace) -> RunConfig:
    """defaults < config file < command-line flags."""
    cfg = read_config(args.config) if getattr(args, "config", None) else RunConfig()
    for attr in _FLAG_ATTRS:
        value = getattr(args, attr, None)
        if value is not None:
            setattr(cfg, attr, value)
    if cfg.jobs < 1:
        raise ConfigError("--jobs must be >= 1")
    return cfg


def model_config(cfg: RunConfig) -> ModelConfig:
    try:
        return ModelConfig(
            variant=cfg.variant,
            stream_channels=cfg.stream_channels,
            head_channels=cfg.head_channels,
            head_variant=cfg.head_variant,
            pool_out=(cfg.pool_h, cfg.pool_w),
            attention=cfg.attention,
            frames=cfg.frames,
            fc_hidden=cfg.fc_hidden,
            seed=cfg.seed,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def train_config(cfg: RunConfig) -> TrainConfig:
    try:
        return TrainConfig(
            epochs=cfg.epochs,
            lr=cfg.lr,
            batch_size=cfg.batch_size,
            seed=cfg.seed,
            k_folds=cfg.k_folds,
            mixup=MixupConfig(
                lam=cfg.lam, target_per_class=cfg.target_per_class, seed=cfg.augment_seed
            ),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_run_dataset(cfg: RunConfig) -> Dataset:
    """Load the dataset named by the config and normalize every sample."""
    if not cfg.data:
        raise ConfigError("no dataset: pass --data or set [data] path in the config file")
    path = Path(cfg.data)
    manifest = path / "manifest.json" if path.is_dir() else path
    dataset = load_dataset(str(manifest))
    counts = "/".join(str(dataset.class_counts[ClassLabel(i)]) for i in range(NUM_CLASSES))
    _log(f"loaded {len(dataset)} samples ({counts}) from {manifest}")
    return normalize_dataset(dataset, t_target=cfg.frames)


# -- subcommands ---------------------------------------------------------


def cmd_synth(args: argparse.Namespace) -> int:
    try:
        counts = [int(c) for c in str(args.counts).split(",")]
    except ValueError as exc:
        raise ConfigError(f"--counts: {exc}") from exc
    if len(counts) != NUM_CLASSES:
        raise ConfigError(f"--counts needs {NUM_CLASSES} comma-separated values, got {len(counts)}")
    if any(c < 0 for c in counts):
        raise ConfigError("--counts values must be nonnegative")
    if sum(counts) == 0:
        raise ConfigError("--counts must request at least one sample")
    per_class = {ClassLabel(i): counts[i] for i in range(NUM_CLASSES)}
    out = Path(args.out)
    dataset = generate_dataset(per_class, seed=args.seed, out_dir=out)
    parser = configparser.RawConfigParser()
    parser.add_section("synth")
    parser.set("synth", "counts", ",".join(str(c) for c in counts))
    parser.set("synth", "seed", str(args.seed))
    with open(out / "config.ini", "w", encoding="utf-8") as handle:
        parser.write(handle)
    _log(f"generated {len(dataset)} samples")
    print(f"wrote {len(dataset)} samples to {out}")
    return EXIT_OK


def _run_cv(dataset: Dataset, cfg: RunConfig, m_cfg: ModelConfig):
    t_cfg = train_config(cfg)
    _log(
        f"cross-validating {m_cfg.variant} ({m_cfg.head_variant} head): "
        f"{t_cfg.k_folds} folds, {t_cfg.epochs} epochs, seed {t_cfg.seed}"
    )
    return cross_validate(dataset, m_cfg, t_cfg, jobs=cfg.jobs, progress=_log)


def cmd_cv(args: argparse.Namespace) -> int:
    cfg = effective_config(args)
    m_cfg = model_config(cfg)
    dataset = load_run_dataset(cfg)
    result = _run_cv(dataset, cfg, m_cfg)
    out = Path(args.out)
    write_config_echo(cfg, out / "config.ini")
    export_report(
        [run.report for run in result.folds],
        out,
        average=result.average,
        variant=cfg.variant,
        seed=cfg.seed,
        param_count=result.param_count,
        per_sample_test_ms=result.per_sample_test_ms,
        pooled=(result.pooled_labels, result.pooled_probs),
    )
    result.folds[0].model.write_architecture(out / "model.json")
    for run in result.folds:
        run.model.save(out / f"fold{run.split.fold}.ckpt", adam=run.adam, rng_state=run.rng_state)
    write_json(
        out / "folds.json",
        {
            "folds": [
                {"fold": run.split.fold, "train_ids": run.split.train_ids, "test_ids": run.split.test_ids}
                for run in result.folds
            ]
        },
    )
    _log(f"report written to {out}")
    print(accuracy_table(result.average, VARIANT_DISPLAY[cfg.variant]))
    return EXIT_OK


def cmd_ablate(args: argparse.Namespace) -> int:
    cfg = effective_config(args)
    if cfg.variant != "2s-cnn":
        raise ConfigError("ablation studies the two-stream model; --variant must be 2s-cnn")
    dataset = load_run_dataset(cfg)
    out = Path(args.out)
    write_config_echo(cfg, out / "config.ini")
    rows = []
    for head in ABLATION_ORDER:
        m_cfg = model_config(replace(cfg, head_variant=head))
        result = _run_cv(dataset, cfg, m_cfg)
        rows.append(
            {
                "method": HEAD_DISPLAY[head],
                "params": result.param_count,
                "test_ms": result.per_sample_test_ms,
                "accuracy": result.average.accuracy,
            }
        )
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "ablation.csv", "w", encoding="utf-8", newline="\n") as handle:
        handle.write("method,params,test_ms,accuracy\n")
        for row in rows:
            handle.write(
                f"{row['method']},{row['params']},{row['test_ms']:.3f},{row['accuracy']:.4f}\n"
            )
    header = f"{'Method':<10}{'Params':>8}{'Test ms':>9}{'Accuracy':>10}"
    lines = [
        f"{row['method']:<10}{row['params']:>8}{row['test_ms']:>9.3f}{100 * row['accuracy']:>9.2f}%"
        for row in rows
    ]
    print("\n".join([header] + lines))
    return EXIT_OK


def cmd_attention(args: argparse.Namespace) -> int:
    cfg = effective_config(args)
    cfg.attention = True
    if cfg.variant != "2s-cnn":
        raise ConfigError("attention export needs both streams; --variant must be 2s-cnn")
    m_cfg = model_config(cfg)
    dataset = load_run_dataset(cfg)
    result = _run_cv(dataset, cfg, m_cfg)
    by_id = dataset.by_id()
    runs = []
    for run in result.folds:
        test = [by_id[sid] for sid in run.split.test_ids]
        runs.append((run.model, stack_features(test, build_jp), stack_features(test, build_rjdp)))
    report = extract_attention(runs, top_k=args.top_k)
    out = Path(args.out)
    write_config_echo(cfg, out / "config.ini")
    export_attention(report, out, top_k=args.top_k)
    _log(f"attention report written to {out}")
    print(accuracy_table(result.average, VARIANT_DISPLAY[cfg.variant]))
    best = report.top_pairs[0]
    print(f"strongest pair: joints {best[1]}-{best[2]} (importance {best[3]:.4f})")
    return EXIT_OK


# -- parser --------------------------------------------------------------


def _add_common_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--data", help="dataset directory or manifest.json path")
    sub.add_argument("--config", help="config file (sections [data] [model] [train] [augment])")
    sub.add_argument("--out", required=True, help="output directory")
    sub.add_argument("--frames", type=int, help="normalized frame count (default 100)")
    sub.add_argument("--stream-channels", dest="stream_channels", type=int)
    sub.add_argument("--head-channels", dest="head_channels", type=int)
    sub.add_argument("--head-variant", dest="head_variant", choices=HEAD_VARIANTS)
    sub.add_argument("--pool-h", dest="pool_h", type=int)
    sub.add_argument("--pool-w", dest="pool_w", type=int)
    sub.add_argument("--attention", action=argparse.BooleanOptionalAction, default=None)
    sub.add_argument("--fc-hidden", dest="fc_hidden", type=_parse_ints)
    sub.add_argument("--epochs", type=int)
    sub.add_argument("--lr", type=float)
    sub.add_argument("--batch-size", dest="batch_size", type=int)
    sub.add_argument("--k-folds", dest="k_folds", type=int)
    sub.add_argument("--seed", type=int)
    sub.add_argument("--jobs", type=int, help="fold-level worker processes (default 1)")
    sub.add_argument("--lam", type=float, help="mixup mixing coefficient")
    sub.add_argument("--target-per-class", dest="target_per_class", type=int)
    sub.add_argument("--augment-seed", dest="augment_seed", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gaitnet",
        description="Two-stream convolutional gait classification pipeline.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    synth = subs.add_parser("synth", help="generate a labeled synthetic dataset")
    synth.add_argument("--out", required=True, help="output directory")
    synth.add_argument("--counts", default="50,50,50,50", help="per-class sample counts a,b,c,d")
    synth.add_argument("--seed", type=int, default=0)
    synth.set_defaults(func=cmd_synth)

    cv = subs.add_parser("cv", help="stratified k-fold cross-validation")
    _add_common_flags(cv)
    cv.add_argument("--variant", choices=VARIANTS)
    cv.set_defaults(func=cmd_cv)

    ablate = subs.add_parser("ablate", help="run the four head variants")
    _add_common_flags(ablate)
    ablate.set_defaults(func=cmd_ablate)

    attention = subs.add_parser("attention", help="train with channel attention and export importances")
    _add_common_flags(attention)
    attention.add_argument("--variant", choices=VARIANTS)
    attention.add_argument("--top-k", dest="top_k", type=int, default=50)
    attention.set_defaults(func=cmd_attention)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"gaitnet: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericError as exc:
        print(f"gaitnet: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except DataError as exc:
        print(f"gaitnet: data error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"gaitnet: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"gaitnet: i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
