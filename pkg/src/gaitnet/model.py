"""Two-stream gait classifier, ablation variants and the FCNet baseline.

The 3DJP stream convolves positions with a 3x1 filter (stride 1,1); the
3DRJDP stream convolves pair displacements with a 3x(J-1) filter and
spatial stride J-1 so each output column summarizes the pairs anchored
at one joint. Mid-layer fusion concatenates the stream feature maps on
the channel axis; a configurable head (Full / NoCNN / NoMaxP / SinCNN)
maps the fused tensor to 4 logits. Softmax lives in the loss.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from .skeleton import NUM_CLASSES, NUM_JOINTS
from .nn import (
    AdaptiveMaxPool2d,
    Adam,
    Conv2d,
    Dense,
    Flatten,
    Layer,
    NumericError,
    Parameter,
    ReLU,
    SpatialGate,
    load_checkpoint,
    save_checkpoint,
    softmax_cross_entropy,
)

VARIANTS = ("2s-cnn", "3djp-cnn", "3drjdp-cnn", "fcnet")
HEAD_VARIANTS = ("full", "no-cnn", "no-maxp", "sin-cnn")
# Display names used in ablation outputs.
HEAD_DISPLAY = {"full": "Full", "no-cnn": "No-CNN", "no-maxp": "No-MaxP", "sin-cnn": "SinCNN"}
VARIANT_DISPLAY = {
    "2s-cnn": "2s-CNN",
    "3djp-cnn": "3DJP-CNN",
    "3drjdp-cnn": "3DRJDP-CNN",
    "fcnet": "FCNet",
}


@dataclass
class ModelConfig:
    variant: str = "2s-cnn"
    stream_channels: int = 3
    head_channels: int = 8
    head_variant: str = "full"
    pool_out: tuple[int, int] = (1, 1)
    attention: bool = False
    num_classes: int = NUM_CLASSES
    num_joints: int = NUM_JOINTS
    frames: int = 100
    fc_hidden: tuple[int, ...] = (256, 128, 64)
    seed: int = 0

    def __post_init__(self):
        self.pool_out = tuple(int(v) for v in self.pool_out)
        self.fc_hidden = tuple(int(v) for v in self.fc_hidden)
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}, expected one of {VARIANTS}")
        if self.head_variant not in HEAD_VARIANTS:
            raise ValueError(f"unknown head variant {self.head_variant!r}, expected one of {HEAD_VARIANTS}")
        if self.stream_channels < 1:
            raise ValueError("stream_channels must be >= 1")
        if self.head_channels < 1:
            raise ValueError("head_channels must be >= 1")
        if self.num_joints < 2:
            raise ValueError("num_joints must be >= 2")
        if self.frames < 5:
            raise ValueError("frames must be >= 5")
        if len(self.pool_out) != 2 or min(self.pool_out) < 1:
            raise ValueError("pool_out must be two positive sizes")
        if not self.fc_hidden or min(self.fc_hidden) < 1:
            raise ValueError("fc_hidden must be positive widths")

    @property
    def num_pairs(self) -> int:
        return self.num_joints * (self.num_joints - 1)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pool_out"] = list(self.pool_out)
        d["fc_hidden"] = list(self.fc_hidden)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        d = dict(d)
        d["pool_out"] = tuple(d["pool_out"])
        d["fc_hidden"] = tuple(d["fc_hidden"])
        return cls(**d)


@dataclass
class AttentionReport:
    """Gate activations averaged over evaluation samples and folds."""

    joint_importance_jp: np.ndarray  # (J,) stream-1 gates
    joint_importance_rjdp: np.ndarray  # (J,) mean of incident pair gates
    pair_importance: np.ndarray  # (J*(J-1),)
    per_joint_aggregate: np.ndarray  # (J,) sum over incident pairs
    top_pairs: list  # [(pair_index, anchor, other, importance)] descending


class GaitClassifier:
    """The full network for every variant, with explicit backward plumbing."""

    def __init__(self, cfg: ModelConfig):
        self.cfg = cfg
        rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
        j = cfg.num_joints
        cs = cfg.stream_channels
        self.conv_jp: Conv2d | None = None
        self.conv_rjdp: Conv2d | None = None
        self.relu_jp = ReLU("relu_jp")
        self.relu_rjdp = ReLU("relu_rjdp")
        self.gate_jp: SpatialGate | None = None
        self.gate_rjdp: SpatialGate | None = None
        self.head: list[Layer] = []
        self._fused_channels = 0

        if cfg.variant in ("2s-cnn", "3djp-cnn"):
            self.conv_jp = Conv2d("conv_jp", 3, 1, 3, cs, 1, 1, rng)
            self.conv_jp.needs_input_grad = False
        if cfg.variant in ("2s-cnn", "3drjdp-cnn"):
            self.conv_rjdp = Conv2d("conv_rjdp", 3, j - 1, 3, cs, 1, j - 1, rng)
            # The pair gate sits before this conv, so gradient must flow
            # back through the conv input only when attention is on.
            self.conv_rjdp.needs_input_grad = cfg.attention
        if cfg.attention and cfg.variant != "fcnet":
            if self.conv_jp is not None:
                self.gate_jp = SpatialGate("gate_jp", j, rng=rng)
            if self.conv_rjdp is not None:
                self.gate_rjdp = SpatialGate("gate_rjdp", cfg.num_pairs, rng=rng)

        if cfg.variant == "fcnet":
            in_len = cfg.frames * (j * 3 + cfg.num_pairs * 3)
            widths = (in_len,) + cfg.fc_hidden
            for i in range(len(cfg.fc_hidden)):
                self.head.append(Dense(f"fc{i + 1}", widths[i], widths[i + 1], rng))
                self.head.append(ReLU(f"fc{i + 1}_relu"))
            self.head.append(Dense("fc_out", cfg.fc_hidden[-1], cfg.num_classes, rng))
        else:
            streams = (self.conv_jp is not None) + (self.conv_rjdp is not None)
            cf = streams * cs
            self._fused_channels = cf
            hc = cfg.head_channels
            ph, pw = cfg.pool_out
            t2 = cfg.frames - 2
            if cfg.head_variant == "full":
                self.head = [
                    Conv2d("head_conv1", 3, 1, cf, hc, 1, 1, rng),
                    ReLU("head_relu1"),
                    Conv2d("head_conv2", 3, 1, hc, hc, 1, 1, rng),
                    ReLU("head_relu2"),
                    AdaptiveMaxPool2d(ph, pw, "head_pool"),
                    Flatten("head_flatten"),
                    Dense("fc_out", hc * ph * pw, cfg.num_classes, rng),
                ]
            elif cfg.head_variant == "sin-cnn":
                self.head = [
                    Conv2d("head_conv1", 3, 1, cf, hc, 1, 1, rng),
                    ReLU("head_relu1"),
                    AdaptiveMaxPool2d(ph, pw, "head_pool"),
                    Flatten("head_flatten"),
                    Dense("fc_out", hc * ph * pw, cfg.num_classes, rng),
                ]
            elif cfg.head_variant == "no-cnn":
                self.head = [
                    AdaptiveMaxPool2d(ph, pw, "head_pool"),
                    Flatten("head_flatten"),
                    Dense("fc_out", cf * ph * pw, cfg.num_classes, rng),
                ]
            else:  # no-maxp
                self.head = [
                    Conv2d("head_conv1", 3, 1, cf, hc, 1, 1, rng),
                    ReLU("head_relu1"),
                    Conv2d("head_conv2", 3, 1, hc, hc, 1, 1, rng),
                    ReLU("head_relu2"),
                    Flatten("head_flatten"),
                    Dense("fc_out", hc * (t2 - 4) * j, cfg.num_classes, rng),
                ]
        self._split_at = cfg.stream_channels if cfg.variant == "2s-cnn" else None

    # -- plumbing -----------------------------------------------------

    def parameters(self) -> list[Parameter]:
        params: list[Parameter] = []
        for layer in self._layers():
            params.extend(layer.parameters())
        return params

    def _layers(self) -> list[Layer]:
        layers: list[Layer] = []
        if self.conv_jp is not None:
            layers += [self.conv_jp, self.relu_jp]
            if self.gate_jp is not None:
                layers.append(self.gate_jp)
        if self.conv_rjdp is not None:
            if self.gate_rjdp is not None:
                layers.append(self.gate_rjdp)
            layers += [self.conv_rjdp, self.relu_rjdp]
        layers.extend(self.head)
        return layers

    def param_count(self) -> int:
        return sum(p.size for p in self.parameters())

    # -- forward / backward -------------------------------------------

    @staticmethod
    def _check(name: str, out: np.ndarray, checked: bool) -> np.ndarray:
        if checked and not np.isfinite(out).all():
            raise NumericError(f"non-finite output in layer {name}")
        return out

    def _check_input(self, x: np.ndarray | None, width: int, what: str) -> np.ndarray:
        if x is None:
            raise ValueError(f"variant {self.cfg.variant} requires {what} input")
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 4 or x.shape[2] != width or x.shape[3] != 3:
            raise ValueError(f"{what} input must be (N,T,{width},3), got {x.shape}")
        return x

    def forward(self, jp: np.ndarray | None, rjdp: np.ndarray | None, checked: bool = False) -> np.ndarray:
        cfg = self.cfg
        if cfg.variant == "fcnet":
            jp = self._check_input(jp, cfg.num_joints, "3DJP")
            rjdp = self._check_input(rjdp, cfg.num_pairs, "3DRJDP")
            n = jp.shape[0]
            x = np.concatenate([jp.reshape(n, -1), rjdp.reshape(n, -1)], axis=1)
            self._fc_split = jp.shape
            for layer in self.head:
                x = self._check(layer.name, layer.forward(x), checked)
            return x

        feats = []
        if self.conv_jp is not None:
            a = self._check_input(jp, cfg.num_joints, "3DJP")
            a = self._check("conv_jp", self.conv_jp.forward(a), checked)
            a = self._check("relu_jp", self.relu_jp.forward(a), checked)
            if self.gate_jp is not None:
                a = self._check("gate_jp", self.gate_jp.forward(a), checked)
            feats.append(a)
        if self.conv_rjdp is not None:
            b = self._check_input(rjdp, cfg.num_pairs, "3DRJDP")
            if self.gate_rjdp is not None:
                b = self._check("gate_rjdp", self.gate_rjdp.forward(b), checked)
            b = self._check("conv_rjdp", self.conv_rjdp.forward(b), checked)
            b = self._check("relu_rjdp", self.relu_rjdp.forward(b), checked)
            feats.append(b)
        x = np.concatenate(feats, axis=3) if len(feats) > 1 else feats[0]
        for layer in self.head:
            x = self._check(layer.name, layer.forward(x), checked)
        return x

    def backward(self, grad_logits: np.ndarray) -> None:
        g = grad_logits
        for layer in reversed(self.head):
            g = layer.backward(g)
        if self.cfg.variant == "fcnet":
            return
        if self._split_at is not None:
            ga, gb = g[..., : self._split_at], g[..., self._split_at :]
        elif self.conv_jp is not None:
            ga, gb = g, None
        else:
            ga, gb = None, g
        if self.conv_jp is not None:
            if self.gate_jp is not None:
                ga = self.gate_jp.backward(ga)
            self.conv_jp.backward(self.relu_jp.backward(ga))
        if self.conv_rjdp is not None:
            gb = self.conv_rjdp.backward(self.relu_rjdp.backward(gb))
            if self.gate_rjdp is not None:
                self.gate_rjdp.backward(gb)

    def loss_and_grad(self, jp, rjdp, targets, checked: bool = False):
        """Forward + loss; returns (per-sample losses, probs, grad_logits)."""
        logits = self.forward(jp, rjdp, checked=checked)
        return softmax_cross_entropy(logits, targets)

    def predict_proba(self, jp, rjdp, batch_size: int = 64) -> np.ndarray:
        n = (jp if jp is not None else rjdp).shape[0]
        out = np.empty((n, self.cfg.num_classes))
        for lo in range(0, n, batch_size):
            hi = min(lo + batch_size, n)
            logits = self.forward(
                None if jp is None else jp[lo:hi],
                None if rjdp is None else rjdp[lo:hi],
            )
            shifted = logits - logits.max(axis=1, keepdims=True)
            ez = np.exp(shifted)
            out[lo:hi] = ez / ez.sum(axis=1, keepdims=True)
        return out

    # -- description / persistence ------------------------------------

    def architecture(self) -> dict:
        layers = []
        for lyr in self._layers():
            entry: dict = {"name": lyr.name, "type": type(lyr).__name__}
            if isinstance(lyr, Conv2d):
                entry["filter"] = [lyr.f_t, lyr.f_s, lyr.c_in, lyr.c_out]
                entry["stride"] = [lyr.stride_t, lyr.stride_s]
            elif isinstance(lyr, Dense):
                entry["shape"] = [lyr.out_features, lyr.in_features]
            elif isinstance(lyr, AdaptiveMaxPool2d):
                entry["out"] = [lyr.out_h, lyr.out_w]
            elif isinstance(lyr, SpatialGate):
                entry["width"] = lyr.width
                entry["hidden"] = lyr.hidden
            layers.append(entry)
        return {
            "variant": self.cfg.variant,
            "head_variant": self.cfg.head_variant,
            "config": self.cfg.to_dict(),
            "layers": layers,
            "param_count": self.param_count(),
        }

    def save(self, path, adam: Adam | None = None, rng_state: dict | None = None) -> None:
        save_checkpoint(path, self.cfg.to_dict(), self.parameters(), adam=adam, rng_state=rng_state)

    @classmethod
    def load(cls, path) -> "GaitClassifier":
        ckpt = load_checkpoint(path)
        model = cls(ModelConfig.from_dict(ckpt["config"]))
        own = {p.name: p for p in model.parameters()}
        if set(own) != set(ckpt["params"]):
            raise ValueError(f"{path}: checkpoint parameters do not match architecture")
        for name, arr in ckpt["params"].items():
            if own[name].value.shape != arr.shape:
                raise ValueError(f"{path}: shape mismatch for {name}")
            own[name].value = arr.copy()
        return model

    def write_architecture(self, path) -> None:
        Path(path).write_text(json.dumps(self.architecture(), indent=2, sort_keys=True) + "\n")


def build_model(cfg: ModelConfig) -> GaitClassifier:
    return GaitClassifier(cfg)


def extract_attention(
    runs: list[tuple["GaitClassifier", np.ndarray, np.ndarray]],
    top_k: int = 50,
) -> AttentionReport:
    """Average gate activations over evaluation samples, then over folds.

    Args:
        runs: (trained model, jp tensor, rjdp tensor) per fold; models must
            have attention enabled.
        top_k: number of leading pairs to report.

    The per-joint aggregate sums the importances of the 2(J-1) ordered
    pairs incident to each joint; the stream-2 joint importance is the
    mean over those pairs so it stays a gate-scale value in [0, 1].
    """
    if not runs:
        raise ValueError("extract_attention needs at least one trained model")
    jp_means, pair_means = [], []
    num_joints = runs[0][0].cfg.num_joints
    for model, jp, rjdp in runs:
        if model.gate_jp is None or model.gate_rjdp is None:
            raise ValueError("attention was not enabled at training time")
        model.forward(jp, rjdp)
        jp_means.append(model.gate_jp.last_gate.mean(axis=0))
        pair_means.append(model.gate_rjdp.last_gate.mean(axis=0))
    joint_jp = np.mean(jp_means, axis=0)
    pair = np.mean(pair_means, axis=0)
    # Anchor-major ordered-pair layout for this skeleton size.
    anchors = np.repeat(np.arange(num_joints), num_joints - 1)
    slot = np.tile(np.arange(num_joints - 1), num_joints)
    others = slot + (slot >= anchors)
    aggregate = np.zeros(num_joints)
    np.add.at(aggregate, anchors, pair)
    np.add.at(aggregate, others, pair)
    joint_rjdp = aggregate / (2 * (num_joints - 1))
    order = np.lexsort((np.arange(pair.size), -pair))[: min(top_k, pair.size)]
    top = [(int(i), int(anchors[i]) + 1, int(others[i]) + 1, float(pair[i])) for i in order]
    return AttentionReport(
        joint_importance_jp=joint_jp,
        joint_importance_rjdp=joint_rjdp,
        pair_importance=pair,
        per_joint_aggregate=aggregate,
        top_pairs=top,
    )
