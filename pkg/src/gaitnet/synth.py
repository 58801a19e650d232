"""Parametric synthetic walking-motion generator.

A planar-harmonic gait model: the root translates forward at constant
speed while limbs swing as first-harmonic sinusoids of the cycle phase
phi = 2*pi*t/T (left limbs phase-shifted by pi). For an even T and no
noise this makes left and right trajectories exact half-period mirror
images. Class-conditioned deformations then break the pattern:

    Healthy             baseline
    JointProblem        knee/ankle range clipped
    MuscleWeakness      reduced swing amplitude plus left/right asymmetry
    NeurologicalDefect  high-frequency tremor on the extremities

Everything is deterministic under the config seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import DataError, Dataset, MotionSample, save_motion_csv
from .skeleton import ClassLabel, JOINT_INDEX, NUM_JOINTS


@dataclass
class SynthConfig:
    label: ClassLabel = ClassLabel.HEALTHY
    frames: int = 100
    stride: float = 0.9  # metres travelled per gait cycle
    cadence: float = 1.8  # steps per second (two steps per cycle)
    noise: float = 0.01  # positional noise sigma (m)
    asymmetry: float = 0.3  # left/right amplitude imbalance in [0,1]
    tremor_amplitude: float = 0.02  # m
    tremor_frequency: float = 5.0  # Hz
    seed: int = 0

    def __post_init__(self):
        self.label = ClassLabel(self.label)
        if self.frames < 10:
            raise ValueError("frames must be >= 10")
        for name in ("stride", "cadence", "noise", "tremor_amplitude", "tremor_frequency"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if not 0.0 <= self.asymmetry <= 1.0:
            raise ValueError("asymmetry must be in [0, 1]")


# Segment geometry (metres).
_PELVIS_HALF = 0.10
_HIP_DROP = 0.05
_THIGH = 0.45
_SHANK = 0.45
_TOE = 0.15
_SHOULDER_X = 0.20
_SHOULDER_Y = 0.42
_UPPER_ARM = 0.28
_FOREARM = 0.24
_HAND = 0.20
_SPINE_Y = 0.25
_NECK_Y = 0.45
_HEAD_Y = 0.62
_ROOT_Y = 1.00

_TREMOR_JOINTS = (
    "LeftForearm", "LeftHand", "RightForearm", "RightHand",
    "LeftFoot", "LeftToes", "RightFoot", "RightToes", "Head",
)


def generate(cfg: SynthConfig) -> MotionSample:
    """One gait cycle for one subject; canonical heading along +Z."""
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
    t = np.arange(cfg.frames)
    phi = 2.0 * np.pi * t / cfg.frames

    amp_hip = 0.55 * cfg.stride
    amp_knee = 1.10 * cfg.stride
    amp_ankle = 0.30
    amp_arm = 0.35 * cfg.stride
    scale = {"L": 1.0, "R": 1.0}
    arm_swing = 1.0
    knee_cap = ankle_cap = None
    if cfg.label == ClassLabel.JOINT_PROBLEM:
        severity = rng.uniform(0.55, 0.75)
        knee_cap = (1.0 - severity) * amp_knee
        ankle_cap = (1.0 - severity) * amp_ankle
    elif cfg.label == ClassLabel.MUSCLE_WEAKNESS:
        weak = rng.uniform(0.50, 0.65)
        scale = {"L": weak * (1.0 - cfg.asymmetry), "R": weak}
    elif cfg.label == ClassLabel.NEUROLOGICAL_DEFECT:
        # Parkinsonian-style rigidity: arm swing collapses while the legs
        # keep a near-normal pattern; tremor is added after the kinematics.
        arm_swing = rng.uniform(0.25, 0.45)

    pos = np.zeros((cfg.frames, NUM_JOINTS, 3))
    root = np.zeros((cfg.frames, 3))
    root[:, 0] = 0.02 * np.sin(phi)
    root[:, 1] = _ROOT_Y + 0.02 * np.cos(2.0 * phi)
    root[:, 2] = cfg.stride * t / cfg.frames

    def put(name: str, offset: np.ndarray) -> None:
        pos[:, JOINT_INDEX[name], :] = root + offset

    zero = np.zeros_like(phi)
    put("Hips", np.stack([zero, zero, zero], axis=1))
    put("Spine", np.stack([zero, zero + _SPINE_Y, zero], axis=1))
    put("Neck", np.stack([zero, zero + _NECK_Y, zero], axis=1))
    put("Head", np.stack([zero, zero + _HEAD_Y, zero], axis=1))

    for side, sign, phase in (("L", 1.0, np.pi), ("R", -1.0, 0.0)):
        s = scale[side]
        theta_hip = s * amp_hip * np.sin(phi + phase)
        knee_flex = s * amp_knee * 0.5 * (1.0 + np.sin(phi + phase + 0.6))
        ankle = s * amp_ankle * np.sin(phi + phase + 0.5)
        if knee_cap is not None:
            knee_flex = np.minimum(knee_flex, knee_cap)
            ankle = np.clip(ankle, -ankle_cap, ankle_cap)
        hip = np.stack([zero + sign * _PELVIS_HALF, zero - _HIP_DROP, zero], axis=1)
        put(f"{side_name(side)}UpperLeg", hip)
        knee = hip + _THIGH * np.stack([zero, -np.cos(theta_hip), np.sin(theta_hip)], axis=1)
        put(f"{side_name(side)}Leg", knee)
        theta_shank = theta_hip - knee_flex
        foot = knee + _SHANK * np.stack([zero, -np.cos(theta_shank), np.sin(theta_shank)], axis=1)
        put(f"{side_name(side)}Foot", foot)
        theta_toe = theta_shank + ankle
        toes = foot + _TOE * np.stack([zero, np.sin(theta_toe), np.cos(theta_toe)], axis=1)
        put(f"{side_name(side)}Toes", toes)

        # Arms swing against the same-side leg (with the opposite leg).
        arm_phase = phase + np.pi
        theta_arm = s * arm_swing * amp_arm * np.sin(phi + arm_phase)
        elbow = 0.35 + s * arm_swing * 0.25 * 0.5 * (1.0 + np.sin(phi + arm_phase + 0.4))
        shoulder = np.stack([zero + sign * _SHOULDER_X, zero + _SHOULDER_Y, zero], axis=1)
        put(f"{side_name(side)}Shoulder", shoulder)
        arm = shoulder + _UPPER_ARM * np.stack([zero, -np.cos(theta_arm), np.sin(theta_arm)], axis=1)
        put(f"{side_name(side)}Arm", arm)
        theta_fore = theta_arm + elbow
        fore = arm + _FOREARM * np.stack([zero, -np.cos(theta_fore), np.sin(theta_fore)], axis=1)
        put(f"{side_name(side)}Forearm", fore)
        hand = fore + _HAND * np.stack([zero, -np.cos(theta_fore), np.sin(theta_fore)], axis=1)
        put(f"{side_name(side)}Hand", hand)

    if cfg.label == ClassLabel.NEUROLOGICAL_DEFECT and cfg.tremor_amplitude > 0:
        dt = 2.0 / (cfg.cadence * cfg.frames) if cfg.cadence > 0 else 1.0 / cfg.frames
        tau = t * dt
        for name in _TREMOR_JOINTS:
            phases = rng.uniform(0.0, 2.0 * np.pi, size=3)
            wobble = cfg.tremor_amplitude * np.sin(
                2.0 * np.pi * cfg.tremor_frequency * tau[:, None] + phases
            )
            pos[:, JOINT_INDEX[name], :] += wobble

    if cfg.noise > 0:
        pos += rng.normal(0.0, cfg.noise, size=pos.shape)

    return MotionSample(
        positions=pos,
        label=cfg.label,
        sample_id=f"synthgait_{cfg.label.manifest_name}_{cfg.seed}",
    ).validate()


def side_name(side: str) -> str:
    return "Left" if side == "L" else "Right"


def _random_placement(rng: np.random.Generator, positions: np.ndarray) -> np.ndarray:
    """Random heading rotation about +Y plus a ground-plane offset."""
    psi = rng.uniform(-np.pi, np.pi)
    c, s = np.cos(psi), np.sin(psi)
    x, y, z = positions[..., 0], positions[..., 1], positions[..., 2]
    out = np.empty_like(positions)
    out[..., 0] = c * x + s * z
    out[..., 1] = y
    out[..., 2] = -s * x + c * z
    out[..., 0] += rng.uniform(-2.0, 2.0)
    out[..., 2] += rng.uniform(-2.0, 2.0)
    return out


def generate_dataset(
    per_class_counts: dict[ClassLabel, int],
    seed: int,
    out_dir: str | Path | None = None,
) -> Dataset:
    """Generate labelled samples with per-sample parameter jitter.

    Raw frame counts, stride, cadence and placement vary per sample
    (deterministically from the seed) so downstream resampling and
    alignment are exercised. When out_dir is given, motion CSVs and a
    manifest.json in the standard format are written there.
    """
    counts = {ClassLabel(k): int(v) for k, v in per_class_counts.items()}
    if any(v < 0 for v in counts.values()):
        raise ValueError("per-class counts must be nonnegative")
    if sum(counts.values()) == 0:
        raise DataError("empty dataset: all per-class counts are zero")
    samples = []
    for label in sorted(counts):
        for k in range(counts[label]):
            ss = np.random.SeedSequence(entropy=(seed, int(label), k))
            rng = np.random.default_rng(ss)
            cfg = SynthConfig(
                label=label,
                frames=int(rng.integers(80, 141)),
                stride=float(rng.uniform(0.85, 1.05)),
                cadence=float(rng.uniform(1.5, 2.1)),
                noise=0.01,
                asymmetry=float(rng.uniform(0.25, 0.45)),
                tremor_amplitude=float(rng.uniform(0.035, 0.06)),
                tremor_frequency=float(rng.uniform(4.0, 7.0)),
                seed=int(ss.generate_state(1)[0]),
            )
            sample = generate(cfg)
            placed = _random_placement(rng, sample.positions)
            sample_id = f"{label.manifest_name}_{k:03d}"
            samples.append(MotionSample(positions=placed, label=label, sample_id=sample_id).validate())
    dataset = Dataset(samples=samples)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        manifest = []
        for s in dataset.samples:
            fname = f"{s.sample_id}.csv"
            save_motion_csv(out / fname, s.positions)
            manifest.append({"id": s.sample_id, "file": fname, "label": s.label.manifest_name})
        (out / "manifest.json").write_text(
            json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
    return dataset
