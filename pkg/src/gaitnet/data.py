"""Loading, validation and normalization of skeleton walking sequences.

A motion file is a UTF-8 CSV with one row per frame and 60 numeric columns
ordered joint-major (j1.x, j1.y, j1.z, ..., j20.z), no header, units meters.
A dataset manifest is a JSON array of objects
``{"id": ..., "file": ..., "label": ...}`` with file paths relative to the
manifest location.
"""

from __future__ import annotations

import json
import math
import os
from collections import Counter
from dataclasses import dataclass, field, replace

import numpy as np

from .skeleton import HIPS, NUM_COORDS, NUM_JOINTS, ClassLabel

# Walking direction convention: +Z is forward, +Y is vertical.
FORWARD_AXIS = 2
VERTICAL_AXIS = 1

DEFAULT_FRAME_COUNT = 100

MIN_NET_DISPLACEMENT = 1e-6


class DataError(ValueError):
    """Raised for malformed motion files, manifests, or unusable samples."""


@dataclass
class MotionSample:
    """One subject's walking cycle: positions[t, joint, coord] in meters."""

    positions: np.ndarray
    label: ClassLabel
    sample_id: str
    is_synthetic: bool = False

    @property
    def num_frames(self) -> int:
        return self.positions.shape[0]

    def validate(self) -> "MotionSample":
        pos = self.positions
        if pos.ndim != 3 or pos.shape[1] != NUM_JOINTS or pos.shape[2] != NUM_COORDS:
            raise DataError(
                f"sample {self.sample_id!r}: expected positions shaped "
                f"(T, {NUM_JOINTS}, {NUM_COORDS}), got {pos.shape}"
            )
        if pos.shape[0] < 1:
            raise DataError(f"sample {self.sample_id!r}: no frames")
        if not np.isfinite(pos).all():
            t = int(np.argwhere(~np.isfinite(pos).all(axis=(1, 2)))[0, 0])
            raise DataError(
                f"sample {self.sample_id!r}: non-finite value at frame {t}"
            )
        return self


@dataclass
class Dataset:
    """A collection of motion samples with per-class counts."""

    samples: list[MotionSample] = field(default_factory=list)

    @property
    def class_counts(self) -> dict[ClassLabel, int]:
        counts = Counter(s.label for s in self.samples)
        return {label: counts.get(label, 0) for label in ClassLabel}

    def __len__(self) -> int:
        return len(self.samples)

    def by_id(self) -> dict[str, MotionSample]:
        return {s.sample_id: s for s in self.samples}

    def ids_by_class(self) -> dict[ClassLabel, list[str]]:
        out: dict[ClassLabel, list[str]] = {}
        for s in self.samples:
            out.setdefault(s.label, []).append(s.sample_id)
        return out


def load_motion_csv(path: str, sample_id: str = "") -> np.ndarray:
    """Parse one motion CSV into a (T, 20, 3) float64 array.

    Errors carry the file name and the offending line/frame.
    """
    width = NUM_JOINTS * NUM_COORDS
    rows = []
    try:
        handle = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"{path}: cannot open motion file: {exc}") from exc
    with handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            cells = line.split(",")
            if len(cells) != width:
                raise DataError(
                    f"{path}:{lineno}: expected {width} columns, got {len(cells)}"
                )
            try:
                values = [float(c) for c in cells]
            except ValueError:
                raise DataError(f"{path}:{lineno}: non-numeric cell") from None
            if not all(math.isfinite(v) for v in values):
                raise DataError(
                    f"{path}: non-finite value at frame {lineno - 1}"
                )
            rows.append(values)
    if not rows:
        raise DataError(f"{path}: empty motion file")
    return np.asarray(rows, dtype=np.float64).reshape(len(rows), NUM_JOINTS, NUM_COORDS)


def save_motion_csv(path: str, positions: np.ndarray) -> None:
    """Write a (T, 20, 3) array in the motion CSV format."""
    flat = np.asarray(positions, dtype=np.float64).reshape(positions.shape[0], -1)
    with open(path, "w", encoding="utf-8") as handle:
        for row in flat:
            handle.write(",".join(repr(float(v)) for v in row))
            handle.write("\n")


def load_dataset(manifest_path: str) -> Dataset:
    """Load every motion listed in a manifest and validate it."""
    try:
        with open(manifest_path, "r", encoding="utf-8") as handle:
            entries = json.load(handle)
    except OSError as exc:
        raise DataError(f"{manifest_path}: cannot open manifest: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"{manifest_path}: invalid JSON: {exc}") from exc
    if not isinstance(entries, list):
        raise DataError(f"{manifest_path}: manifest must be a JSON array")
    if not entries:
        raise DataError(f"{manifest_path}: empty dataset")

    base = os.path.dirname(os.path.abspath(manifest_path))
    samples = []
    seen_ids = set()
    for i, entry in enumerate(entries):
        if not isinstance(entry, dict) or not {"id", "file", "label"} <= set(entry):
            raise DataError(
                f"{manifest_path}: entry {i} must have keys id, file, label"
            )
        sample_id = str(entry["id"])
        if sample_id in seen_ids:
            raise DataError(f"{manifest_path}: duplicate sample id {sample_id!r}")
        seen_ids.add(sample_id)
        try:
            label = ClassLabel.from_manifest_name(entry["label"])
        except ValueError as exc:
            raise DataError(f"{manifest_path}: entry {sample_id!r}: {exc}") from None
        positions = load_motion_csv(os.path.join(base, entry["file"]), sample_id)
        samples.append(
            MotionSample(
                positions=positions,
                label=label,
                sample_id=sample_id,
                is_synthetic=bool(entry.get("synthetic", False)),
            ).validate()
        )
    return Dataset(samples=samples)


def resample_temporal(sample: MotionSample, t_target: int) -> MotionSample:
    """Rescale a sample to exactly ``t_target`` frames by linear interpolation.

    Source frames are taken as uniformly spaced in time; the first and last
    output frames equal the first and last source frames exactly.
    """
    t_src = sample.num_frames
    if t_src < 2:
        raise DataError(f"sample {sample.sample_id!r}: need >= 2 frames to resample")
    if t_target < 2:
        raise DataError(f"t_target must be >= 2, got {t_target}")

    # Target frame k samples source time k * (t_src-1) / (t_target-1).
    times = np.arange(t_target, dtype=np.float64) * (t_src - 1) / (t_target - 1)
    lo = np.floor(times).astype(np.intp)
    np.clip(lo, 0, t_src - 2, out=lo)
    frac = (times - lo)[:, None, None]
    pos = sample.positions
    new_positions = (1.0 - frac) * pos[lo] + frac * pos[lo + 1]
    return replace(sample, positions=new_positions)


def align_spatial(sample: MotionSample) -> MotionSample:
    """Rigidly move a sample so it starts at the origin and walks along +Z.

    Translates frame-0 Hips to the origin, then rotates about the vertical
    axis so the horizontal projection of the net Hips displacement points
    along +Z. The same transform is applied to every joint of every frame,
    so intra-frame distances are preserved.
    """
    sample.validate()
    pos = sample.positions
    origin = pos[0, HIPS].copy()
    shifted = pos - origin

    net = shifted[-1, HIPS] - shifted[0, HIPS]
    dx, dz = net[0], net[FORWARD_AXIS]
    norm = math.hypot(dx, dz)
    if norm <= MIN_NET_DISPLACEMENT:
        raise DataError(
            f"sample {sample.sample_id!r}: degenerate trajectory "
            f"(net horizontal displacement {norm:.2e} m)"
        )
    c = dz / norm
    s = dx / norm
    # Rotation about +Y mapping the heading (s, c) onto (0, 1) in the XZ plane.
    aligned = shifted.copy()
    aligned[..., 0] = c * shifted[..., 0] - s * shifted[..., FORWARD_AXIS]
    aligned[..., FORWARD_AXIS] = s * shifted[..., 0] + c * shifted[..., FORWARD_AXIS]
    return replace(sample, positions=aligned)


def normalize_sample(sample: MotionSample, t_target: int = DEFAULT_FRAME_COUNT) -> MotionSample:
    """Full normalization: temporal resampling followed by spatial alignment."""
    return align_spatial(resample_temporal(sample, t_target))


def normalize_dataset(dataset: Dataset, t_target: int = DEFAULT_FRAME_COUNT) -> Dataset:
    return Dataset(samples=[normalize_sample(s, t_target) for s in dataset.samples])
