"""Stream input tensors: joint positions and relative joint displacements.

The position stream keeps the normalized sample as a (T, 20, 3) tensor. The
displacement stream expands it into all ordered joint pairs: for every frame
and every pair (i, j) with i != j, the entry is position(i) - position(j),
giving a (T, 380, 3) tensor.

Pair layout is anchor-major: the 19 pairs anchored at joint i occupy the
contiguous flat indices (i-1)*19 .. (i-1)*19 + 18, with the partner joint j
ascending and skipping j = i. Joint numbers in the pair API are the 1..20
numbering of the motion file format.
"""

from __future__ import annotations

import os

import numpy as np

from .data import MotionSample
from .skeleton import NUM_COORDS, NUM_JOINTS

PAIRS_PER_JOINT = NUM_JOINTS - 1
NUM_PAIRS = NUM_JOINTS * PAIRS_PER_JOINT  # 380


def pair_index(i: int, j: int) -> int:
    """Flat index of the ordered pair (i, j), joints numbered 1..20."""
    if i == j:
        raise ValueError(f"self-pair ({i}, {j}) has no index")
    if not (1 <= i <= NUM_JOINTS and 1 <= j <= NUM_JOINTS):
        raise ValueError(f"joint numbers must be in 1..{NUM_JOINTS}, got ({i}, {j})")
    return (i - 1) * PAIRS_PER_JOINT + (j - 1 if j < i else j - 2)


def pair_from_index(flat: int) -> tuple[int, int]:
    """Inverse of pair_index."""
    if not 0 <= flat < NUM_PAIRS:
        raise ValueError(f"flat pair index must be in 0..{NUM_PAIRS - 1}, got {flat}")
    i = flat // PAIRS_PER_JOINT + 1
    off = flat % PAIRS_PER_JOINT
    j = off + 1 if off + 1 < i else off + 2
    return i, j


def _pair_tables() -> tuple[np.ndarray, np.ndarray]:
    anchors = np.empty(NUM_PAIRS, dtype=np.intp)
    others = np.empty(NUM_PAIRS, dtype=np.intp)
    for flat in range(NUM_PAIRS):
        i, j = pair_from_index(flat)
        anchors[flat] = i - 1
        others[flat] = j - 1
    return anchors, others


# 0-based joint indices of each flat pair: anchor minus other.
PAIR_ANCHOR, PAIR_OTHER = _pair_tables()

# Flat index of the swapped pair, for antisymmetry checks.
PAIR_SWAP = np.array(
    [pair_index(*pair_from_index(flat)[::-1]) for flat in range(NUM_PAIRS)],
    dtype=np.intp,
)


def build_jp(sample: MotionSample) -> np.ndarray:
    """Joint-position stream input: a copy of positions, shape (T, 20, 3)."""
    return np.array(sample.positions, dtype=np.float64)


def build_rjdp(sample: MotionSample) -> np.ndarray:
    """Relative-displacement stream input, shape (T, 380, 3)."""
    return rjdp_from_positions(sample.positions)


def rjdp_from_positions(positions: np.ndarray) -> np.ndarray:
    """Expand (..., 20, 3) positions into (..., 380, 3) ordered-pair differences."""
    positions = np.asarray(positions, dtype=np.float64)
    # take() keeps the result C-contiguous (a sandwiched fancy index
    # would move the pair axis first in memory and slow every consumer).
    return positions.take(PAIR_ANCHOR, axis=-2) - positions.take(PAIR_OTHER, axis=-2)


def dump_tensor(path: str, data: np.ndarray, kind: str) -> None:
    """Write a stream tensor as flat little-endian float64 with a text sidecar.

    ``kind`` is "JP" or "RJDP"; the sidecar holds one line "KIND T S C".
    """
    if kind not in ("JP", "RJDP"):
        raise ValueError(f"kind must be 'JP' or 'RJDP', got {kind!r}")
    arr = np.ascontiguousarray(data, dtype="<f8")
    t, s, c = arr.shape
    with open(path, "wb") as handle:
        handle.write(arr.tobytes())
    with open(_sidecar_path(path), "w", encoding="utf-8") as handle:
        handle.write(f"{kind} {t} {s} {c}\n")


def load_tensor(path: str) -> tuple[str, np.ndarray]:
    """Read a tensor written by dump_tensor, returning (kind, data)."""
    with open(_sidecar_path(path), "r", encoding="utf-8") as handle:
        kind, *dims = handle.read().split()
    t, s, c = (int(d) for d in dims)
    raw = np.fromfile(path, dtype="<f8")
    if raw.size != t * s * c:
        raise ValueError(f"{path}: expected {t * s * c} values, found {raw.size}")
    return kind, raw.reshape(t, s, c).astype(np.float64)


def _sidecar_path(path: str) -> str:
    root, _ = os.path.splitext(path)
    return root + ".hdr.txt"


def stack_features(samples, builder) -> np.ndarray:
    """Stack a feature builder's output over samples into one (N, T, S, C) batch."""
    return np.stack([builder(s) for s in samples], axis=0)
