"""Binary checkpoint format.

Layout: 8-byte magic "GAITNET1", a 4-byte little-endian header length,
a UTF-8 JSON header, then the payload: every parameter tensor in header
order as little-endian float64 (C order), followed by the Adam first-
and second-moment tensors in the same order when optimizer state is
saved. The header records the architecture config, parameter names and
shapes, Adam scalars, and the training RNG state, so a checkpoint is
enough to rebuild the model exactly.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .layers import Parameter
from .optim import Adam

CHECKPOINT_MAGIC = b"GAITNET1"


class CheckpointError(ValueError):
    """Raised when a checkpoint file is malformed."""


def save_checkpoint(
    path: str | Path,
    config: dict,
    params: list[Parameter],
    adam: Adam | None = None,
    rng_state: dict | None = None,
) -> None:
    header = {
        "version": 1,
        "config": config,
        "params": [{"name": p.name, "shape": list(p.value.shape)} for p in params],
        "adam": adam.state_dict() if adam is not None else None,
        "rng_state": rng_state,
    }
    blobs = [np.ascontiguousarray(p.value, dtype="<f8").tobytes() for p in params]
    if adam is not None:
        if len(adam.params) != len(params) or any(a is not b for a, b in zip(adam.params, params)):
            raise ValueError("adam state does not match the parameter list")
        blobs += [np.ascontiguousarray(m, dtype="<f8").tobytes() for m in adam.m]
        blobs += [np.ascontiguousarray(v, dtype="<f8").tobytes() for v in adam.v]
    head = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(len(head).to_bytes(4, "little"))
        fh.write(head)
        for blob in blobs:
            fh.write(blob)


def load_checkpoint(path: str | Path) -> dict:
    """Read a checkpoint into plain arrays.

    Returns a dict with keys "config", "param_order", "params"
    (name -> array), "adam" (None or {"t", "lr", ..., "m", "v"}) and
    "rng_state".
    """
    raw = Path(path).read_bytes()
    if len(raw) < len(CHECKPOINT_MAGIC) + 4 or not raw.startswith(CHECKPOINT_MAGIC):
        raise CheckpointError(f"{path}: not a GAITNET1 checkpoint")
    off = len(CHECKPOINT_MAGIC)
    head_len = int.from_bytes(raw[off : off + 4], "little")
    off += 4
    try:
        header = json.loads(raw[off : off + head_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{path}: bad checkpoint header: {exc}") from exc
    off += head_len

    def take(shape: list[int]) -> np.ndarray:
        nonlocal off
        count = int(np.prod(shape)) if shape else 1
        nbytes = 8 * count
        if off + nbytes > len(raw):
            raise CheckpointError(f"{path}: truncated checkpoint payload")
        arr = np.frombuffer(raw[off : off + nbytes], dtype="<f8").reshape(shape)
        off += nbytes
        return arr.astype(np.float64)

    entries = header["params"]
    params = {e["name"]: take(e["shape"]) for e in entries}
    adam = None
    if header.get("adam") is not None:
        adam = dict(header["adam"])
        adam["m"] = {e["name"]: take(e["shape"]) for e in entries}
        adam["v"] = {e["name"]: take(e["shape"]) for e in entries}
    if off != len(raw):
        raise CheckpointError(f"{path}: {len(raw) - off} trailing bytes after payload")
    return {
        "config": header["config"],
        "param_order": [e["name"] for e in entries],
        "params": params,
        "adam": adam,
        "rng_state": header.get("rng_state"),
    }
