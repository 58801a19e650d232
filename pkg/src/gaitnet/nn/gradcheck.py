"""Finite-difference gradient checking.

Central differences with step h perturb one element at a time while the
caller-supplied loss function recomputes the full forward pass. The
relative error between analytic and numeric gradients is

    |g_a - g_f| / max(1e-8, |g_a| + |g_f|)

and well-behaved layers should stay below 1e-6 in float64.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np


def max_relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    denom = np.maximum(1e-8, np.abs(analytic) + np.abs(numeric))
    err = np.abs(analytic - numeric) / denom
    return float(err.max()) if err.size else 0.0


def central_difference(loss_fn: Callable[[], float], array: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Numeric gradient of loss_fn with respect to array (perturbed in place)."""
    grad = np.zeros_like(array)
    flat = array.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        plus = loss_fn()
        flat[i] = orig - h
        minus = loss_fn()
        flat[i] = orig
        gflat[i] = (plus - minus) / (2.0 * h)
    return grad


def check_gradients(
    loss_fn: Callable[[], float],
    arrays: Sequence[np.ndarray],
    analytic_grads: Sequence[np.ndarray],
    h: float = 1e-5,
    exclude_masks: Sequence[np.ndarray | None] | None = None,
) -> float:
    """Max relative error between analytic grads and central differences.

    Args:
        loss_fn: recomputes the scalar loss from the current array contents.
        arrays: the arrays the loss depends on (perturbed in place).
        analytic_grads: analytic gradient for each array, same order.
        h: finite-difference step.
        exclude_masks: optional boolean masks marking positions to skip
            (e.g. elements near a ReLU kink or a pooling tie).
    """
    if len(arrays) != len(analytic_grads):
        raise ValueError("arrays and analytic_grads must align")
    worst = 0.0
    for k, (arr, ga) in enumerate(zip(arrays, analytic_grads)):
        gf = central_difference(loss_fn, arr, h=h)
        if exclude_masks is not None and exclude_masks[k] is not None:
            keep = ~exclude_masks[k]
            if not keep.any():
                continue
            err = max_relative_error(ga[keep], gf[keep])
        else:
            err = max_relative_error(ga, gf)
        worst = max(worst, err)
    return worst
