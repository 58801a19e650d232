"""Softmax cross-entropy with the analytic gradient."""

from __future__ import annotations

import numpy as np


def one_hot(labels: np.ndarray, num_classes: int) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.ndim != 1:
        raise ValueError(f"labels must be 1-D, got shape {labels.shape}")
    if labels.size and (labels.min() < 0 or labels.max() >= num_classes):
        raise ValueError("label out of range")
    out = np.zeros((labels.size, num_classes))
    out[np.arange(labels.size), labels] = 1.0
    return out


def softmax_cross_entropy(logits: np.ndarray, targets: np.ndarray):
    """Stable softmax + cross-entropy.

    Args:
        logits: (N, E) scores.
        targets: (N, E) one-hot rows.

    Returns:
        (losses, probs, grad_logits) where losses is (N,),
        probs is the softmax output and grad_logits = probs - targets
        (the gradient of the summed loss with respect to the logits).
    """
    logits = np.asarray(logits, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if logits.ndim != 2 or logits.shape != targets.shape:
        raise ValueError(f"logits {logits.shape} and targets {targets.shape} must match as (N,E)")
    is_binary = (targets == 0.0) | (targets == 1.0)
    if not is_binary.all() or not np.all(targets.sum(axis=1) == 1.0):
        raise ValueError("targets must be one-hot rows")
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_probs = shifted - log_norm
    probs = np.exp(log_probs)
    losses = -(targets * log_probs).sum(axis=1)
    grad = probs - targets
    return losses, probs, grad
