"""Training losses with their gradients w.r.t. the network output."""

from __future__ import annotations

import numpy as np


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def softmax_cross_entropy(logits: np.ndarray, labels: np.ndarray):
    """Mean cross entropy over the batch.

    Returns ``(loss, dlogits, probs)`` where ``dlogits`` is the gradient
    of the mean loss, i.e. ``(probs - onehot) / batch``.
    """
    labels = np.asarray(labels)
    batch = logits.shape[0]
    probs = softmax(logits)
    picked = np.clip(probs[np.arange(batch), labels], 1e-300, None)
    loss = float(-np.mean(np.log(picked)))
    dlogits = probs.copy()
    dlogits[np.arange(batch), labels] -= 1.0
    dlogits /= batch
    return loss, dlogits.astype(logits.dtype), probs


def mse_loss(pred: np.ndarray, target: np.ndarray):
    """Mean squared error over every output element; returns (loss, dpred)."""
    diff = pred - target
    loss = float(np.mean(diff**2))
    dpred = (2.0 / diff.size) * diff
    return loss, dpred.astype(pred.dtype)
