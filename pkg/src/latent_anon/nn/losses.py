"""Loss functions and the softmax used throughout the model zoo."""

import numpy as np

LOG_FLOOR = 1e-12


def softmax(logits, axis=-1):
    """Numerically stable softmax.

    Subtracts the per-row maximum before exponentiation, so constant shifts
    of the logits leave the output unchanged and no overflow can occur.
    """
    logits = np.asarray(logits, dtype=float)
    if logits.size == 0:
        raise ValueError("softmax of an empty input")
    if not np.all(np.isfinite(logits)):
        raise ValueError("softmax requires finite logits")
    shifted = logits - logits.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=axis, keepdims=True)


def one_hot(labels, n_classes):
    labels = np.asarray(labels, dtype=int)
    if labels.ndim != 1:
        raise ValueError("labels must be a 1-D integer array")
    if labels.size and (labels.min() < 0 or labels.max() >= n_classes):
        raise ValueError(f"label out of range [0, {n_classes})")
    out = np.zeros((labels.size, n_classes))
    out[np.arange(labels.size), labels] = 1.0
    return out


def cross_entropy(probs, target):
    """Cross entropy -sum(y * log p) for a single distribution and one-hot target.

    Probabilities are floored at LOG_FLOOR before the log so a zero entry
    cannot produce an infinite loss.
    """
    probs = np.asarray(probs, dtype=float)
    target = np.asarray(target, dtype=float)
    if probs.ndim != 1 or probs.shape != target.shape:
        raise ValueError(f"shape mismatch: probs {probs.shape} vs target {target.shape}")
    ones = np.isclose(target, 1.0)
    zeros = target == 0.0
    if ones.sum() != 1 or not np.all(ones | zeros):
        raise ValueError("target must be one-hot")
    return float(-(target * np.log(np.maximum(probs, LOG_FLOOR))).sum())


def cross_entropy_from_labels(probs, labels):
    """Per-row -log p[label] for a (B, M) probability matrix. Returns shape (B,)."""
    probs = np.asarray(probs, dtype=float)
    labels = np.asarray(labels, dtype=int)
    if probs.ndim != 2 or labels.shape != (probs.shape[0],):
        raise ValueError("expected (B, M) probs and (B,) labels")
    if labels.size and (labels.min() < 0 or labels.max() >= probs.shape[1]):
        raise ValueError(f"label out of range [0, {probs.shape[1]})")
    picked = probs[np.arange(labels.size), labels]
    return -np.log(np.maximum(picked, LOG_FLOOR))


def squared_error(x, x_hat):
    """Half sum of squared differences over the last axis.

    1-D inputs give a float, 2-D inputs give one value per row.
    """
    x = np.asarray(x, dtype=float)
    x_hat = np.asarray(x_hat, dtype=float)
    if x.shape != x_hat.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {x_hat.shape}")
    out = 0.5 * np.sum((x - x_hat) ** 2, axis=-1)
    return float(out) if x.ndim == 1 else out
