"""Per-channel z-score normalization.

Statistics come from the training split only; the test split reuses them, so
no information leaks across the boundary. Channels with zero variance map to
zero (with a warning) and denormalize restores the constant exactly.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .types import Embedding


@dataclass
class NormStats:
    mean: np.ndarray
    std: np.ndarray
    window: int
    n_channels: int

    def to_dict(self):
        return {
            "mean": self.mean.tolist(),
            "std": self.std.tolist(),
            "window": self.window,
            "n_channels": self.n_channels,
        }

    @staticmethod
    def from_dict(d):
        return NormStats(
            mean=np.asarray(d["mean"], dtype=float),
            std=np.asarray(d["std"], dtype=float),
            window=int(d["window"]),
            n_channels=int(d["n_channels"]),
        )


def compute_norm_stats(embeddings, window, n_channels):
    """Channel mean and standard deviation over all training windows."""
    if not embeddings:
        raise ValueError("empty dataset")
    stacked = np.stack([e.x for e in embeddings]).reshape(len(embeddings), window, n_channels)
    mean = stacked.mean(axis=(0, 1))
    std = stacked.std(axis=(0, 1))
    if np.any(std == 0):
        flat = np.flatnonzero(std == 0).tolist()
        warnings.warn(f"zero-variance channels {flat} map to 0 under normalization")
    return NormStats(mean=mean, std=std, window=window, n_channels=n_channels)


def _safe_std(stats):
    return np.where(stats.std == 0.0, 1.0, stats.std)


def normalize(embeddings, stats):
    """Return new embeddings with per-channel z-scored windows."""
    std = _safe_std(stats)
    out = []
    for e in embeddings:
        block = e.x.reshape(stats.window, stats.n_channels)
        scaled = (block - stats.mean) / std
        out.append(
            Embedding(
                x=scaled.reshape(-1),
                true_public=e.true_public,
                true_private=e.true_private,
                subject_id=e.subject_id,
                origin=e.origin,
                trial=e.trial,
            )
        )
    return out


def denormalize(x, stats):
    """Invert normalize for one flattened window."""
    block = np.asarray(x, dtype=float).reshape(stats.window, stats.n_channels)
    return (block * _safe_std(stats) + stats.mean).reshape(-1)
