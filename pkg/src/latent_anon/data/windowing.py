"""Sliding-window embedding construction."""

from .types import Embedding


def window_offsets(n_samples, window, stride):
    """Start indices of all complete windows: 0, stride, 2*stride, ...

    A series shorter than the window yields no offsets. The count is
    floor((T - W) / S) + 1 when T >= W.
    """
    if window < 1 or stride < 1:
        raise ValueError("window and stride must be >= 1")
    if n_samples < window:
        return []
    return list(range(0, n_samples - window + 1, stride))


def window_embeddings(series, window, stride):
    """Cut one SensorSeries into flattened window embeddings.

    Labels and provenance are copied onto every embedding; the flattening is
    time-major (row-major over the (W, C) block).
    """
    offsets = window_offsets(series.n_samples, window, stride)
    public = series.attributes.get("public")
    private = series.attributes.get("private")
    trial = series.attributes.get("trial")
    out = []
    for off in offsets:
        block = series.samples[off : off + window]
        out.append(
            Embedding(
                x=block.reshape(-1).copy(),
                true_public=public,
                true_private=private,
                subject_id=series.subject_id,
                origin=off,
                trial=trial,
            )
        )
    return out
