"""MLP attribute classifiers used both for evaluation and inside the pipeline."""

import numpy as np

from ..nn.layers import MLP
from ..nn.losses import cross_entropy_from_labels
from ..nn.tape import Tape


class Classifier:
    """relu MLP with a softmax output over attribute classes.

    attribute is "public" or "private"; it is metadata only, the math does
    not depend on it.
    """

    def __init__(self, input_dim, n_classes, attribute="public", hidden=(64, 32), rng=None):
        if n_classes < 1:
            raise ValueError("need at least one class")
        if attribute not in ("public", "private"):
            raise ValueError("attribute must be 'public' or 'private'")
        hidden = tuple(hidden)
        self.input_dim = input_dim
        self.n_classes = n_classes
        self.attribute = attribute
        self.hidden = hidden
        self.mlp = MLP(
            [input_dim, *hidden, n_classes],
            ["relu"] * len(hidden) + ["softmax"],
            rng,
        )

    def parameters(self):
        return self.mlp.parameters()

    def named_tensors(self):
        out = {}
        for k, layer in enumerate(self.mlp.layers):
            out[f"mlp.{k}.W"] = layer.W
            out[f"mlp.{k}.b"] = layer.b
        return out

    def predict_proba(self, x):
        probs, _ = self.mlp.forward(x)
        return probs

    def predict(self, x):
        """Argmax class; ties resolve to the lower index."""
        probs = self.predict_proba(x)
        return int(np.argmax(probs)) if probs.ndim == 1 else np.argmax(probs, axis=-1)

    def loss_and_gradients(self, x, labels):
        """Summed cross entropy over the batch plus a gradient tape."""
        xb = np.atleast_2d(np.asarray(x, dtype=float))
        y = np.asarray(labels, dtype=int)
        probs, caches = self.mlp.forward(xb)
        ce = cross_entropy_from_labels(probs, y)
        tape = Tape()
        g = probs.copy()
        g[np.arange(xb.shape[0]), y] -= 1.0
        d = self.mlp.layers[-1].backward_preactivation(g, caches[-1], tape)
        for layer, cache in zip(reversed(self.mlp.layers[:-1]), reversed(caches[:-1])):
            d = layer.backward_into(d, cache, tape)
        return float(ce.sum()), tape
