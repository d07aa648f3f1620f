"""Gradient tape: forward-order record of layer caches plus parameter gradients."""

import numpy as np


class Tape:
    """Collects layer caches during a forward pass and accumulates parameter
    gradients during the reverse sweep.

    For a plain chain of layers, record() during forward and call backward()
    with the loss gradient w.r.t. the final output. Models with branching
    graphs orchestrate their own reverse sweep and use accumulate() directly.
    """

    def __init__(self):
        self._records = []
        self._grads = {}
        self._params = {}

    def record(self, layer, cache):
        self._records.append((layer, cache))

    def backward(self, d_out):
        """Reverse sweep over the recorded chain. Returns the input gradient."""
        if not self._records:
            raise RuntimeError("backward() called before any forward pass was recorded")
        d = d_out
        for layer, cache in reversed(self._records):
            d = layer.backward_into(d, cache, self)
        return d

    def accumulate(self, param, grad):
        grad = np.asarray(grad, dtype=float)
        if grad.shape != param.shape:
            raise ValueError(f"gradient shape {grad.shape} does not match parameter {param.shape}")
        key = id(param)
        if key in self._grads:
            self._grads[key] += grad
        else:
            self._grads[key] = grad.copy()
            self._params[key] = param

    def grad(self, param):
        """Gradient for one parameter; zero if the parameter was never touched."""
        g = self._grads.get(id(param))
        return np.zeros_like(param) if g is None else g

    def grads(self, params):
        return [self.grad(p) for p in params]
