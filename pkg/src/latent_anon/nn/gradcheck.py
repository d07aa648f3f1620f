"""Finite-difference gradient oracle.

Central differences are the independent check for every hand-written backward
pass in this package: the numeric side never touches the analytic code path.
"""

import math
from dataclasses import dataclass

import numpy as np


@dataclass
class GradCheckReport:
    max_rel_error: float
    n_checked: int
    n_skipped: int


def grad_check(loss_fn, params, analytic_grads, eps=1e-5, kink_margins=None):
    """Compare analytic gradients against central finite differences.

    loss_fn is a zero-argument callable evaluating the scalar loss at the
    current parameter values; each coordinate of each parameter is perturbed
    in place by +/- eps. The relative error per coordinate is
    |analytic - numeric| / max(1, |numeric|) and the maximum is reported.

    kink_margins, if given, is a zero-argument callable returning an array of
    smoothness margins (for relu nets: all pre-activation values). A
    coordinate whose +eps / -eps probes flip the sign of any margin straddles
    a kink; it is skipped and counted instead of checked.
    """
    if not (1e-6 <= eps <= 1e-4):
        raise ValueError("eps must lie in [1e-6, 1e-4]")
    if len(params) != len(analytic_grads):
        raise ValueError("need one gradient per parameter")
    max_err = 0.0
    checked = 0
    skipped = 0
    for p, g in zip(params, analytic_grads):
        if p.shape != g.shape:
            raise ValueError(f"gradient shape {g.shape} does not match parameter {p.shape}")
        for idx in np.ndindex(p.shape):
            old = p[idx]
            p[idx] = old + eps
            f_plus = loss_fn()
            m_plus = kink_margins() if kink_margins is not None else None
            p[idx] = old - eps
            f_minus = loss_fn()
            m_minus = kink_margins() if kink_margins is not None else None
            p[idx] = old
            if not (math.isfinite(f_plus) and math.isfinite(f_minus)):
                raise ValueError("loss is not finite at a probe point")
            if m_plus is not None and np.any(np.sign(m_plus) != np.sign(m_minus)):
                skipped += 1
                continue
            numeric = (f_plus - f_minus) / (2.0 * eps)
            rel = abs(float(g[idx]) - numeric) / max(1.0, abs(numeric))
            if rel > max_err:
                max_err = rel
            checked += 1
    return GradCheckReport(max_rel_error=max_err, n_checked=checked, n_skipped=skipped)
