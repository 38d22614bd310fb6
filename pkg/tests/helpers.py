"""Shared test oracles.

The finite-difference gradient checker here is the independent oracle for
every analytic gradient in the package: central differences on the raw numpy
forward function, no autodiff involved.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from triggen.numerics import Tensor, backward


def numeric_grad(f: Callable[[], float], x: np.ndarray, eps: float = 1e-6) -> np.ndarray:
    """Central-difference gradient of scalar ``f`` w.r.t. array ``x`` in place.

    ``f`` must read the current contents of ``x`` on every call.
    """
    g = np.zeros_like(x)
    flat = x.ravel()
    gflat = g.ravel()
    for i in range(flat.size):
        keep = flat[i]
        flat[i] = keep + eps
        fp = f()
        flat[i] = keep - eps
        fm = f()
        flat[i] = keep
        gflat[i] = (fp - fm) / (2.0 * eps)
    return g


def relative_error(a: np.ndarray, b: np.ndarray) -> float:
    denom = max(np.linalg.norm(a.ravel()), np.linalg.norm(b.ravel()), 1e-12)
    return float(np.linalg.norm((a - b).ravel()) / denom)


def gradcheck(
    build_loss: Callable[[], Tensor],
    params: Sequence[Tensor],
    eps: float = 1e-6,
    tol: float = 1e-4,
) -> float:
    """Compare analytic grads of ``build_loss()`` against central differences.

    ``build_loss`` must rebuild the graph from the live ``params`` tensors on
    every call.  Returns the worst relative error seen; asserts it under
    ``tol``.
    """
    loss = build_loss()
    grads = backward(loss, params=list(params))
    worst = 0.0
    for p in params:
        num = numeric_grad(lambda: float(build_loss().data), p.data, eps=eps)
        err = relative_error(grads[p], num)
        worst = max(worst, err)
        assert err < tol, f"gradcheck failed: rel err {err:.3e} on shape {p.data.shape}"
    return worst
