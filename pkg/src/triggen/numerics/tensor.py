"""Dense-tensor kernel with reverse-mode automatic differentiation.

Everything the encoder/decoder stack and the trainer need, nothing more:
row-major numpy storage, a dynamically built computation graph, and a
``backward`` that walks it once in reverse topological order.  Gradients are
returned as a fresh mapping on every call; no tensor is mutated, so repeated
backward passes over the same graph are pure.

Float64 is the default (the finite-difference test harness needs the
headroom); float32 is available for faster full-size training runs via the
``dtype`` argument of the constructors.

Every forward op validates that its output is finite; NaN/Inf anywhere is
treated as an error state rather than silently propagated.  Disable with
``set_strict_finite(False)`` if an experiment needs to limp past it.
"""

from __future__ import annotations

import contextlib
from typing import Callable, Iterable, Sequence

import numpy as np

from ..errors import ContractError, NonFiniteError, ShapeError

DEFAULT_DTYPE = np.float64

_strict_finite = True
_grad_enabled = True


def set_strict_finite(flag: bool) -> None:
    global _strict_finite
    _strict_finite = bool(flag)


@contextlib.contextmanager
def no_grad():
    """Skip graph construction inside the block (inference fast path)."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


class Tensor:
    """A node in the computation graph.

    ``data`` is a numpy array (row-major).  Leaf tensors created through
    ``parameter`` carry ``is_param=True`` and are the things ``backward``
    reports gradients for.  Interior nodes keep references to their parents
    and a closure computing the parent gradients from the output gradient.
    """

    __slots__ = ("data", "is_param", "_parents", "_bwd")

    def __init__(self, data, parents=(), bwd=None, is_param=False):
        self.data = np.asarray(data)
        self.is_param = is_param
        self._parents: tuple[Tensor, ...] = parents
        self._bwd: Callable[[np.ndarray], Sequence[np.ndarray | None]] | None = bwd

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def __repr__(self) -> str:
        kind = "param" if self.is_param else ("leaf" if not self._parents else "node")
        return f"Tensor({kind}, shape={self.shape}, dtype={self.data.dtype})"

    # operator sugar; all arithmetic lives in module-level functions below
    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __truediv__(self, other):
        return div(self, other)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)


def parameter(data, dtype=None) -> Tensor:
    """Trainable leaf tensor."""
    arr = np.array(data, dtype=dtype or DEFAULT_DTYPE)
    return Tensor(arr, is_param=True)


def constant(data, dtype=None) -> Tensor:
    arr = np.asarray(data, dtype=dtype or DEFAULT_DTYPE)
    return Tensor(arr)


def as_tensor(x, like: Tensor | None = None) -> Tensor:
    if isinstance(x, Tensor):
        return x
    dtype = like.data.dtype if like is not None else DEFAULT_DTYPE
    return Tensor(np.asarray(x, dtype=dtype))


def _finite_check(out: np.ndarray, op: str) -> None:
    if _strict_finite and not np.all(np.isfinite(out)):
        raise NonFiniteError(f"non-finite values produced by op '{op}'")


def _node(out: np.ndarray, op: str, parents: tuple[Tensor, ...], bwd) -> Tensor:
    _finite_check(out, op)
    if not _grad_enabled:
        return Tensor(out)
    return Tensor(out, parents=parents, bwd=bwd)


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum ``grad`` down to ``shape`` (inverse of numpy broadcasting)."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


# ---------------------------------------------------------------------------
# elementwise arithmetic
# ---------------------------------------------------------------------------


def add(a: Tensor, b) -> Tensor:
    a, b = a, as_tensor(b, a)
    out = a.data + b.data

    def bwd(g):
        return _unbroadcast(g, a.data.shape), _unbroadcast(g, b.data.shape)

    return _node(out, "add", (a, b), bwd)


def sub(a: Tensor, b) -> Tensor:
    a, b = a, as_tensor(b, a)
    out = a.data - b.data

    def bwd(g):
        return _unbroadcast(g, a.data.shape), _unbroadcast(-g, b.data.shape)

    return _node(out, "sub", (a, b), bwd)


def mul(a: Tensor, b) -> Tensor:
    a, b = a, as_tensor(b, a)
    out = a.data * b.data

    def bwd(g):
        return (
            _unbroadcast(g * b.data, a.data.shape),
            _unbroadcast(g * a.data, b.data.shape),
        )

    return _node(out, "mul", (a, b), bwd)


def div(a: Tensor, b) -> Tensor:
    a, b = a, as_tensor(b, a)
    out = a.data / b.data

    def bwd(g):
        # non-finite grads are caught by the next forward's finite check, so
        # suppress the interim numpy warnings
        with np.errstate(all="ignore"):
            return (
                _unbroadcast(g / b.data, a.data.shape),
                _unbroadcast(-g * a.data / (b.data * b.data), b.data.shape),
            )

    return _node(out, "div", (a, b), bwd)


def neg(a: Tensor) -> Tensor:
    return _node(-a.data, "neg", (a,), lambda g: (-g,))


def scale(a: Tensor, s: float) -> Tensor:
    s = float(s)
    return _node(a.data * s, "scale", (a,), lambda g: (g * s,))


def add_n(tensors: Sequence[Tensor]) -> Tensor:
    """Sum of same-shaped tensors as a single graph node."""
    if not tensors:
        raise ContractError("add_n of an empty sequence")
    shape = tensors[0].data.shape
    for t in tensors[1:]:
        if t.data.shape != shape:
            raise ShapeError(f"add_n shape mismatch: {shape} vs {t.data.shape}")
    out = tensors[0].data.copy()
    for t in tensors[1:]:
        out += t.data

    def bwd(g):
        return tuple(g for _ in tensors)

    return _node(out, "add_n", tuple(tensors), bwd)


# ---------------------------------------------------------------------------
# matmul
# ---------------------------------------------------------------------------


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix/vector product for the 2D/1D combinations the model uses."""
    ad, bd = a.data, b.data
    if ad.ndim == 0 or bd.ndim == 0 or ad.ndim > 2 or bd.ndim > 2:
        raise ShapeError(f"matmul supports 1D/2D operands, got {ad.shape} @ {bd.shape}")
    if ad.shape[-1] != bd.shape[0]:
        raise ShapeError(f"matmul inner dimensions disagree: {ad.shape} @ {bd.shape}")
    out = ad @ bd

    def bwd(g):
        if ad.ndim == 2 and bd.ndim == 2:
            return g @ bd.T, ad.T @ g
        if ad.ndim == 1 and bd.ndim == 2:
            # (k,) @ (k,n) -> (n,)
            return g @ bd.T, np.outer(ad, g)
        if ad.ndim == 2 and bd.ndim == 1:
            # (m,k) @ (k,) -> (m,)
            return np.outer(g, bd), ad.T @ g
        # (k,) @ (k,) -> scalar
        return g * bd, g * ad

    return _node(out, "matmul", (a, b), bwd)


# ---------------------------------------------------------------------------
# nonlinearities
# ---------------------------------------------------------------------------


def tanh(a: Tensor) -> Tensor:
    out = np.tanh(a.data)
    return _node(out, "tanh", (a,), lambda g: (g * (1.0 - out * out),))


def sigmoid(a: Tensor) -> Tensor:
    out = 1.0 / (1.0 + np.exp(-np.clip(a.data, -60.0, 60.0)))
    return _node(out, "sigmoid", (a,), lambda g: (g * out * (1.0 - out),))


def exp(a: Tensor) -> Tensor:
    out = np.exp(a.data)
    return _node(out, "exp", (a,), lambda g: (g * out,))


def log(a: Tensor) -> Tensor:
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.log(a.data)
    return _node(out, "log", (a,), lambda g: (g / a.data,))


# ---------------------------------------------------------------------------
# reductions
# ---------------------------------------------------------------------------


def total(a: Tensor) -> Tensor:
    out = a.data.sum()

    def bwd(g):
        return (np.full_like(a.data, g),)

    return _node(out, "total", (a,), bwd)


def mean(a: Tensor) -> Tensor:
    n = a.data.size
    out = a.data.mean()

    def bwd(g):
        return (np.full_like(a.data, g / n),)

    return _node(out, "mean", (a,), bwd)


def softmax(a: Tensor) -> Tensor:
    """Stable softmax over a 1D tensor (max-subtraction)."""
    if a.data.ndim != 1:
        raise ShapeError(f"softmax expects a 1D tensor, got shape {a.data.shape}")
    if a.data.size < 1:
        raise ShapeError("softmax of an empty tensor")
    shifted = a.data - a.data.max()
    e = np.exp(shifted)
    out = e / e.sum()

    def bwd(g):
        return (out * (g - np.dot(g, out)),)

    return _node(out, "softmax", (a,), bwd)


def logsumexp(a: Tensor) -> Tensor:
    """log(sum(exp(x))) over a 1D tensor, stable; scalar output."""
    if a.data.ndim != 1:
        raise ShapeError(f"logsumexp expects a 1D tensor, got shape {a.data.shape}")
    m = a.data.max()
    e = np.exp(a.data - m)
    s = e.sum()
    out = m + np.log(s)

    def bwd(g):
        return (g * (e / s),)

    return _node(out, "logsumexp", (a,), bwd)


# ---------------------------------------------------------------------------
# shape / indexing ops
# ---------------------------------------------------------------------------


def concat(tensors: Sequence[Tensor]) -> Tensor:
    """Concatenate 1D tensors."""
    for t in tensors:
        if t.data.ndim != 1:
            raise ShapeError("concat expects 1D tensors")
    sizes = [t.data.size for t in tensors]
    out = np.concatenate([t.data for t in tensors])

    def bwd(g):
        grads = []
        ofs = 0
        for n in sizes:
            grads.append(g[ofs : ofs + n])
            ofs += n
        return tuple(grads)

    return _node(out, "concat", (*tensors,), bwd)


def stack(tensors: Sequence[Tensor]) -> Tensor:
    """Stack equal-length 1D tensors into a (len, n) matrix."""
    n = tensors[0].data.size
    for t in tensors:
        if t.data.ndim != 1 or t.data.size != n:
            raise ShapeError("stack expects equal-length 1D tensors")
    out = np.stack([t.data for t in tensors])

    def bwd(g):
        return tuple(g[i] for i in range(len(tensors)))

    return _node(out, "stack", (*tensors,), bwd)


def narrow(a: Tensor, start: int, stop: int) -> Tensor:
    """Contiguous slice of a 1D tensor."""
    if a.data.ndim != 1:
        raise ShapeError("narrow expects a 1D tensor")
    out = a.data[start:stop].copy()

    def bwd(g):
        full = np.zeros_like(a.data)
        full[start:stop] = g
        return (full,)

    return _node(out, "narrow", (a,), bwd)


def row(a: Tensor, i: int) -> Tensor:
    """Row ``i`` of a 2D tensor as a 1D tensor."""
    if a.data.ndim != 2:
        raise ShapeError("row expects a 2D tensor")
    out = a.data[i].copy()

    def bwd(g):
        full = np.zeros_like(a.data)
        full[i] = g
        return (full,)

    return _node(out, "row", (a,), bwd)


def rows(a: Tensor, idx: Iterable[int]) -> Tensor:
    """Gather rows of a 2D tensor; duplicate indices accumulate gradient."""
    if a.data.ndim != 2:
        raise ShapeError("rows expects a 2D tensor")
    ii = np.asarray(list(idx), dtype=np.intp)
    out = a.data[ii].copy()

    def bwd(g):
        full = np.zeros_like(a.data)
        np.add.at(full, ii, g)
        return (full,)

    return _node(out, "rows", (a,), bwd)


def take(a: Tensor, idx: Iterable[int]) -> Tensor:
    """Gather elements of a 1D tensor."""
    if a.data.ndim != 1:
        raise ShapeError("take expects a 1D tensor")
    ii = np.asarray(list(idx), dtype=np.intp)
    out = a.data[ii].copy()

    def bwd(g):
        full = np.zeros_like(a.data)
        np.add.at(full, ii, g)
        return (full,)

    return _node(out, "take", (a,), bwd)


def lstm_cell(zx: Tensor, h: Tensor, c: Tensor, U: Tensor, b: Tensor) -> Tensor:
    """One fused LSTM step; returns concat(h_new, c_new) of length 2H.

    ``zx`` is the input's precomputed gate projection (4H,), ``U`` the
    recurrent weights (H, 4H), ``b`` the gate bias (4H,).  Gate order is
    input, forget, cell, output.  Fusing the whole cell into one node keeps
    graphs small enough to train at tolerable speed in pure Python.
    """
    H = h.data.shape[0]
    if zx.data.shape != (4 * H,) or U.data.shape != (H, 4 * H) or b.data.shape != (4 * H,):
        raise ShapeError(
            f"lstm_cell shapes disagree: zx {zx.data.shape}, h {h.data.shape}, "
            f"U {U.data.shape}, b {b.data.shape}"
        )
    z = zx.data + h.data @ U.data + b.data
    zc = np.clip(z, -60.0, 60.0)
    i = 1.0 / (1.0 + np.exp(-zc[:H]))
    f = 1.0 / (1.0 + np.exp(-zc[H : 2 * H]))
    g = np.tanh(z[2 * H : 3 * H])
    o = 1.0 / (1.0 + np.exp(-zc[3 * H :]))
    c_new = f * c.data + i * g
    tanh_c = np.tanh(c_new)
    h_new = o * tanh_c
    out = np.concatenate([h_new, c_new])

    def bwd(grad):
        gh = grad[:H]
        gc = grad[H:] + gh * o * (1.0 - tanh_c * tanh_c)
        do = gh * tanh_c
        di = gc * g
        df = gc * c.data
        dg = gc * i
        dz = np.concatenate(
            [
                di * i * (1.0 - i),
                df * f * (1.0 - f),
                dg * (1.0 - g * g),
                do * o * (1.0 - o),
            ]
        )
        return dz, dz @ U.data.T, gc * f, np.outer(h.data, dz), dz

    return _node(out, "lstm_cell", (zx, h, c, U, b), bwd)


def dropout(a: Tensor, rate: float, rng: np.random.Generator) -> Tensor:
    """Inverted dropout; call only in training mode."""
    if not 0.0 <= rate < 1.0:
        raise ContractError(f"dropout rate must be in [0, 1), got {rate}")
    if rate == 0.0:
        return a
    keep = 1.0 - rate
    mask = (rng.random(a.data.shape) < keep).astype(a.data.dtype) / keep
    out = a.data * mask
    return _node(out, "dropout", (a,), lambda g: (g * mask,))


def zeros(n: int, dtype=None) -> Tensor:
    return Tensor(np.zeros(n, dtype=dtype or DEFAULT_DTYPE))


# ---------------------------------------------------------------------------
# backward
# ---------------------------------------------------------------------------


def _topo_order(root: Tensor) -> list[Tensor]:
    """Iterative post-order over the graph (graphs are deep; no recursion)."""
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in seen:
                stack.append((p, False))
    return order


def backward(loss: Tensor, params: Sequence[Tensor] | None = None) -> dict[Tensor, np.ndarray]:
    """Gradient of a scalar ``loss`` w.r.t. parameter leaves.

    Returns a fresh ``{tensor: gradient}`` mapping.  When ``params`` is given,
    every listed tensor gets an entry, zero-filled if it does not lie on any
    path to the loss; otherwise the mapping covers the parameter leaves
    actually reached.
    """
    if loss.data.shape != ():
        raise ContractError(f"backward expects a scalar loss, got shape {loss.data.shape}")
    order = _topo_order(loss)
    grads: dict[int, np.ndarray] = {id(loss): np.ones((), dtype=loss.data.dtype)}
    by_id: dict[int, Tensor] = {}
    for node in reversed(order):
        g = grads.get(id(node))
        if g is None:
            continue
        if node.is_param:
            by_id[id(node)] = node
        if node._bwd is None:
            continue
        parent_grads = node._bwd(g)
        for p, pg in zip(node._parents, parent_grads):
            if pg is None:
                continue
            acc = grads.get(id(p))
            # stored grads are never mutated in place, so storing views is safe
            grads[id(p)] = pg if acc is None else acc + pg
    result: dict[Tensor, np.ndarray] = {t: grads[i] for i, t in by_id.items()}
    if params is not None:
        for p in params:
            if p not in result:
                result[p] = np.zeros_like(p.data)
    return result
