"""Minimal dense-tensor engine with reverse-mode differentiation.

Tensors wrap 64-bit numpy arrays. Every operation that sees at least one
``requires_grad`` input records a backward closure; calling :func:`backward`
on a scalar loss walks the recorded graph once in reverse topological order
and accumulates gradients into the leaves. The op set is exactly what the
claim-classification model needs, nothing more.
"""

from __future__ import annotations

import numpy as np

# When enabled, every op asserts that its output is finite.
_NAN_CHECK = False


def set_nan_check(enabled: bool) -> None:
    """Toggle NaN/Inf detection on every op output (debug aid)."""
    global _NAN_CHECK
    _NAN_CHECK = bool(enabled)


class Tensor:
    """A dense float64 array plus optional gradient bookkeeping."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad = None
        self._parents = ()
        self._backward = None

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    def item(self) -> float:
        return float(self.data)

    # operator sugar -------------------------------------------------
    def __add__(self, other):
        return add(self, _wrap(other))

    def __radd__(self, other):
        return add(_wrap(other), self)

    def __sub__(self, other):
        return sub(self, _wrap(other))

    def __rsub__(self, other):
        return sub(_wrap(other), self)

    def __mul__(self, other):
        return mul(self, _wrap(other))

    def __rmul__(self, other):
        return mul(_wrap(other), self)

    def __truediv__(self, other):
        return div(self, _wrap(other))

    def __rtruediv__(self, other):
        return div(_wrap(other), self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __neg__(self):
        return scale(self, -1.0)


def _wrap(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _node(data: np.ndarray, parents, backward_fn) -> Tensor:
    """Create a graph node; constant-fold when no parent needs gradients."""
    if _NAN_CHECK and not np.all(np.isfinite(data)):
        raise FloatingPointError("non-finite value produced by an op")
    out = Tensor(data)
    if any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward_fn
    return out


def _accumulate(t: Tensor, g: np.ndarray) -> None:
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = g.copy() if isinstance(g, np.ndarray) else np.asarray(g, dtype=np.float64)
    else:
        t.grad += g


def _unbroadcast(g: np.ndarray, shape) -> np.ndarray:
    """Sum a gradient over the axes that numpy broadcasting expanded."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g.reshape(shape)


# ---------------------------------------------------------------------------
# elementwise binary ops (numpy broadcasting, gradient unbroadcast)
# ---------------------------------------------------------------------------

def _binary(a: Tensor, b: Tensor, fwd, bwd_a, bwd_b) -> Tensor:
    try:
        data = fwd(a.data, b.data)
    except ValueError:
        raise ValueError(f"shape mismatch: {a.data.shape} vs {b.data.shape}") from None

    def backward(g):
        _accumulate(a, _unbroadcast(bwd_a(g, a.data, b.data), a.data.shape))
        _accumulate(b, _unbroadcast(bwd_b(g, a.data, b.data), b.data.shape))

    return _node(data, (a, b), backward)


def add(a: Tensor, b: Tensor) -> Tensor:
    return _binary(a, b, np.add, lambda g, x, y: g, lambda g, x, y: g)


def sub(a: Tensor, b: Tensor) -> Tensor:
    return _binary(a, b, np.subtract, lambda g, x, y: g, lambda g, x, y: -g)


def mul(a: Tensor, b: Tensor) -> Tensor:
    return _binary(a, b, np.multiply, lambda g, x, y: g * y, lambda g, x, y: g * x)


def div(a: Tensor, b: Tensor) -> Tensor:
    return _binary(
        a, b, np.divide,
        lambda g, x, y: g / y,
        lambda g, x, y: -g * x / (y * y),
    )


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2 or a.data.shape[1] != b.data.shape[0]:
        raise ValueError(f"shape mismatch: {a.data.shape} @ {b.data.shape}")
    data = a.data @ b.data

    def backward(g):
        _accumulate(a, g @ b.data.T)
        _accumulate(b, a.data.T @ g)

    return _node(data, (a, b), backward)


# ---------------------------------------------------------------------------
# unary ops
# ---------------------------------------------------------------------------

def _unary(a: Tensor, data: np.ndarray, grad_fn) -> Tensor:
    def backward(g):
        _accumulate(a, grad_fn(g))

    return _node(data, (a,), backward)


def scale(a: Tensor, s: float) -> Tensor:
    return _unary(a, a.data * s, lambda g: g * s)


def leaky_relu(a: Tensor, slope: float) -> Tensor:
    mask = a.data >= 0
    data = np.where(mask, a.data, slope * a.data)
    return _unary(a, data, lambda g: np.where(mask, g, slope * g))


def tanh(a: Tensor) -> Tensor:
    t = np.tanh(a.data)
    return _unary(a, t, lambda g: g * (1.0 - t * t))


def artanh(a: Tensor) -> Tensor:
    if np.any(np.abs(a.data) >= 1.0):
        raise ValueError("artanh argument must satisfy |x| < 1")
    return _unary(a, np.arctanh(a.data), lambda g: g / (1.0 - a.data * a.data))


def cosh(a: Tensor) -> Tensor:
    return _unary(a, np.cosh(a.data), lambda g: g * np.sinh(a.data))


def sinh(a: Tensor) -> Tensor:
    return _unary(a, np.sinh(a.data), lambda g: g * np.cosh(a.data))


def arcosh(a: Tensor) -> Tensor:
    if np.any(a.data < 1.0):
        raise ValueError("arcosh argument must satisfy x >= 1")
    # derivative blows up at x = 1; the floor keeps coincident points from
    # poisoning the whole backward pass with NaNs
    denom = np.sqrt(np.maximum(a.data * a.data - 1.0, 1e-30))
    return _unary(a, np.arccosh(a.data), lambda g: g / denom)


def log(a: Tensor) -> Tensor:
    return _unary(a, np.log(a.data), lambda g: g / a.data)


def exp(a: Tensor) -> Tensor:
    e = np.exp(a.data)
    return _unary(a, e, lambda g: g * e)


def sqrt(a: Tensor) -> Tensor:
    r = np.sqrt(a.data)
    return _unary(a, r, lambda g: g * 0.5 / np.maximum(r, 1e-150))


def square(a: Tensor) -> Tensor:
    return _unary(a, a.data * a.data, lambda g: g * 2.0 * a.data)


def clamp(a: Tensor, lo: float | None = None, hi: float | None = None) -> Tensor:
    data = np.clip(a.data, lo, hi)
    inside = np.ones_like(a.data, dtype=bool)
    if lo is not None:
        inside &= a.data >= lo
    if hi is not None:
        inside &= a.data <= hi
    return _unary(a, data, lambda g: np.where(inside, g, 0.0))


def transpose(a: Tensor) -> Tensor:
    return _unary(a, a.data.T, lambda g: g.T)


def total_sum(a: Tensor) -> Tensor:
    return _unary(a, np.asarray(a.data.sum()), lambda g: np.broadcast_to(g, a.data.shape))


def sum_cols(a: Tensor) -> Tensor:
    """Row-wise sum, keeping a trailing singleton column: (n, d) -> (n, 1)."""
    return _unary(
        a, a.data.sum(axis=1, keepdims=True),
        lambda g: np.broadcast_to(g, a.data.shape),
    )


def row_norm(a: Tensor) -> Tensor:
    """Euclidean norm of each row, shape (n, d) -> (n, 1).

    Zero rows get a zero (sub)gradient rather than NaN.
    """
    n = np.linalg.norm(a.data, axis=1, keepdims=True)

    def grad_fn(g):
        safe = np.maximum(n, 1e-300)
        return g * np.where(n > 0.0, a.data / safe, 0.0)

    return _unary(a, n, grad_fn)


def softmax(a: Tensor) -> Tensor:
    z = a.data - a.data.max(axis=1, keepdims=True)
    e = np.exp(z)
    s = e / e.sum(axis=1, keepdims=True)

    def grad_fn(g):
        return s * (g - (g * s).sum(axis=1, keepdims=True))

    return _unary(a, s, grad_fn)


def log_softmax(a: Tensor) -> Tensor:
    z = a.data - a.data.max(axis=1, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=1, keepdims=True))
    out = z - lse
    s = np.exp(out)

    def grad_fn(g):
        return g - s * g.sum(axis=1, keepdims=True)

    return _unary(a, out, grad_fn)


def narrow_cols(a: Tensor, start: int, stop: int) -> Tensor:
    data = a.data[:, start:stop]

    def grad_fn(g):
        full = np.zeros_like(a.data)
        full[:, start:stop] = g
        return full

    return _unary(a, data.copy(), grad_fn)


def gather_rows(a: Tensor, index) -> Tensor:
    index = np.asarray(index, dtype=np.int64)
    if index.size and (index.min() < 0 or index.max() >= a.data.shape[0]):
        raise IndexError(f"row index out of range for {a.data.shape[0]} rows")
    data = a.data[index]

    def grad_fn(g):
        full = np.zeros_like(a.data)
        np.add.at(full, index, g)
        return full

    return _unary(a, data, grad_fn)


def concat_cols(parts: list[Tensor]) -> Tensor:
    data = np.concatenate([p.data for p in parts], axis=1)
    widths = [p.data.shape[1] for p in parts]
    offsets = np.cumsum([0] + widths)

    def backward(g):
        for p, lo, hi in zip(parts, offsets[:-1], offsets[1:]):
            _accumulate(p, g[:, lo:hi])

    return _node(data, parts, backward)


def concat_rows(parts: list[Tensor]) -> Tensor:
    data = np.concatenate([p.data for p in parts], axis=0)
    heights = [p.data.shape[0] for p in parts]
    offsets = np.cumsum([0] + heights)

    def backward(g):
        for p, lo, hi in zip(parts, offsets[:-1], offsets[1:]):
            _accumulate(p, g[lo:hi])

    return _node(data, parts, backward)


def scatter_mean(rows: Tensor, index, num_segments: int) -> Tensor:
    """Mean of the rows assigned to each segment; empty segments are zero."""
    index = np.asarray(index, dtype=np.int64)
    counts = np.bincount(index, minlength=num_segments).astype(np.float64)
    safe = np.maximum(counts, 1.0)[:, None]
    out = np.zeros((num_segments, rows.data.shape[1]))
    np.add.at(out, index, rows.data)
    out /= safe

    def grad_fn(g):
        return g[index] / safe[index]

    return _unary(rows, out, grad_fn)


def dropout(a: Tensor, p: float, train: bool, rng: np.random.Generator | None = None) -> Tensor:
    """Inverted dropout; exact identity when disabled or p == 0."""
    if not train or p == 0.0:
        return a
    if not 0.0 <= p < 1.0:
        raise ValueError(f"dropout probability must be in [0, 1), got {p}")
    if rng is None:
        raise ValueError("training-mode dropout requires an explicit rng")
    mask = (rng.random(a.data.shape) >= p) / (1.0 - p)
    return _unary(a, a.data * mask, lambda g: g * mask)


# ---------------------------------------------------------------------------
# backward pass
# ---------------------------------------------------------------------------

def backward(loss: Tensor) -> None:
    """Propagate gradients from a scalar loss to every requires_grad leaf.

    Interior nodes are visited exactly once in reverse topological order;
    the tape (parent links and closures) is released afterwards.
    """
    if loss.data.size != 1:
        raise ValueError(f"backward expects a scalar loss, got shape {loss.data.shape}")

    topo: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            topo.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if id(parent) not in seen:
                stack.append((parent, False))

    loss.grad = np.ones_like(loss.data)
    for node in reversed(topo):
        if node._backward is not None and node.grad is not None:
            node._backward(node.grad)
    for node in topo:
        if node._backward is not None:
            node._backward = None
            node._parents = ()
            node.grad = None if node is not loss else node.grad


def zero_grads(tensors) -> None:
    for t in tensors:
        t.grad = None


def finite_diff_check(f, params, eps: float = 1e-5, max_coords: int = 25,
                      rng: np.random.Generator | None = None):
    """Compare analytic gradients of ``f(params) -> scalar Tensor`` with
    central finite differences over sampled coordinates.

    Returns ``(max_rel_error, unstable)`` where ``unstable`` lists
    ``(param_index, coordinate)`` pairs whose numeric estimate came out
    non-finite instead of silently passing.
    """
    rng = rng or np.random.default_rng(0)
    zero_grads(params)
    loss = f(params)
    backward(loss)
    analytic = [np.zeros_like(p.data) if p.grad is None else p.grad.copy() for p in params]

    worst = 0.0
    unstable: list[tuple[int, tuple]] = []
    for pi, p in enumerate(params):
        flat = p.data.reshape(-1)
        n = flat.size
        coords = np.arange(n) if n <= max_coords else rng.choice(n, size=max_coords, replace=False)
        for c in coords:
            orig = flat[c]
            flat[c] = orig + eps
            hi = float(f(params).data)
            flat[c] = orig - eps
            lo = float(f(params).data)
            flat[c] = orig
            numeric = (hi - lo) / (2.0 * eps)
            a = analytic[pi].reshape(-1)[c]
            if not np.isfinite(numeric):
                unstable.append((pi, np.unravel_index(c, p.data.shape)))
                continue
            rel = abs(a - numeric) / max(1.0, abs(a))
            worst = max(worst, rel)
    return worst, unstable
