"""Tape-based reverse-mode automatic differentiation over numpy arrays.

The op set covers exactly what a recurrent attention encoder/decoder needs:
matrix products, concatenation and stacking, elementwise arithmetic, the
usual pointwise nonlinearities, (masked) softmax, inverted dropout,
embedding lookup, a fused LSTM cell and padded token-level cross-entropy.

Every op result keeps links to the tensors it was computed from, together
with a closure that pushes gradients back through the op. ``backward()``
on a scalar loss walks that implicit graph once in reverse topological
order. Graphs are built per forward pass and are not reusable: calling
``backward()`` twice on the same loss raises.

Values are float64 by default (``set_default_dtype`` switches to float32
for faster training); every op checks its output for NaN/Inf and raises
``NumericError`` at the op boundary.
"""

from __future__ import annotations

import contextlib

import numpy as np


class ShapeError(ValueError):
    """Operands have incompatible or otherwise invalid shapes."""


class NumericError(ArithmeticError):
    """A non-finite value appeared at an op boundary."""


_default_dtype = np.float64
_grad_enabled = True


def set_default_dtype(dtype) -> None:
    """Set the dtype used for newly created leaf tensors (float32/float64)."""
    global _default_dtype
    dtype = np.dtype(dtype)
    if dtype not in (np.dtype(np.float32), np.dtype(np.float64)):
        raise ValueError(f"unsupported dtype {dtype}; use float32 or float64")
    _default_dtype = dtype.type


def get_default_dtype():
    return _default_dtype


@contextlib.contextmanager
def no_grad():
    """Disable graph recording inside the block (inference mode)."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


def _check_finite(data: np.ndarray, op: str) -> None:
    if not np.isfinite(data).all():
        raise NumericError(f"non-finite value produced by '{op}'")


class Tensor:
    """Dense real array participating in reverse-mode differentiation."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward",
                 "_group", "_consumed")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=_default_dtype)
        _check_finite(self.data, "tensor")
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self._parents = ()
        self._backward = None
        self._group = None
        self._consumed = False

    @classmethod
    def _from_op(cls, data, parents, backward, op_name):
        data = np.asarray(data)
        _check_finite(data, op_name)
        out = cls.__new__(cls)
        out.data = data
        out.grad = None
        out._group = None
        out._consumed = False
        if _grad_enabled and any(p.requires_grad for p in parents):
            out.requires_grad = True
            out._parents = tuple(p for p in parents if p.requires_grad)
            out._backward = backward
        else:
            out.requires_grad = False
            out._parents = ()
            out._backward = None
        return out

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def numpy(self) -> np.ndarray:
        return self.data

    def _accumulate(self, g: np.ndarray) -> None:
        if self.grad is None:
            # copy so later in-place accumulation cannot alias a child's grad
            self.grad = np.array(g, dtype=self.data.dtype)
        else:
            self.grad += g

    def backward(self) -> None:
        """Populate gradients of this scalar w.r.t. every requires_grad tensor.

        A second call on the same graph (without re-running the forward
        pass) is an error.
        """
        if self.data.ndim != 0:
            raise ShapeError(f"backward requires a scalar, got shape {self.shape}")
        if self._consumed:
            raise RuntimeError("backward already called on this graph; re-run the forward pass")
        self._consumed = True
        order = []
        seen = {id(self)}
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in seen:
                    seen.add(id(p))
                    stack.append((p, False))
        # multi-output ops (the LSTM cell) run once, after the last of their
        # outputs has received its final gradient
        group_pending: dict[int, int] = {}
        for node in order:
            if node._group is not None:
                key = id(node._group)
                group_pending[key] = group_pending.get(key, 0) + 1
        self.grad = np.ones((), dtype=self.data.dtype)
        for node in reversed(order):
            group = node._group
            if group is None:
                if node._backward is not None and node.grad is not None:
                    node._backward(node.grad)
            else:
                key = id(group)
                group_pending[key] -= 1
                if group_pending[key] == 0:
                    group["fn"](*(m.grad for m in group["members"]))

    # A little operator sugar for same-shape arithmetic and matrix products.
    def __add__(self, other):
        return add(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __matmul__(self, other):
        return matmul(self, other)

    def __repr__(self):
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


# ---------------------------------------------------------------------------
# core arithmetic


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product: (m,k)@(k,n), (k,)@(k,n) or (m,k)@(k,)."""
    a, b = _as_tensor(a), _as_tensor(b)
    if a.ndim not in (1, 2) or b.ndim not in (1, 2):
        raise ShapeError(f"matmul needs 1-D/2-D operands, got {a.shape} @ {b.shape}")
    if a.shape[-1] != b.shape[0]:
        raise ShapeError(f"matmul inner extents differ: {a.shape} @ {b.shape}")
    out_data = a.data @ b.data

    def backward(g):
        if a.requires_grad:
            if a.ndim == 1:
                # (k,)@(k,n): da_k = sum_j g_j b_kj
                a._accumulate(b.data @ g if b.ndim == 2 else g * b.data)
            elif b.ndim == 1:
                a._accumulate(np.outer(g, b.data))
            else:
                a._accumulate(g @ b.data.T)
        if b.requires_grad:
            if b.ndim == 1:
                b._accumulate(a.data.T @ g if a.ndim == 2 else g * a.data)
            elif a.ndim == 1:
                b._accumulate(np.outer(a.data, g))
            else:
                b._accumulate(a.data.T @ g)

    return Tensor._from_op(out_data, (a, b), backward, "matmul")


def transpose(x: Tensor) -> Tensor:
    if x.ndim != 2:
        raise ShapeError(f"transpose expects a matrix, got shape {x.shape}")

    def backward(g):
        if x.requires_grad:
            x._accumulate(g.T)

    return Tensor._from_op(x.data.T.copy(), (x,), backward, "transpose")


def add(a: Tensor, b: Tensor) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    if a.shape != b.shape:
        raise ShapeError(f"add shape mismatch: {a.shape} vs {b.shape}")

    def backward(g):
        if a.requires_grad:
            a._accumulate(g)
        if b.requires_grad:
            b._accumulate(g)

    return Tensor._from_op(a.data + b.data, (a, b), backward, "add")


def mul(a: Tensor, b: Tensor) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    if a.shape != b.shape:
        raise ShapeError(f"mul shape mismatch: {a.shape} vs {b.shape}")

    def backward(g):
        if a.requires_grad:
            a._accumulate(g * b.data)
        if b.requires_grad:
            b._accumulate(g * a.data)

    return Tensor._from_op(a.data * b.data, (a, b), backward, "mul")


def scale(x: Tensor, c: float) -> Tensor:
    c = float(c)

    def backward(g):
        if x.requires_grad:
            x._accumulate(g * c)

    return Tensor._from_op(x.data * c, (x,), backward, "scale")


def add_rowvec(mat: Tensor, vec: Tensor) -> Tensor:
    """(n,d) + (d,) broadcast over rows."""
    if mat.ndim != 2 or vec.ndim != 1 or mat.shape[1] != vec.shape[0]:
        raise ShapeError(f"add_rowvec shape mismatch: {mat.shape} + {vec.shape}")

    def backward(g):
        if mat.requires_grad:
            mat._accumulate(g)
        if vec.requires_grad:
            vec._accumulate(g.sum(axis=0))

    return Tensor._from_op(mat.data + vec.data[None, :], (mat, vec), backward, "add_rowvec")


def add_colvec(mat: Tensor, vec: Tensor) -> Tensor:
    """(n,d) + (n,) broadcast over columns."""
    if mat.ndim != 2 or vec.ndim != 1 or mat.shape[0] != vec.shape[0]:
        raise ShapeError(f"add_colvec shape mismatch: {mat.shape} + {vec.shape}")

    def backward(g):
        if mat.requires_grad:
            mat._accumulate(g)
        if vec.requires_grad:
            vec._accumulate(g.sum(axis=1))

    return Tensor._from_op(mat.data + vec.data[:, None], (mat, vec), backward, "add_colvec")


def mul_rowvec(mat: Tensor, vec: Tensor) -> Tensor:
    """(n,d) * (d,) broadcast over rows."""
    if mat.ndim != 2 or vec.ndim != 1 or mat.shape[1] != vec.shape[0]:
        raise ShapeError(f"mul_rowvec shape mismatch: {mat.shape} * {vec.shape}")

    def backward(g):
        if mat.requires_grad:
            mat._accumulate(g * vec.data[None, :])
        if vec.requires_grad:
            vec._accumulate((g * mat.data).sum(axis=0))

    return Tensor._from_op(mat.data * vec.data[None, :], (mat, vec), backward, "mul_rowvec")


def reduce_sum(x: Tensor) -> Tensor:
    def backward(g):
        if x.requires_grad:
            x._accumulate(np.full_like(x.data, g))

    return Tensor._from_op(x.data.sum(), (x,), backward, "reduce_sum")


# ---------------------------------------------------------------------------
# shape manipulation


def concat(parts, axis: int = 0) -> Tensor:
    """Concatenate tensors along ``axis``; all other extents must agree."""
    parts = [_as_tensor(p) for p in parts]
    if not parts:
        raise ShapeError("concat of zero parts")
    if len(parts) == 1:
        return parts[0]
    ndim = parts[0].ndim
    if any(p.ndim != ndim for p in parts):
        raise ShapeError("concat parts have different ranks")
    if not 0 <= axis < ndim:
        raise ShapeError(f"concat axis {axis} out of range for rank {ndim}")
    base = list(parts[0].shape)
    for p in parts[1:]:
        other = list(p.shape)
        if [e for i, e in enumerate(other) if i != axis] != [e for i, e in enumerate(base) if i != axis]:
            raise ShapeError(f"concat extent mismatch: {parts[0].shape} vs {p.shape}")
    out_data = np.concatenate([p.data for p in parts], axis=axis)
    offsets = np.cumsum([0] + [p.shape[axis] for p in parts])

    def backward(g):
        for p, lo, hi in zip(parts, offsets[:-1], offsets[1:]):
            if p.requires_grad:
                sl = [slice(None)] * ndim
                sl[axis] = slice(lo, hi)
                p._accumulate(g[tuple(sl)])

    return Tensor._from_op(out_data, tuple(parts), backward, "concat")


def stack(parts) -> Tensor:
    """Stack equal-length vectors into a matrix, one row per part."""
    parts = [_as_tensor(p) for p in parts]
    if not parts:
        raise ShapeError("stack of zero parts")
    if any(p.ndim != 1 or p.shape != parts[0].shape for p in parts):
        raise ShapeError("stack expects equal-length vectors")
    out_data = np.stack([p.data for p in parts])

    def backward(g):
        for i, p in enumerate(parts):
            if p.requires_grad:
                p._accumulate(g[i])

    return Tensor._from_op(out_data, tuple(parts), backward, "stack")


def take_row(x: Tensor, i: int) -> Tensor:
    if x.ndim != 2:
        raise ShapeError(f"take_row expects a matrix, got shape {x.shape}")
    if not 0 <= i < x.shape[0]:
        raise ShapeError(f"row {i} out of range for shape {x.shape}")

    def backward(g):
        if x.requires_grad:
            buf = np.zeros_like(x.data)
            buf[i] = g
            x._accumulate(buf)

    return Tensor._from_op(x.data[i].copy(), (x,), backward, "take_row")


def slice1d(x: Tensor, start: int, stop: int) -> Tensor:
    if x.ndim != 1:
        raise ShapeError(f"slice1d expects a vector, got shape {x.shape}")
    if not 0 <= start <= stop <= x.shape[0]:
        raise ShapeError(f"slice [{start}:{stop}] out of range for shape {x.shape}")

    def backward(g):
        if x.requires_grad:
            buf = np.zeros_like(x.data)
            buf[start:stop] = g
            x._accumulate(buf)

    return Tensor._from_op(x.data[start:stop].copy(), (x,), backward, "slice1d")


def broadcast_rows(vec: Tensor, n: int) -> Tensor:
    """Repeat a vector as n identical matrix rows."""
    if vec.ndim != 1:
        raise ShapeError(f"broadcast_rows expects a vector, got shape {vec.shape}")
    if n < 1:
        raise ShapeError("broadcast_rows needs n >= 1")

    def backward(g):
        if vec.requires_grad:
            vec._accumulate(g.sum(axis=0))

    return Tensor._from_op(np.tile(vec.data, (n, 1)), (vec,), backward, "broadcast_rows")


# ---------------------------------------------------------------------------
# nonlinearities


def _sigmoid_stable(x: np.ndarray) -> np.ndarray:
    z = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + z), z / (1.0 + z))


def sigmoid(x: Tensor) -> Tensor:
    out_data = _sigmoid_stable(x.data)

    def backward(g):
        if x.requires_grad:
            x._accumulate(g * out_data * (1.0 - out_data))

    return Tensor._from_op(out_data, (x,), backward, "sigmoid")


def tanh(x: Tensor) -> Tensor:
    out_data = np.tanh(x.data)

    def backward(g):
        if x.requires_grad:
            x._accumulate(g * (1.0 - out_data * out_data))

    return Tensor._from_op(out_data, (x,), backward, "tanh")


def relu(x: Tensor) -> Tensor:
    out_data = np.maximum(x.data, 0.0)

    def backward(g):
        if x.requires_grad:
            x._accumulate(g * (x.data > 0))

    return Tensor._from_op(out_data, (x,), backward, "relu")


def softmax(x: Tensor, mask: np.ndarray | None = None) -> Tensor:
    """Softmax along the last axis, numerically stabilised by max-subtraction.

    ``mask`` is a boolean array broadcastable to ``x.shape``; masked-out
    positions get weight exactly 0 (equivalent to a -inf score). A fully
    masked row is an error.
    """
    if x.size == 0:
        raise ShapeError("softmax of empty input")
    data = x.data
    if mask is not None:
        m = np.broadcast_to(np.asarray(mask, dtype=bool), data.shape)
        if not m.any(axis=-1).all():
            raise ShapeError("softmax row has no unmasked entries")
        shifted = np.where(m, data - np.where(m, data, -np.inf).max(axis=-1, keepdims=True), 0.0)
        e = np.exp(shifted) * m
    else:
        e = np.exp(data - data.max(axis=-1, keepdims=True))
    out_data = e / e.sum(axis=-1, keepdims=True)

    def backward(g):
        if x.requires_grad:
            inner = (g * out_data).sum(axis=-1, keepdims=True)
            x._accumulate(out_data * (g - inner))

    return Tensor._from_op(out_data, (x,), backward, "softmax")


def dropout(x: Tensor, rate: float, training: bool, rng: np.random.Generator | None = None) -> Tensor:
    """Inverted dropout: zero with probability ``rate``, scale survivors."""
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return x
    if rng is None:
        raise ValueError("dropout in training mode needs an rng")
    keep = (rng.random(x.shape) >= rate) / (1.0 - rate)

    def backward(g):
        if x.requires_grad:
            x._accumulate(g * keep)

    return Tensor._from_op(x.data * keep, (x,), backward, "dropout")


# ---------------------------------------------------------------------------
# lookup and loss


def embedding_lookup(table: Tensor, ids) -> Tensor:
    """Gather rows of ``table`` (V,E) by integer id; grads scatter-add back."""
    ids = np.asarray(ids, dtype=np.int64)
    if ids.ndim != 1:
        raise ShapeError(f"embedding ids must be a 1-D sequence, got shape {ids.shape}")
    if table.ndim != 2:
        raise ShapeError(f"embedding table must be a matrix, got shape {table.shape}")
    if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
        raise ValueError(f"embedding id out of range [0, {table.shape[0]}): {ids}")

    def backward(g):
        if table.requires_grad:
            buf = np.zeros_like(table.data)
            np.add.at(buf, ids, g)
            table._accumulate(buf)

    return Tensor._from_op(table.data[ids], (table,), backward, "embedding_lookup")


def cross_entropy(logits: Tensor, targets, pad_id: int | None = None) -> Tensor:
    """Mean negative log-likelihood of ``targets`` under softmax(logits).

    ``logits`` is (N,V); positions whose target equals ``pad_id`` are
    excluded from the mean.
    """
    targets = np.asarray(targets, dtype=np.int64)
    if logits.ndim != 2:
        raise ShapeError(f"cross_entropy expects (N,V) logits, got {logits.shape}")
    if targets.shape != (logits.shape[0],):
        raise ShapeError(f"targets shape {targets.shape} does not match logits {logits.shape}")
    n, v = logits.shape
    valid = np.ones(n, dtype=bool) if pad_id is None else targets != pad_id
    if not valid.any():
        raise ShapeError("cross_entropy with no non-pad targets")
    checked = targets[valid]
    if checked.min() < 0 or checked.max() >= v:
        raise ValueError(f"target id out of vocabulary (V={v})")

    shifted = logits.data - logits.data.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_probs = shifted - log_z
    n_valid = int(valid.sum())
    rows = np.arange(n)
    nll = -log_probs[rows[valid], targets[valid]]
    out_data = np.asarray(nll.sum() / n_valid, dtype=logits.data.dtype)

    def backward(g):
        if logits.requires_grad:
            d = np.exp(log_probs)
            d[rows[valid], targets[valid]] -= 1.0
            d[~valid] = 0.0
            logits._accumulate(d * (g / n_valid))

    return Tensor._from_op(out_data, (logits,), backward, "cross_entropy")


# ---------------------------------------------------------------------------
# fused LSTM cell


def lstm_cell(x: Tensor, h_prev: Tensor, c_prev: Tensor, W: Tensor, U: Tensor, b: Tensor):
    """One LSTM step with fused gates; returns (h, c).

    ``W`` is (input,4H), ``U`` (H,4H), ``b`` (4H,), gate order (i,f,o,g):

        i = sigmoid(z_i)   f = sigmoid(z_f)   o = sigmoid(z_o)   g = tanh(z_g)
        c = f*c_prev + i*g
        h = o*tanh(c)

    Both returned tensors are differentiable through all six inputs.
    """
    hid = h_prev.shape[0] if h_prev.ndim == 1 else -1
    if x.ndim != 1 or h_prev.ndim != 1 or c_prev.ndim != 1:
        raise ShapeError("lstm_cell expects vector inputs")
    if c_prev.shape != h_prev.shape:
        raise ShapeError(f"h/c shape mismatch: {h_prev.shape} vs {c_prev.shape}")
    if W.shape != (x.shape[0], 4 * hid) or U.shape != (hid, 4 * hid) or b.shape != (4 * hid,):
        raise ShapeError(
            f"lstm weights {W.shape}/{U.shape}/{b.shape} do not fit input {x.shape}, hidden {h_prev.shape}"
        )

    z = x.data @ W.data + h_prev.data @ U.data + b.data
    ifo = _sigmoid_stable(z[: 3 * hid])
    i = ifo[:hid]
    f = ifo[hid : 2 * hid]
    o = ifo[2 * hid :]
    g = np.tanh(z[3 * hid :])
    c_new = f * c_prev.data + i * g
    tc = np.tanh(c_new)
    h_new = o * tc

    parents = (x, h_prev, c_prev, W, U, b)

    def fused_backward(gh, gc):
        # gh/gc are the final gradients of h/c (either may be None)
        if gh is not None:
            dc_eff = gh * o * (1.0 - tc * tc)
            if gc is not None:
                dc_eff += gc
            d_pre_o = gh * tc * o * (1.0 - o)
        else:
            if gc is None:
                return
            dc_eff = gc
            d_pre_o = np.zeros(hid, dtype=z.dtype)
        d_pre = np.empty_like(z)
        d_pre[:hid] = dc_eff * g * i * (1.0 - i)
        d_pre[hid : 2 * hid] = dc_eff * c_prev.data * f * (1.0 - f)
        d_pre[2 * hid : 3 * hid] = d_pre_o
        d_pre[3 * hid :] = dc_eff * i * (1.0 - g * g)
        if x.requires_grad:
            x._accumulate(W.data @ d_pre)
        if h_prev.requires_grad:
            h_prev._accumulate(U.data @ d_pre)
        if c_prev.requires_grad:
            c_prev._accumulate(dc_eff * f)
        if W.requires_grad:
            W._accumulate(x.data[:, None] * d_pre[None, :])
        if U.requires_grad:
            U._accumulate(h_prev.data[:, None] * d_pre[None, :])
        if b.requires_grad:
            b._accumulate(d_pre)

    h_out = Tensor._from_op(h_new, parents, None, "lstm_cell")
    c_out = Tensor._from_op(c_new, parents, None, "lstm_cell")
    if h_out.requires_grad:
        group = {"members": (h_out, c_out), "fn": fused_backward}
        h_out._group = group
        c_out._group = group
    return h_out, c_out
