"""Reverse-mode differentiation over dense 2-D tensors, plus Adam and weight clipping.

Values are stored in float32 by default (a tape can be opened in float64 for
verification); reductions and every backward accumulation run in float64.
The primitive set is deliberately tiny: matmul, bias add, broadcast
elementwise add/sub/mul, relu (which doubles as the max(0, .) hinge clamp),
leaky relu, exp, log, sigmoid, square, sum/mean reductions and a fused
softmax cross-entropy. Everything else in the package is composed from these.

ReLU-family kinks use subgradient 0 at the kink itself. Each tape tracks how
close any kinked primitive came to its kink (`Tape.kink_clearance`) so
finite-difference checks can exclude ill-posed points on principled grounds.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError, ContractError, NumericError, ShapeError

__all__ = [
    "Tape",
    "Node",
    "matmul",
    "bias_add",
    "add",
    "sub",
    "mul",
    "relu",
    "leaky_relu",
    "exp",
    "log",
    "sigmoid",
    "square",
    "reduce_sum",
    "reduce_mean",
    "softmax_cross_entropy",
    "clamp",
    "row_sum",
    "gather_rows",
    "backward",
    "gradient_check",
    "AdamState",
    "clip_weights",
]


def _as_matrix(value, dtype):
    arr = np.asarray(value, dtype=dtype)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(1, -1)
    elif arr.ndim != 2:
        raise ShapeError(f"tensors are 2-D, got ndim={arr.ndim}")
    return arr


class Node:
    """One value on a tape: a leaf (parameter or constant) or an op output."""

    __slots__ = ("tape", "value", "grad", "requires_grad", "op", "name", "_parents", "_push")

    def __init__(self, tape, value, requires_grad, op, name, parents=(), push=None):
        self.tape = tape
        self.value = value
        self.grad = None
        self.requires_grad = requires_grad
        self.op = op
        self.name = name
        self._parents = parents
        self._push = push

    @property
    def rows(self):
        return self.value.shape[0]

    @property
    def cols(self):
        return self.value.shape[1]

    def _accumulate(self, piece):
        if self.grad is None:
            self.grad = np.zeros(self.value.shape, dtype=np.float64)
        self.grad += piece

    # Light operator sugar so loss code stays readable; floats lift to consts.
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(_lift(self.tape, other), self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(self, other)

    def __neg__(self):
        return mul(self, -1.0)

    def __repr__(self):
        return f"Node({self.op}:{self.name}, {self.rows}x{self.cols})"


class Tape:
    """Ordered record of primitive ops; creation order is a topological order."""

    def __init__(self, dtype=np.float32):
        if dtype not in (np.float32, np.float64):
            raise ConfigError("tape dtype must be float32 or float64")
        self.dtype = dtype
        self.nodes = []
        self.kink_clearance = np.inf
        self.kink_patterns = []  # one active/inactive mask per kinked primitive
        self._backward_done = False

    def param(self, value, name="param"):
        """Register a trainable leaf. Float arrays matching the tape dtype are
        referenced in place so optimizer updates and tape reads stay coherent."""
        arr = np.asarray(value)
        if arr.ndim == 2 and arr.dtype == self.dtype:
            mat = arr
        else:
            mat = _as_matrix(value, self.dtype)
        _check_finite(mat, "param", name)
        node = Node(self, mat, True, "param", name)
        self.nodes.append(node)
        return node

    def const(self, value, name="const"):
        mat = _as_matrix(value, self.dtype)
        _check_finite(mat, "const", name)
        node = Node(self, mat, False, "const", name)
        self.nodes.append(node)
        return node

    def _record(self, value, parents, push, op):
        if value.dtype != self.dtype:
            value = value.astype(self.dtype)
        _check_finite(value, op)
        requires = any(p.requires_grad for p in parents)
        node = Node(self, value, requires, op, op, parents if requires else (),
                    push if requires else None)
        self.nodes.append(node)
        return node

    def _note_kink(self, clearance, pattern):
        if clearance < self.kink_clearance:
            self.kink_clearance = clearance
        self.kink_patterns.append(pattern)

    def kink_signature(self):
        """Activation pattern of every kinked primitive, in creation order."""
        return self.kink_patterns


def _check_finite(value, op, name=None):
    if not np.all(np.isfinite(value)):
        label = f"{op}({name})" if name else op
        raise NumericError(f"non-finite output in primitive {label}")


def _lift(tape, value):
    if isinstance(value, Node):
        return value
    return tape.const(value)


def _same_tape(a, b):
    if a.tape is not b.tape:
        raise ContractError("operands recorded on different tapes")


# ---------------------------------------------------------------------------
# primitives


def matmul(a, b):
    _same_tape(a, b)
    if a.cols != b.rows:
        raise ShapeError(f"matmul: {a.rows}x{a.cols} @ {b.rows}x{b.cols}")
    a64 = a.value.astype(np.float64)
    b64 = b.value.astype(np.float64)
    out = (a64 @ b64).astype(a.tape.dtype)

    def push(g):
        if a.requires_grad:
            a._accumulate(g @ b64.T)
        if b.requires_grad:
            b._accumulate(a64.T @ g)

    return a.tape._record(out, (a, b), push, "matmul")


def bias_add(x, bias):
    _same_tape(x, bias)
    if bias.rows != 1 or bias.cols != x.cols:
        raise ShapeError(f"bias_add: {x.rows}x{x.cols} + {bias.rows}x{bias.cols}")
    out = x.value + bias.value

    def push(g):
        if x.requires_grad:
            x._accumulate(g)
        if bias.requires_grad:
            bias._accumulate(g.sum(axis=0, keepdims=True))

    return x.tape._record(out, (x, bias), push, "bias_add")


def _broadcast_shapes(sa, sb, op):
    try:
        return np.broadcast_shapes(sa, sb)
    except ValueError:
        raise ShapeError(f"{op}: shapes {sa} and {sb} do not broadcast") from None


def _unbroadcast(g, shape):
    # Sum gradient over axes the forward op broadcast along.
    for axis in (0, 1):
        if shape[axis] == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def _elementwise(a, b, op, fwd, da, db):
    tape = a.tape if isinstance(a, Node) else b.tape
    a = _lift(tape, a)
    b = _lift(tape, b)
    _same_tape(a, b)
    _broadcast_shapes(a.value.shape, b.value.shape, op)
    out = fwd(a.value, b.value)

    def push(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(da(g, a.value, b.value), a.value.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(db(g, a.value, b.value), b.value.shape))

    return tape._record(out, (a, b), push, op)


def add(a, b):
    return _elementwise(a, b, "add", lambda x, y: x + y,
                        lambda g, x, y: g, lambda g, x, y: g)


def sub(a, b):
    return _elementwise(a, b, "sub", lambda x, y: x - y,
                        lambda g, x, y: g, lambda g, x, y: -g)


def mul(a, b):
    return _elementwise(a, b, "mul", lambda x, y: x * y,
                        lambda g, x, y: g * y.astype(np.float64),
                        lambda g, x, y: g * x.astype(np.float64))


def _unary(x, op, fwd, dx, kinked=False):
    value = x.value
    out = fwd(value)
    if kinked and value.size:
        clearance = float(np.min(np.abs(value.astype(np.float64))))
        x.tape._note_kink(clearance, value > 0)

    def push(g):
        x._accumulate(g * dx(value))

    return x.tape._record(out, (x,), push, op)


def relu(x):
    """max(0, .): the activation and the hinge clamp are the same primitive."""
    return _unary(x, "relu", lambda v: np.maximum(v, 0),
                  lambda v: (v > 0).astype(np.float64), kinked=True)


def leaky_relu(x, slope=0.2):
    def dx(v):
        d = np.ones(v.shape, dtype=np.float64)
        d[v <= 0] = slope
        return d

    return _unary(x, "leaky_relu", lambda v: np.where(v > 0, v, slope * v),
                  dx, kinked=True)


def exp(x):
    with np.errstate(over="ignore"):
        return _unary(x, "exp", lambda v: np.exp(v),
                      lambda v: np.exp(v.astype(np.float64)))


def log(x):
    with np.errstate(divide="ignore", invalid="ignore"):
        return _unary(x, "log", lambda v: np.log(v),
                      lambda v: 1.0 / v.astype(np.float64))


def sigmoid(x):
    def fwd(v):
        v64 = v.astype(np.float64)
        out = np.empty_like(v64)
        pos = v64 >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-v64[pos]))
        e = np.exp(v64[~pos])
        out[~pos] = e / (1.0 + e)
        return out.astype(v.dtype)

    def dx(v):
        s = fwd(v).astype(np.float64)
        return s * (1.0 - s)

    return _unary(x, "sigmoid", fwd, dx)


def square(x):
    return _unary(x, "square", lambda v: v * v,
                  lambda v: 2.0 * v.astype(np.float64))


def _reduce(x, axis, op, mean):
    v64 = x.value.astype(np.float64)
    denom = v64.size if axis is None else v64.shape[axis]
    total = v64.sum(axis=axis, keepdims=axis is not None)
    if axis is None:
        total = np.array([[total]])
    if mean:
        total = total / denom
    out = total.astype(x.tape.dtype)
    scale = 1.0 / denom if mean else 1.0

    def push(g):
        x._accumulate(np.broadcast_to(g * scale, x.value.shape))

    return x.tape._record(out, (x,), push, op)


def reduce_sum(x, axis=None):
    """Sum over all entries (1x1), rows (axis=0 -> 1xm) or columns (axis=1 -> nx1)."""
    return _reduce(x, axis, "sum", mean=False)


def reduce_mean(x, axis=None):
    return _reduce(x, axis, "mean", mean=True)


def softmax_cross_entropy(logits, labels):
    """Mean negative log-softmax probability of integer `labels` (length n)."""
    labels = np.asarray(labels)
    if labels.ndim != 1 or labels.shape[0] != logits.rows:
        raise ShapeError(f"labels shape {labels.shape} for {logits.rows} logit rows")
    if labels.min(initial=0) < 0 or labels.max(initial=0) >= logits.cols:
        raise ContractError("label index outside logit columns")
    v = logits.value.astype(np.float64)
    shifted = v - v.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_probs = shifted - log_z
    n = logits.rows
    out = np.array([[-log_probs[np.arange(n), labels].mean()]], dtype=logits.tape.dtype)
    probs = np.exp(log_probs)

    def push(g):
        delta = probs.copy()
        delta[np.arange(n), labels] -= 1.0
        logits._accumulate(g[0, 0] * delta / n)

    return logits.tape._record(out, (logits,), push, "softmax_cross_entropy")


# ---------------------------------------------------------------------------
# compositions (not new primitives)


def clamp(x, lo, hi):
    """min(max(x, lo), hi) as nested relu compositions, so saturation is exact
    even in float32; gradient 1 strictly inside the range, 0 outside."""
    floor = add(relu(sub(x, lo)), lo)          # max(x, lo)
    return sub(hi, relu(sub(hi, floor)))       # min(floor, hi)


def row_sum(x):
    return reduce_sum(x, axis=1)


def gather_rows(matrix, index, n_rows=None):
    """Select rows of a node by integer index via a constant one-hot matmul,
    so the gradient scatter-adds back into the source rows."""
    index = np.asarray(index)
    rows = matrix.rows if n_rows is None else n_rows
    onehot = np.zeros((index.shape[0], rows), dtype=matrix.tape.dtype)
    onehot[np.arange(index.shape[0]), index] = 1.0
    return matmul(matrix.tape.const(onehot, name="row_select"), matrix)


# ---------------------------------------------------------------------------
# backward pass and verification


def backward(loss):
    """Populate `.grad` (float64) on every leaf of the loss's tape.

    Parameters not reachable from the loss get an exact-zero gradient.
    """
    if loss.rows != 1 or loss.cols != 1:
        raise ContractError(f"loss must be scalar, got {loss.rows}x{loss.cols}")
    tape = loss.tape
    if tape._backward_done:
        raise ContractError("backward already ran on this tape")
    tape._backward_done = True
    loss.grad = np.ones((1, 1), dtype=np.float64)
    for node in reversed(tape.nodes):
        if node.grad is None or node._push is None:
            continue
        node._push(node.grad)
    for node in tape.nodes:
        if node.op == "param" and node.grad is None:
            node.grad = np.zeros(node.value.shape, dtype=np.float64)


def gradient_check(build_loss, params, h=1e-3, dtype=np.float32,
                   exclude_crossed_kinks=False):
    """Max relative disagreement between tape gradients and central differences.

    `build_loss(tape, param_nodes)` must be deterministic (any noise is data it
    closes over). The analytic side runs at `dtype`; the difference quotient is
    always evaluated in float64 so it is a trustworthy oracle. Relative error
    per entry is |analytic - cd| / max(|analytic|, |cd|, 1e-8).

    Subgradients at relu/hinge kinks make the quotient meaningless for
    parameter entries whose +-h stencil lands on the far side of a kink; with
    `exclude_crossed_kinks` those entries (detected by comparing activation
    patterns against the unperturbed point) are left out of the max. Most
    entries must survive; excluding over half of them is an error.
    """
    tape = Tape(dtype=dtype)
    nodes = [tape.param(np.asarray(p, dtype=dtype), name=f"p{i}") for i, p in enumerate(params)]
    backward(build_loss(tape, nodes))
    analytic = [n.grad for n in nodes]

    base = [np.asarray(p, dtype=np.float64) for p in params]

    def eval_at(values):
        probe = Tape(dtype=np.float64)
        pn = [probe.param(v, name=f"p{i}") for i, v in enumerate(values)]
        value = float(build_loss(probe, pn).value[0, 0])
        return value, probe.kink_signature()

    _, base_sig = eval_at(base)

    def crossed(sig):
        return any(not np.array_equal(a, b) for a, b in zip(base_sig, sig))

    worst = 0.0
    checked = excluded = 0
    for i in range(len(base)):
        for idx in np.ndindex(base[i].shape):
            bumped = [b.copy() for b in base]
            bumped[i][idx] += h
            hi, sig_hi = eval_at(bumped)
            bumped[i][idx] -= 2 * h
            lo, sig_lo = eval_at(bumped)
            if exclude_crossed_kinks and (crossed(sig_hi) or crossed(sig_lo)):
                excluded += 1
                continue
            cd = (hi - lo) / (2 * h)
            a = analytic[i][idx]
            denom = max(abs(a), abs(cd), 1e-8)
            worst = max(worst, abs(a - cd) / denom)
            checked += 1
    if checked == 0 or excluded > checked:
        raise ContractError("gradient check excluded more entries than it kept; "
                            "the evaluation point is saturated with kinks")
    return worst


# ---------------------------------------------------------------------------
# optimizer


class AdamState:
    """Adam with bias correction; moments track the parameter list by position."""

    def __init__(self, params, lr, beta1=0.5, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.m = [np.zeros(p.shape, dtype=np.float64) for p in params]
        self.v = [np.zeros(p.shape, dtype=np.float64) for p in params]

    def step(self, params, grads):
        """Update `params` in place. Aborts (no mutation) on any non-finite gradient."""
        if len(params) != len(self.m) or len(grads) != len(self.m):
            raise ContractError("parameter/gradient count does not match optimizer state")
        for p, g, m in zip(params, grads, self.m):
            if p.shape != m.shape or g.shape != m.shape:
                raise ShapeError(f"adam: parameter {p.shape} vs grad {g.shape} vs moment {m.shape}")
            if not np.all(np.isfinite(g)):
                raise NumericError("non-finite gradient; adam update aborted")
        self.step_count += 1
        t = self.step_count
        c1 = 1.0 - self.beta1 ** t
        c2 = 1.0 - self.beta2 ** t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            g64 = g.astype(np.float64)
            m *= self.beta1
            m += (1.0 - self.beta1) * g64
            v *= self.beta2
            v += (1.0 - self.beta2) * g64 * g64
            p -= (self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)).astype(p.dtype)


def clip_weights(params, bound):
    """Clamp every entry of every array in `params` to [-bound, bound], in place.

    The bound holds exactly even after rounding to the parameter dtype.
    """
    if bound <= 0:
        raise ConfigError(f"clip bound must be positive, got {bound}")
    for p in params:
        b = np.asarray(bound, dtype=p.dtype)
        if float(b) > bound:
            b = np.nextafter(b, np.asarray(0, dtype=p.dtype))
        np.clip(p, -b, b, out=p)
