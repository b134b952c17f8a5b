"""Tape-based reverse-mode differentiation over dense float64 matrices.

The tape is a flat append-only list; every recorded node stores its parent
ids and one vector-Jacobian closure per tracked parent, so parent ids are
always smaller than child ids and a single reverse sweep in descending id
order computes all gradients. Constants (plain data wrapped without a tape)
are folded eagerly: an operation whose inputs are all constants produces a
constant, which is what makes untracked "evaluation mode" free.

Everything is float64 and strictly two-dimensional; scalars are 1x1.
Subgradient conventions: relu'(0) = 0 and d|0| = 0.
"""

from __future__ import annotations

from typing import Callable, Mapping

import numpy as np

from .errors import NumericError
from .operators import DiffOp

__all__ = [
    "Tape",
    "DiffMatrix",
    "constant",
    "matmul",
    "sparse_apply",
    "add_row_bias",
    "add",
    "sub",
    "mul_elementwise",
    "scale",
    "tanh",
    "relu",
    "sigmoid",
    "sum_all",
    "mean_abs_diff",
    "log_softmax_rows",
    "cross_entropy_masked",
    "backward",
    "set_debug_checks",
]

_debug_checks = False


def _identity_vjp(g):
    return g


def _negate_vjp(g):
    return -g


def set_debug_checks(enabled: bool) -> None:
    """Toggle NaN/Inf checking after every forward op (off by default)."""
    global _debug_checks
    _debug_checks = bool(enabled)


class Tape:
    """Append-only record of forward operations for one training run."""

    __slots__ = ("_parents", "_vjps")

    def __init__(self):
        self._parents: list[tuple[int, ...]] = []
        self._vjps: list[tuple[Callable[[np.ndarray], np.ndarray], ...]] = []

    def __len__(self) -> int:
        return len(self._parents)

    def leaf(self, value: np.ndarray) -> "DiffMatrix":
        """Register a tracked leaf (typically a model parameter)."""
        v = _as_matrix(value)
        self._parents.append(())
        self._vjps.append(())
        return DiffMatrix(v, len(self._parents) - 1, self)

    def _record(self, value, parents, vjps) -> "DiffMatrix":
        if _debug_checks and not np.all(np.isfinite(value)):
            raise NumericError("non-finite value produced on the tape")
        self._parents.append(tuple(parents))
        self._vjps.append(tuple(vjps))
        out = DiffMatrix.__new__(DiffMatrix)  # values from ops are 2-D float64
        out.value = value
        out.node = len(self._parents) - 1
        out.tape = self
        return out


def _as_matrix(value) -> np.ndarray:
    v = np.asarray(value, dtype=float)
    if v.ndim == 0:
        v = v.reshape(1, 1)
    elif v.ndim == 1:
        v = v.reshape(1, -1)
    elif v.ndim != 2:
        raise ValueError(f"expected a matrix, got ndim={v.ndim}")
    return v


class DiffMatrix:
    """Dense matrix plus its tape node id (-1 marks a constant)."""

    __slots__ = ("value", "node", "tape")

    def __init__(self, value: np.ndarray, node: int = -1, tape: Tape | None = None):
        self.value = _as_matrix(value)
        self.node = node
        self.tape = tape

    @property
    def shape(self) -> tuple[int, int]:
        return self.value.shape

    def item(self) -> float:
        return float(self.value.reshape(-1)[0])

    def __float__(self) -> float:
        if self.value.size != 1:
            raise ValueError("only 1x1 matrices convert to float")
        return self.item()

    def __repr__(self):
        tag = "const" if self.node < 0 else f"node {self.node}"
        return f"DiffMatrix({self.value.shape}, {tag})"

    # algebra used by the generic ODE solvers
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        if np.isscalar(other):
            return scale(self, float(other))
        return mul_elementwise(self, other)

    def __rmul__(self, other):
        if np.isscalar(other):
            return scale(self, float(other))
        return mul_elementwise(other, self)

    def __neg__(self):
        return scale(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)


def constant(value) -> DiffMatrix:
    return DiffMatrix(_as_matrix(value))


def _coerce(x) -> DiffMatrix:
    return x if isinstance(x, DiffMatrix) else constant(x)


def _tape_of(*xs: DiffMatrix) -> Tape | None:
    tape = None
    for x in xs:
        if x.tape is not None:
            if tape is not None and tape is not x.tape:
                raise ValueError("operands belong to different tapes")
            tape = x.tape
    return tape


def _make(value, inputs: list[tuple[DiffMatrix, Callable]]) -> DiffMatrix:
    """Record an op; inputs pairs each operand with its vjp closure.
    Folds to a constant when nothing is tracked."""
    tape = _tape_of(*[x for x, _ in inputs])
    if tape is None:
        return DiffMatrix(value)
    parents = []
    vjps = []
    for x, vjp in inputs:
        if x.node >= 0:
            parents.append(x.node)
            vjps.append(vjp)
    return tape._record(value, parents, vjps)


def _make1(value, a: DiffMatrix, vjp_a) -> DiffMatrix:
    # single-operand fast path for the hot ops
    tape = a.tape
    if tape is None:
        return DiffMatrix(value)
    return tape._record(value, (a.node,), (vjp_a,))


def _make2(value, a: DiffMatrix, vjp_a, b: DiffMatrix, vjp_b) -> DiffMatrix:
    tape = a.tape
    if tape is None:
        tape = b.tape
        if tape is None:
            return DiffMatrix(value)
    elif b.tape is not None and b.tape is not tape:
        raise ValueError("operands belong to different tapes")
    if a.node >= 0:
        if b.node >= 0:
            return tape._record(value, (a.node, b.node), (vjp_a, vjp_b))
        return tape._record(value, (a.node,), (vjp_a,))
    return tape._record(value, (b.node,), (vjp_b,))


# ---------------------------------------------------------------------------
# Forward operations
# ---------------------------------------------------------------------------


def matmul(a, b) -> DiffMatrix:
    a, b = _coerce(a), _coerce(b)
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"matmul shape mismatch: {a.shape} @ {b.shape}")
    av, bv = a.value, b.value
    return _make2(av @ bv, a, lambda g: g @ bv.T, b, lambda g: av.T @ g)


def sparse_apply(op: DiffOp, x) -> DiffMatrix:
    """Apply a diffusion operator (held constant, no gradient to it)."""
    x = _coerce(x)
    if x.shape[0] != op.n:
        raise ValueError(f"operator is {op.n}x{op.n}, state is {x.shape}")
    mat = op.mat
    # operators are symmetric by construction, so mat.T @ g == mat @ g
    return _make1(mat @ x.value, x, lambda g: mat @ g)


def add(a, b) -> DiffMatrix:
    a, b = _coerce(a), _coerce(b)
    if a.shape != b.shape:
        raise ValueError(f"add shape mismatch: {a.shape} vs {b.shape}")
    return _make2(a.value + b.value, a, _identity_vjp, b, _identity_vjp)


def sub(a, b) -> DiffMatrix:
    a, b = _coerce(a), _coerce(b)
    if a.shape != b.shape:
        raise ValueError(f"sub shape mismatch: {a.shape} vs {b.shape}")
    return _make2(a.value - b.value, a, _identity_vjp, b, _negate_vjp)


def mul_elementwise(a, b) -> DiffMatrix:
    a, b = _coerce(a), _coerce(b)
    if a.shape != b.shape:
        raise ValueError(f"mul shape mismatch: {a.shape} vs {b.shape}")
    av, bv = a.value, b.value
    return _make2(av * bv, a, lambda g: g * bv, b, lambda g: g * av)


def scale(x, c: float) -> DiffMatrix:
    x = _coerce(x)
    c = float(c)
    return _make1(c * x.value, x, lambda g: c * g)


def add_row_bias(x, b) -> DiffMatrix:
    """x + b with b a 1 x d row broadcast over all rows of x."""
    x, b = _coerce(x), _coerce(b)
    if b.shape[0] != 1 or b.shape[1] != x.shape[1]:
        raise ValueError(f"bias must be (1, {x.shape[1]}), got {b.shape}")
    return _make2(
        x.value + b.value,
        x, _identity_vjp,
        b, lambda g: g.sum(axis=0, keepdims=True),
    )


def tanh(x) -> DiffMatrix:
    x = _coerce(x)
    out = np.tanh(x.value)
    return _make1(out, x, lambda g: g * (1.0 - out * out))


def relu(x) -> DiffMatrix:
    x = _coerce(x)
    out = np.maximum(x.value, 0.0)
    mask = (x.value > 0.0).astype(float)  # derivative at exactly 0 is 0
    return _make1(out, x, lambda g: g * mask)


def sigmoid(x) -> DiffMatrix:
    x = _coerce(x)
    out = 1.0 / (1.0 + np.exp(-x.value))
    return _make1(out, x, lambda g: g * out * (1.0 - out))


def sum_all(x) -> DiffMatrix:
    x = _coerce(x)
    shape = x.shape
    return _make(
        np.array([[x.value.sum()]]),
        [(x, lambda g: np.full(shape, g[0, 0]))],
    )


def mean_abs_diff(x, target) -> DiffMatrix:
    """Mean elementwise |x - target|; subgradient 0 at ties."""
    x = _coerce(x)
    tv = _as_matrix(getattr(target, "value", target))
    if x.shape != tv.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {tv.shape}")
    diff = x.value - tv
    sign = np.sign(diff)
    size = diff.size
    return _make(
        np.array([[np.abs(diff).mean()]]),
        [(x, lambda g: (g[0, 0] / size) * sign)],
    )


def log_softmax_rows(x) -> DiffMatrix:
    x = _coerce(x)
    xv = x.value
    shifted = xv - xv.max(axis=1, keepdims=True)
    logz = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    out = shifted - logz
    softmax = np.exp(out)
    return _make(
        out,
        [(x, lambda g: g - softmax * g.sum(axis=1, keepdims=True))],
    )


def cross_entropy_masked(logits, labels, mask) -> DiffMatrix:
    """Mean negative log-likelihood of one-hot ``labels`` over masked rows."""
    logits = _coerce(logits)
    lab = _as_matrix(getattr(labels, "value", labels))
    m = np.asarray(mask, dtype=bool).reshape(-1)
    if lab.shape != logits.shape:
        raise ValueError(f"labels shape {lab.shape} != logits shape {logits.shape}")
    if m.shape[0] != logits.shape[0]:
        raise ValueError("mask length must equal the number of rows")
    count = int(m.sum())
    if count == 0:
        raise ValueError("mask selects no rows")
    xv = logits.value
    shifted = xv - xv.max(axis=1, keepdims=True)
    logz = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    logp = shifted - logz
    loss = -(lab[m] * logp[m]).sum() / count
    softmax = np.exp(logp)

    def vjp(g):
        grad = np.zeros_like(xv)
        grad[m] = (softmax[m] - lab[m]) * (g[0, 0] / count)
        return grad

    return _make(np.array([[loss]]), [(logits, vjp)])


# ---------------------------------------------------------------------------
# Reverse sweep
# ---------------------------------------------------------------------------


def backward(tape: Tape, loss: DiffMatrix) -> Mapping[int, np.ndarray]:
    """Single reverse sweep from a scalar loss; returns node id -> gradient.

    Gradients accumulate additively at shared parents; nodes off the loss
    path and constants are absent from the result.
    """
    if loss.tape is not tape or loss.node < 0:
        raise ValueError("loss must be a tracked node of this tape")
    if loss.value.shape != (1, 1):
        raise ValueError(f"loss must be scalar (1x1), got {loss.value.shape}")
    grads: list[np.ndarray | None] = [None] * len(tape)
    grads[loss.node] = np.ones((1, 1))
    all_parents = tape._parents
    all_vjps = tape._vjps
    for nid in range(loss.node, -1, -1):
        g = grads[nid]
        if g is None:
            continue
        parents = all_parents[nid]
        vjps = all_vjps[nid]
        for k in range(len(parents)):
            pid = parents[k]
            contrib = vjps[k](g)
            # vjps may return views of shared buffers; never mutate in place
            grads[pid] = contrib if grads[pid] is None else grads[pid] + contrib
    return {i: g for i, g in enumerate(grads) if g is not None}
