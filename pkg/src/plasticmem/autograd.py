"""Tape-based reverse-mode differentiation over dense float64 arrays.

Operations build an implicit graph of :class:`Value` nodes as the forward
pass runs; ``backward`` walks the recorded graph in reverse topological
order.  Granularity is whole vectors/matrices: each node wraps a numpy
array and its backward closure uses analytic derivatives, with the hottest
fused steps (LSTM gate block, Hebbian trace update, attention-weighted
slot write) delegated to the kernel backend.
"""

from __future__ import annotations

from typing import Callable, Iterable

import numpy as np

from . import kernels
from .errors import InvalidArgumentError, InvalidStateError


class Value:
    """One node of the recorded computation graph."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(
        self,
        data: np.ndarray,
        parents: tuple["Value", ...] = (),
        backward: Callable[[np.ndarray], None] | None = None,
        requires_grad: bool = False,
    ):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad or any(p.requires_grad for p in parents)
        # Prune the graph below nodes that cannot influence any parameter.
        self._parents = parents if self.requires_grad else ()
        self._backward = backward if self.requires_grad else None

    @property
    def shape(self):
        return self.data.shape

    def accumulate(self, g: np.ndarray) -> None:
        if self.requires_grad:
            if self.grad is None:
                self.grad = np.zeros_like(self.data)
            self.grad += g

    def __repr__(self):  # pragma: no cover
        return f"Value(shape={self.data.shape}, requires_grad={self.requires_grad})"


def const(data) -> Value:
    return Value(np.asarray(data, dtype=np.float64))


def _check_same_shape(a: Value, b: Value, op: str) -> None:
    if a.data.shape != b.data.shape:
        raise InvalidArgumentError(
            f"{op}: shape mismatch {a.data.shape} vs {b.data.shape}"
        )


def add(a: Value, b: Value) -> Value:
    _check_same_shape(a, b, "add")
    out = Value(a.data + b.data, (a, b))

    def bw(g):
        a.accumulate(g)
        b.accumulate(g)

    out._backward = bw if out.requires_grad else None
    return out


def sub(a: Value, b: Value) -> Value:
    _check_same_shape(a, b, "sub")
    out = Value(a.data - b.data, (a, b))

    def bw(g):
        a.accumulate(g)
        b.accumulate(-g)

    out._backward = bw if out.requires_grad else None
    return out


def mul(a: Value, b: Value) -> Value:
    _check_same_shape(a, b, "mul")
    out = Value(a.data * b.data, (a, b))

    def bw(g):
        a.accumulate(g * b.data)
        b.accumulate(g * a.data)

    out._backward = bw if out.requires_grad else None
    return out


def scale(a: Value, c: float) -> Value:
    out = Value(a.data * c, (a,))

    def bw(g):
        a.accumulate(g * c)

    out._backward = bw if out.requires_grad else None
    return out


def matvec(W: Value, x: Value) -> Value:
    """W @ x for W (n, m) and x (m,)."""
    if W.data.ndim != 2 or x.data.ndim != 1 or W.data.shape[1] != x.data.shape[0]:
        raise InvalidArgumentError(
            f"matvec: incompatible shapes {W.data.shape} @ {x.data.shape}"
        )
    out = Value(W.data @ x.data, (W, x))

    def bw(g):
        W.accumulate(np.outer(g, x.data))
        x.accumulate(W.data.T @ g)

    out._backward = bw if out.requires_grad else None
    return out


def matvec_t(W: Value, x: Value) -> Value:
    """W.T @ x for W (n, m) and x (n,)."""
    if W.data.ndim != 2 or x.data.ndim != 1 or W.data.shape[0] != x.data.shape[0]:
        raise InvalidArgumentError(
            f"matvec_t: incompatible shapes {W.data.shape}.T @ {x.data.shape}"
        )
    out = Value(W.data.T @ x.data, (W, x))

    def bw(g):
        W.accumulate(np.outer(x.data, g))
        x.accumulate(W.data @ g)

    out._backward = bw if out.requires_grad else None
    return out


def dot(a: Value, b: Value) -> Value:
    _check_same_shape(a, b, "dot")
    out = Value(np.dot(a.data, b.data), (a, b))

    def bw(g):
        a.accumulate(g * b.data)
        b.accumulate(g * a.data)

    out._backward = bw if out.requires_grad else None
    return out


def vsum(a: Value) -> Value:
    out = Value(np.sum(a.data), (a,))

    def bw(g):
        a.accumulate(np.full_like(a.data, float(g)))

    out._backward = bw if out.requires_grad else None
    return out


def tanh(a: Value) -> Value:
    out_data = np.tanh(a.data)
    out = Value(out_data, (a,))

    def bw(g):
        a.accumulate(g * (1.0 - out_data * out_data))

    out._backward = bw if out.requires_grad else None
    return out


def softmax(v: Value) -> Value:
    """Numerically stable softmax over a 1-D vector."""
    if v.data.ndim != 1 or v.data.shape[0] < 1:
        raise InvalidArgumentError("softmax requires a non-empty 1-D vector")
    if not np.all(np.isfinite(v.data)):
        raise InvalidArgumentError("softmax input contains non-finite entries")
    s = kernels.softmax(np.ascontiguousarray(v.data))
    out = Value(s, (v,))

    def bw(g):
        v.accumulate(s * (g - float(np.dot(g, s))))

    out._backward = bw if out.requires_grad else None
    return out


def slice_(v: Value, start: int, stop: int) -> Value:
    out = Value(v.data[start:stop], (v,))

    def bw(g):
        gg = np.zeros_like(v.data)
        gg[start:stop] = g
        v.accumulate(gg)

    out._backward = bw if out.requires_grad else None
    return out


def neg_log_prob(probs: Value, label: int, floor: float = 1e-12) -> Value:
    """-log(probs[label]) with the probability floored before the log."""
    if label < 0 or label >= probs.data.shape[0]:
        raise InvalidArgumentError(
            f"label {label} out of range for {probs.data.shape[0]} classes"
        )
    p = float(probs.data[label])
    floored = p < floor
    out = Value(-np.log(max(p, floor)), (probs,))

    def bw(g):
        if not floored:
            gg = np.zeros_like(probs.data)
            gg[label] = -float(g) / p
            probs.accumulate(gg)

    out._backward = bw if out.requires_grad else None
    return out


def lstm_cell(pre: Value, c: Value) -> tuple[Value, Value]:
    """Fused LSTM gate block: pre (4k,) and c (k,) -> (h', c')."""
    k = c.data.shape[0]
    if pre.data.shape[0] != 4 * k:
        raise InvalidArgumentError(
            f"lstm_cell: pre has length {pre.data.shape[0]}, expected {4 * k}"
        )
    hc_data, ctx = kernels.lstm_cell_forward(
        np.ascontiguousarray(pre.data), np.ascontiguousarray(c.data)
    )
    hc = Value(hc_data, (pre, c))

    def bw(g):
        gpre, gc = kernels.lstm_cell_backward(
            np.ascontiguousarray(g[:k]),
            np.ascontiguousarray(g[k:]),
            np.ascontiguousarray(c.data),
            ctx,
        )
        pre.accumulate(gpre)
        c.accumulate(gc)

    hc._backward = bw if hc.requires_grad else None
    return slice_(hc, 0, k), slice_(hc, k, 2 * k)


def hebb_step(H: Value, a: Value, b: Value, eta: float) -> Value:
    """Oja-style trace update H' = H*(1 - eta*b^2) + eta * a b^T."""
    if H.data.shape != (a.data.shape[0], b.data.shape[0]):
        raise InvalidStateError(
            f"hebb_step: trace shape {H.data.shape} does not match "
            f"activations ({a.data.shape[0]}, {b.data.shape[0]})"
        )
    out_data = kernels.hebb_forward(
        np.ascontiguousarray(H.data),
        np.ascontiguousarray(a.data),
        np.ascontiguousarray(b.data),
        eta,
    )
    out = Value(out_data, (H, a, b))

    def bw(g):
        gH, ga, gb = kernels.hebb_backward(
            np.ascontiguousarray(g),
            np.ascontiguousarray(H.data),
            np.ascontiguousarray(a.data),
            np.ascontiguousarray(b.data),
            eta,
        )
        H.accumulate(gH)
        a.accumulate(ga)
        b.accumulate(gb)

    out._backward = bw if out.requires_grad else None
    return out


def mem_write(M: Value, z: Value, m: Value) -> Value:
    """Per-slot erase/add blend M'[s,:] = (1 - z[s]) M[s,:] + z[s] m."""
    l, k = M.data.shape
    if z.data.shape != (l,) or m.data.shape != (k,):
        raise InvalidArgumentError(
            f"mem_write: M {M.data.shape}, z {z.data.shape}, m {m.data.shape}"
        )
    out_data = kernels.write_forward(
        np.ascontiguousarray(M.data),
        np.ascontiguousarray(z.data),
        np.ascontiguousarray(m.data),
    )
    out = Value(out_data, (M, z, m))

    def bw(g):
        gM, gz, gm = kernels.write_backward(
            np.ascontiguousarray(g),
            np.ascontiguousarray(M.data),
            np.ascontiguousarray(z.data),
            np.ascontiguousarray(m.data),
        )
        M.accumulate(gM)
        z.accumulate(gz)
        m.accumulate(gm)

    out._backward = bw if out.requires_grad else None
    return out


def backward_graph(root: Value) -> None:
    """Reverse-sweep from a scalar root, accumulating into .grad fields."""
    if root.data.shape != ():
        raise InvalidArgumentError("backward requires a scalar root")
    topo: list[Value] = []
    visited: set[int] = set()
    stack: list[tuple[Value, bool]] = [(root, False)]
    while stack:
        node, processed = stack.pop()
        if processed:
            topo.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if p.requires_grad and id(p) not in visited:
                stack.append((p, False))
    root.grad = np.asarray(1.0)
    for node in reversed(topo):
        if node._backward is not None and node.grad is not None:
            node._backward(node.grad)


class ParameterTape:
    """Flat registry of named trainable parameters with gradient storage."""

    def __init__(self):
        self._params: dict[str, Value] = {}
        self.step = 0
        self._backward_count = 0

    def add(self, name: str, data: np.ndarray) -> Value:
        if name in self._params:
            raise InvalidArgumentError(f"duplicate parameter name {name!r}")
        v = Value(np.array(data, dtype=np.float64), requires_grad=True)
        v.grad = np.zeros_like(v.data)
        self._params[name] = v
        return v

    def __getitem__(self, name: str) -> Value:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def names(self) -> list[str]:
        return list(self._params)

    def items(self) -> Iterable[tuple[str, Value]]:
        return self._params.items()

    def num_entries(self) -> int:
        return sum(p.data.size for p in self._params.values())

    def zero_grad(self) -> None:
        for p in self._params.values():
            if p.grad is None:
                p.grad = np.zeros_like(p.data)
            else:
                p.grad.fill(0.0)

    def backward(self, loss: Value, zero: bool = True) -> None:
        """Populate parameter gradients from a recorded scalar loss."""
        if not isinstance(loss, Value) or not loss._parents:
            raise InvalidStateError(
                "backward called without a recorded forward pass"
            )
        if zero:
            self.zero_grad()
        backward_graph(loss)
        self._backward_count += 1

    @property
    def has_gradients(self) -> bool:
        return self._backward_count > 0

    def values_dict(self) -> dict[str, np.ndarray]:
        return {name: p.data.copy() for name, p in self._params.items()}

    def load_values(self, values: dict[str, np.ndarray]) -> None:
        for name, arr in values.items():
            p = self._params[name]
            arr = np.asarray(arr, dtype=np.float64)
            if arr.shape != p.data.shape:
                raise InvalidArgumentError(
                    f"parameter {name!r}: shape {arr.shape} != {p.data.shape}"
                )
            p.data[...] = arr
