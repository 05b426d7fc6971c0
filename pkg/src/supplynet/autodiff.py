"""Minimal reverse-mode automatic differentiation over dense float64 arrays.

Ops compute forward values with numpy and, when a :class:`Tape` is active,
append a (output, inputs, vjp) entry to it.  :func:`backward` replays the
tape in reverse, accumulating exact vector-Jacobian products.  With no
active tape the ops are plain numpy computations, which is what inference
paths use.

Only the shapes this package needs are supported: scalars (shape ()),
vectors, and matrices.  No broadcasting beyond scalar-with-array.
"""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np


class Tensor:
    """A dense float64 array plus gradient bookkeeping."""

    __slots__ = ("values", "requires_grad", "grad", "name")

    def __init__(self, values, requires_grad: bool = False, name: str | None = None):
        arr = np.asarray(values, dtype=np.float64)
        if not np.isfinite(arr).all():
            raise ValueError(f"tensor {name or ''} contains non-finite values")
        self.values = arr
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None
        self.name = name

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape

    def item(self) -> float:
        return float(self.values)

    def __repr__(self):
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{tag})"


def parameter(values, name: str) -> Tensor:
    return Tensor(values, requires_grad=True, name=name)


def constant(values) -> Tensor:
    return Tensor(values)


_ACTIVE_TAPES: list["Tape"] = []


class Tape:
    """Ordered record of primitive applications for one forward pass.

    Entries are (output, inputs, vjp) where vjp maps the output gradient
    to per-input gradients.  Topological order holds by construction:
    every entry's inputs were produced before it.
    """

    def __init__(self):
        self.entries: list[tuple[Tensor, tuple[Tensor, ...], Callable]] = []

    def __enter__(self) -> "Tape":
        _ACTIVE_TAPES.append(self)
        return self

    def __exit__(self, exc_type, exc, tb):
        popped = _ACTIVE_TAPES.pop()
        assert popped is self

    def __len__(self):
        return len(self.entries)


def _record(out: Tensor, inputs: tuple[Tensor, ...], vjp: Callable) -> Tensor:
    if _ACTIVE_TAPES:
        _ACTIVE_TAPES[-1].entries.append((out, inputs, vjp))
    return out


def backward(tape: Tape, output: Tensor) -> dict[Tensor, np.ndarray]:
    """Reverse-mode gradients of a scalar ``output`` recorded on ``tape``.

    Returns gradients for every tensor reached by the sweep and deposits
    them on ``.grad`` of tensors with ``requires_grad`` (overwriting).
    """
    if output.shape != ():
        raise ValueError(f"backward requires a scalar output, got shape {output.shape}")
    grads: dict[int, np.ndarray] = {id(output): np.ones(())}
    by_id: dict[int, Tensor] = {id(output): output}
    for out, inputs, vjp in reversed(tape.entries):
        g_out = grads.get(id(out))
        if g_out is None:
            continue
        in_grads = vjp(g_out)
        for t, g in zip(inputs, in_grads):
            if g is None:
                continue
            key = id(t)
            if key in grads:
                grads[key] = grads[key] + g
            else:
                grads[key] = g
                by_id[key] = t
    result: dict[Tensor, np.ndarray] = {}
    for key, g in grads.items():
        t = by_id[key]
        g = np.asarray(g, dtype=np.float64).reshape(t.shape)
        result[t] = g
        if t.requires_grad:
            t.grad = g
    return result


def _shapes_error(op: str, *tensors: Tensor):
    shapes = ", ".join(str(t.shape) for t in tensors)
    raise ValueError(f"{op}: incompatible shapes {shapes}")


def _binary_elementwise_check(op: str, a: Tensor, b: Tensor):
    if a.shape != b.shape and a.shape != () and b.shape != ():
        _shapes_error(op, a, b)


def _reduce_to(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    # A scalar operand broadcast against an array receives the summed gradient.
    if shape == () and np.shape(g) != ():
        return np.sum(g)
    return g


def add(a: Tensor, b: Tensor) -> Tensor:
    _binary_elementwise_check("add", a, b)
    out = Tensor(a.values + b.values)
    return _record(out, (a, b), lambda g: (_reduce_to(g, a.shape), _reduce_to(g, b.shape)))


def sub(a: Tensor, b: Tensor) -> Tensor:
    _binary_elementwise_check("sub", a, b)
    out = Tensor(a.values - b.values)
    return _record(out, (a, b), lambda g: (_reduce_to(g, a.shape), _reduce_to(-g, b.shape)))


def mul(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise product; either side may be a scalar (scalar-multiply)."""
    _binary_elementwise_check("mul", a, b)
    av, bv = a.values, b.values
    out = Tensor(av * bv)
    return _record(out, (a, b),
                   lambda g: (_reduce_to(g * bv, a.shape), _reduce_to(g * av, b.shape)))


def div(a: Tensor, b: Tensor) -> Tensor:
    _binary_elementwise_check("div", a, b)
    av, bv = a.values, b.values
    if np.any(bv == 0.0):
        raise ZeroDivisionError("div: zero denominator")
    out = Tensor(av / bv)
    return _record(out, (a, b),
                   lambda g: (_reduce_to(g / bv, a.shape),
                              _reduce_to(-g * av / (bv * bv), b.shape)))


def scale(a: Tensor, factor: float) -> Tensor:
    """Multiply by a plain Python constant (no gradient for the constant)."""
    out = Tensor(a.values * factor)
    return _record(out, (a,), lambda g: (g * factor,))


def matmul(a: Tensor, b: Tensor) -> Tensor:
    av, bv = a.values, b.values
    if av.ndim == 2 and bv.ndim == 2:
        if av.shape[1] != bv.shape[0]:
            _shapes_error("matmul", a, b)
        out = Tensor(av @ bv)
        return _record(out, (a, b), lambda g: (g @ bv.T, av.T @ g))
    if av.ndim == 2 and bv.ndim == 1:
        if av.shape[1] != bv.shape[0]:
            _shapes_error("matmul", a, b)
        out = Tensor(av @ bv)
        return _record(out, (a, b), lambda g: (np.outer(g, bv), av.T @ g))
    if av.ndim == 1 and bv.ndim == 2:
        if av.shape[0] != bv.shape[0]:
            _shapes_error("matmul", a, b)
        out = Tensor(av @ bv)
        return _record(out, (a, b), lambda g: (bv @ g, np.outer(av, g)))
    if av.ndim == 1 and bv.ndim == 1:
        if av.shape != bv.shape:
            _shapes_error("matmul", a, b)
        out = Tensor(av @ bv)
        return _record(out, (a, b), lambda g: (g * bv, g * av))
    _shapes_error("matmul", a, b)


def concat(parts: Sequence[Tensor]) -> Tensor:
    parts = tuple(parts)
    for p in parts:
        if p.values.ndim != 1:
            raise ValueError(f"concat expects vectors, got shape {p.shape}")
    sizes = [p.values.shape[0] for p in parts]
    out = Tensor(np.concatenate([p.values for p in parts]))
    offsets = np.cumsum([0] + sizes)

    def vjp(g):
        return tuple(g[offsets[i]:offsets[i + 1]] for i in range(len(parts)))

    return _record(out, parts, vjp)


def concat_cols(parts: Sequence[Tensor]) -> Tensor:
    """Column-wise concatenation of matrices with equal row counts."""
    parts = tuple(parts)
    rows = parts[0].values.shape[0]
    for p in parts:
        if p.values.ndim != 2 or p.values.shape[0] != rows:
            _shapes_error("concat_cols", *parts)
    widths = [p.values.shape[1] for p in parts]
    out = Tensor(np.concatenate([p.values for p in parts], axis=1))
    offsets = np.cumsum([0] + widths)

    def vjp(g):
        return tuple(g[:, offsets[i]:offsets[i + 1]] for i in range(len(parts)))

    return _record(out, parts, vjp)


def stack_rows(parts: Sequence[Tensor]) -> Tensor:
    """Stack equal-length vectors into a matrix, one per row."""
    parts = tuple(parts)
    for p in parts:
        if p.values.ndim != 1 or p.values.shape != parts[0].values.shape:
            _shapes_error("stack_rows", *parts)
    out = Tensor(np.stack([p.values for p in parts]))
    return _record(out, parts, lambda g: tuple(g[i] for i in range(len(parts))))


def stack_scalars(parts: Sequence[Tensor]) -> Tensor:
    parts = tuple(parts)
    for p in parts:
        if p.shape != ():
            raise ValueError(f"stack_scalars expects scalars, got shape {p.shape}")
    out = Tensor(np.array([p.values for p in parts]))
    return _record(out, parts, lambda g: tuple(np.asarray(g[i]) for i in range(len(parts))))


def row(a: Tensor, i: int) -> Tensor:
    if a.values.ndim != 2:
        raise ValueError(f"row expects a matrix, got shape {a.shape}")
    out = Tensor(a.values[i])

    def vjp(g):
        full = np.zeros_like(a.values)
        full[i] = g
        return (full,)

    return _record(out, (a,), vjp)


def get(a: Tensor, i: int) -> Tensor:
    """Select one entry of a vector as a scalar."""
    if a.values.ndim != 1:
        raise ValueError(f"get expects a vector, got shape {a.shape}")
    out = Tensor(a.values[i])

    def vjp(g):
        full = np.zeros_like(a.values)
        full[i] = g
        return (full,)

    return _record(out, (a,), vjp)


def leaky_relu(a: Tensor, slope: float = 0.01) -> Tensor:
    av = a.values
    out = Tensor(np.where(av > 0, av, slope * av))
    return _record(out, (a,), lambda g: (g * np.where(av > 0, 1.0, slope),))


def sigmoid(a: Tensor) -> Tensor:
    y = 1.0 / (1.0 + np.exp(-a.values))
    out = Tensor(y)
    return _record(out, (a,), lambda g: (g * y * (1.0 - y),))


def softmax(a: Tensor, axis: int = -1) -> Tensor:
    av = a.values
    shifted = av - np.max(av, axis=axis, keepdims=True)
    e = np.exp(shifted)
    y = e / np.sum(e, axis=axis, keepdims=True)
    out = Tensor(y)

    def vjp(g):
        dot = np.sum(g * y, axis=axis, keepdims=True)
        return (y * (g - dot),)

    return _record(out, (a,), vjp)


def tsum(a: Tensor) -> Tensor:
    out = Tensor(np.sum(a.values))
    return _record(out, (a,), lambda g: (np.full_like(a.values, float(g)),))


def squared_error(a: Tensor, b: Tensor) -> Tensor:
    """Sum of squared differences, reduced to a scalar."""
    if a.shape != b.shape:
        _shapes_error("squared_error", a, b)
    diff = a.values - b.values
    out = Tensor(np.sum(diff * diff))
    return _record(out, (a, b), lambda g: (2.0 * g * diff, -2.0 * g * diff))


def minimum(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise min; the gradient follows the smaller operand (ties: a)."""
    _binary_elementwise_check("minimum", a, b)
    av, bv = a.values, b.values
    take_a = av <= bv
    out = Tensor(np.where(take_a, av, bv))
    return _record(out, (a, b),
                   lambda g: (_reduce_to(g * take_a, a.shape),
                              _reduce_to(g * ~take_a, b.shape)))


def maximum(a: Tensor, b: Tensor) -> Tensor:
    _binary_elementwise_check("maximum", a, b)
    av, bv = a.values, b.values
    take_a = av >= bv
    out = Tensor(np.where(take_a, av, bv))
    return _record(out, (a, b),
                   lambda g: (_reduce_to(g * take_a, a.shape),
                              _reduce_to(g * ~take_a, b.shape)))


def gumbel_softmax(logits: Tensor, temperature: float, hard: bool,
                   rng: np.random.Generator) -> Tensor:
    """Gumbel-Softmax sample over a logit vector.

    Soft mode returns softmax((logits + gumbel noise) / temperature).
    Hard mode returns the one-hot at the soft argmax while recording the
    soft gradient rule (straight-through estimator).
    """
    if temperature <= 0:
        raise ValueError(f"temperature must be positive, got {temperature}")
    if logits.values.ndim != 1:
        raise ValueError(f"gumbel_softmax expects a logit vector, got shape {logits.shape}")
    noise = rng.gumbel(size=logits.values.shape[0])
    z = (logits.values + noise) / temperature
    z = z - np.max(z)
    e = np.exp(z)
    y = e / np.sum(e)
    if hard:
        one_hot = np.zeros_like(y)
        one_hot[int(np.argmax(y))] = 1.0
        out = Tensor(one_hot)
    else:
        out = Tensor(y)

    def vjp(g):
        dot = np.sum(g * y)
        return (y * (g - dot) / temperature,)

    return _record(out, (logits,), vjp)
