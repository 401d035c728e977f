"""Dense real/complex tensors with reverse-mode automatic differentiation.

Data lives in float64 or complex128 numpy arrays (row-major).  Gradients of
a real scalar loss follow the split-real convention: for a complex tensor
``w`` the stored gradient is the packed pair

    grad(w) = dL/dRe(w) + 1j * dL/dIm(w)

so a complex parameter behaves exactly like two independent real parameters
and an optimizer can subtract ``lr * grad`` directly.  Real tensors carry the
ordinary real gradient.  Non-holomorphic operations (abs, arg, conj, real,
imag) are supported through per-op rules written in this convention.

Mixed-dtype arithmetic promotes the real operand to complex via an explicit
promotion node whose backward pass takes the real part of the incoming
gradient, which keeps the convention consistent across domain boundaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

REAL = np.float64
COMPLEX = np.complex128

_ELEMENTWISE_KINDS = (
    "add", "sub", "mul", "div", "neg", "conj", "abs", "arg",
    "exp", "sqrt", "real", "imag", "max", "sign",
)


def _unbroadcast(grad, shape):
    """Sum a broadcast gradient back down to ``shape``."""
    g = grad
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


class Tensor:
    """An n-dimensional array with an optional gradient-tracking handle."""

    __slots__ = ("data", "grad", "requires_grad", "name", "_children", "_backward")

    def __init__(self, data, requires_grad=False, _children=(), name=None):
        arr = np.asarray(data)
        if np.iscomplexobj(arr):
            arr = np.ascontiguousarray(arr, dtype=COMPLEX)
        else:
            arr = np.ascontiguousarray(arr, dtype=REAL)
        self.data = arr
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self.name = name
        self._children = tuple(_children)
        self._backward = None

    # -- basic introspection -------------------------------------------------

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    @property
    def is_complex(self):
        return self.data.dtype == COMPLEX

    @property
    def dtype_name(self):
        return "complex128" if self.is_complex else "real64"

    def __repr__(self):
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype_name}{tag})"

    def item(self):
        return self.data.item()

    def detach(self):
        return Tensor(self.data.copy())

    def zero_grad(self):
        self.grad = None

    # -- gradient plumbing ---------------------------------------------------

    def _accum(self, g):
        if not self.requires_grad:
            return
        g = _unbroadcast(np.asarray(g), self.shape)
        if not self.is_complex and np.iscomplexobj(g):
            # real tensors only ever receive real gradients; imaginary parts
            # are identically zero by the op rules and dropped here
            g = g.real
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad = self.grad + g.reshape(self.shape)

    def _topo(self):
        order, seen, stack = [], set(), [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for child in node._children:
                if id(child) not in seen:
                    stack.append((child, False))
        return order

    def backward(self):
        """Reverse-mode pass from a real scalar; fills ``grad`` on the graph."""
        if self.size != 1:
            raise ValueError(f"backward requires a scalar loss, got shape {self.shape}")
        if self.is_complex:
            raise ValueError("backward requires a real-valued loss")
        if not self.requires_grad:
            return
        self.grad = np.ones_like(self.data)
        for node in reversed(self._topo()):
            if node._backward is not None and node.requires_grad:
                node._backward()

    # -- promotion -----------------------------------------------------------

    def to_complex(self):
        if self.is_complex:
            return self
        out = Tensor(self.data.astype(COMPLEX), self.requires_grad, (self,))

        def _bw():
            self._accum(out.grad.real)

        out._backward = _bw
        return out

    # -- arithmetic ----------------------------------------------------------

    def __add__(self, other):
        a, b = _coerce_pair(self, other)
        out = _node(a.data + b.data, (a, b))

        def _bw():
            a._accum(out.grad)
            b._accum(out.grad)

        out._backward = _bw
        return out

    __radd__ = __add__

    def __neg__(self):
        out = _node(-self.data, (self,))

        def _bw():
            self._accum(-out.grad)

        out._backward = _bw
        return out

    def __sub__(self, other):
        return self + (-as_tensor(other))

    def __rsub__(self, other):
        return as_tensor(other) + (-self)

    def __mul__(self, other):
        a, b = _coerce_pair(self, other)
        out = _node(a.data * b.data, (a, b))

        def _bw():
            a._accum(out.grad * np.conj(b.data))
            b._accum(out.grad * np.conj(a.data))

        out._backward = _bw
        return out

    __rmul__ = __mul__

    def __truediv__(self, other):
        a, b = _coerce_pair(self, other)
        if np.any(b.data == 0):
            raise ZeroDivisionError("division by zero; add an epsilon guard to the denominator")
        out = _node(a.data / b.data, (a, b))

        def _bw():
            inv = 1.0 / b.data
            a._accum(out.grad * np.conj(inv))
            b._accum(out.grad * np.conj(-a.data * inv * inv))

        out._backward = _bw
        return out

    def __rtruediv__(self, other):
        return as_tensor(other) / self

    def __pow__(self, exponent):
        if exponent == 0.5:
            return self.sqrt()
        if isinstance(exponent, int) or (isinstance(exponent, float) and exponent.is_integer()):
            return pow_int(self, int(exponent))
        raise ValueError("only integer exponents and 0.5 are supported")

    def __matmul__(self, other):
        return matmul(self, other)

    # -- elementwise functions -------------------------------------------------

    def conj(self):
        out = _node(np.conj(self.data), (self,))

        def _bw():
            self._accum(np.conj(out.grad))

        out._backward = _bw
        return out

    def abs(self):
        mag = np.abs(self.data)
        out = _node(mag, (self,))

        def _bw():
            if self.is_complex:
                safe = np.where(mag > 0, mag, 1.0)
                unit = np.where(mag > 0, self.data / safe, 0.0)
                self._accum(out.grad * unit)
            else:
                self._accum(out.grad * np.sign(self.data))

        out._backward = _bw
        return out

    __abs__ = abs

    def arg(self):
        """Principal-value angle in (-pi, pi]; arg(0) is defined as 0."""
        theta = np.angle(self.data)
        out = _node(theta, (self,))

        def _bw():
            if self.is_complex:
                m2 = np.abs(self.data) ** 2
                safe = np.where(m2 > 0, m2, 1.0)
                d = np.where(m2 > 0, 1j * self.data / safe, 0.0)
                self._accum(out.grad * d)
            # real input: angle is piecewise constant, gradient 0

        out._backward = _bw
        return out

    def exp(self):
        y = np.exp(self.data)
        out = _node(y, (self,))

        def _bw():
            self._accum(out.grad * np.conj(y))

        out._backward = _bw
        return out

    def sqrt(self):
        if not self.is_complex and np.any(self.data < 0):
            raise ValueError("sqrt of a negative real tensor; promote to complex first")
        y = np.sqrt(self.data)
        out = _node(y, (self,))

        def _bw():
            nz = y != 0
            safe = np.where(nz, y, 1.0)
            d = np.where(nz, 0.5 / safe, 0.0)  # gradient at 0 defined as 0
            self._accum(out.grad * np.conj(d))

        out._backward = _bw
        return out

    def log(self):
        if self.is_complex:
            raise TypeError("log is defined for real tensors only")
        if np.any(self.data <= 0):
            raise ValueError("log requires strictly positive input")
        out = _node(np.log(self.data), (self,))

        def _bw():
            self._accum(out.grad / self.data)

        out._backward = _bw
        return out

    def tanh(self):
        if self.is_complex:
            raise TypeError("tanh is defined for real tensors only")
        y = np.tanh(self.data)
        out = _node(y, (self,))

        def _bw():
            self._accum(out.grad * (1.0 - y * y))

        out._backward = _bw
        return out

    def real(self):
        out = _node(self.data.real.copy(), (self,))

        def _bw():
            self._accum(out.grad)

        out._backward = _bw
        return out

    def imag(self):
        out = _node(self.data.imag.copy(), (self,))

        def _bw():
            if self.is_complex:
                self._accum(1j * out.grad)

        out._backward = _bw
        return out

    def sign(self):
        """Elementwise sign of a real tensor, with sign(0) = 0.

        The result is detached: the derivative is zero almost everywhere, so
        no graph edge is created.
        """
        if self.is_complex:
            raise TypeError("sign is defined for real tensors only")
        return Tensor(np.sign(self.data))

    # -- shape ops -----------------------------------------------------------

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        out = _node(self.data.reshape(shape), (self,))

        def _bw():
            self._accum(out.grad.reshape(self.shape))

        out._backward = _bw
        return out

    def transpose(self, *axes):
        if not axes:
            axes = tuple(reversed(range(self.ndim)))
        elif len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        inverse = np.argsort(axes)
        out = _node(np.ascontiguousarray(self.data.transpose(axes)), (self,))

        def _bw():
            self._accum(out.grad.transpose(inverse))

        out._backward = _bw
        return out

    def __getitem__(self, idx):
        """Basic (slice/integer) indexing with gradient scatter."""
        out = _node(self.data[idx].copy(), (self,))

        def _bw():
            g = np.zeros_like(self.data)
            g[idx] += out.grad
            self._accum(g)

        out._backward = _bw
        return out

    def sum(self, axis=None, keepdims=False):
        out = _node(self.data.sum(axis=axis, keepdims=keepdims), (self,))

        def _bw():
            g = out.grad
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            self._accum(np.broadcast_to(g, self.shape))

        out._backward = _bw
        return out

    def mean(self, axis=None, keepdims=False):
        if axis is None:
            denom = self.size
        else:
            axes = axis if isinstance(axis, tuple) else (axis,)
            denom = math.prod(self.shape[a] for a in axes)
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / denom)


def _node(data, children):
    requires = any(c.requires_grad for c in children)
    return Tensor(data, requires_grad=requires, _children=children if requires else ())


def as_tensor(value):
    return value if isinstance(value, Tensor) else Tensor(value)


def _coerce_pair(a, b):
    a, b = as_tensor(a), as_tensor(b)
    if a.is_complex and not b.is_complex:
        b = b.to_complex()
    elif b.is_complex and not a.is_complex:
        a = a.to_complex()
    return a, b


# -- free functions -----------------------------------------------------------


def maximum(a, b):
    """Elementwise maximum of real tensors; ties route the gradient to ``a``."""
    a, b = as_tensor(a), as_tensor(b)
    if a.is_complex or b.is_complex:
        raise TypeError("maximum is defined for real tensors only")
    out = _node(np.maximum(a.data, b.data), (a, b))

    def _bw():
        take_a = a.data >= b.data
        a._accum(out.grad * take_a)
        b._accum(out.grad * ~take_a)

    out._backward = _bw
    return out


def pow_int(x, n):
    """x**n for integer n >= 0 by repeated multiplication (no branch cuts)."""
    if n < 0:
        raise ValueError("negative integer powers are not supported")
    x = as_tensor(x)
    if n == 0:
        return Tensor(np.ones_like(x.data))
    out = x
    for _ in range(n - 1):
        out = out * x
    return out


def complex_pack(re, im):
    """Build re + 1j*im from two real tensors."""
    re, im = as_tensor(re), as_tensor(im)
    if re.is_complex or im.is_complex:
        raise TypeError("complex_pack expects real components")
    out = _node(re.data + 1j * im.data, (re, im))

    def _bw():
        re._accum(out.grad.real)
        im._accum(out.grad.imag)

    out._backward = _bw
    return out


def concat(tensors, axis=0):
    tensors = [as_tensor(t) for t in tensors]
    if not tensors:
        raise ValueError("concat of an empty sequence")
    if any(t.is_complex for t in tensors):
        tensors = [t.to_complex() for t in tensors]
    out = _node(np.concatenate([t.data for t in tensors], axis=axis), tuple(tensors))
    offsets = np.cumsum([0] + [t.shape[axis] for t in tensors])

    def _bw():
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            idx = [slice(None)] * out.ndim
            idx[axis] = slice(lo, hi)
            t._accum(out.grad[tuple(idx)])

    out._backward = _bw
    return out


def matmul(a, b):
    """2-D matrix product with the complex gradient rules."""
    a, b = _coerce_pair(a, b)
    if a.ndim != 2 or b.ndim != 2:
        raise ValueError(f"matmul expects 2-D operands, got {a.shape} @ {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"inner dimensions disagree: {a.shape} @ {b.shape}")
    out = _node(a.data @ b.data, (a, b))

    def _bw():
        a._accum(out.grad @ np.conj(b.data).T)
        b._accum(np.conj(a.data).T @ out.grad)

    out._backward = _bw
    return out


def conv1d(x, w, bias=None, stride=1, padding=(0, 0), groups=1):
    """Grouped 1-D convolution over [batch, channels, length] tensors.

    Real and complex inputs share one code path; complex gradients follow the
    holomorphic rules (conjugated cross-correlations).
    """
    from . import kernels

    x, w = as_tensor(x), as_tensor(w)
    if x.is_complex != w.is_complex:
        raise TypeError("conv1d input and weights must share a domain")
    if x.ndim != 3 or w.ndim != 3:
        raise ValueError("conv1d expects [B,C,L] input and [O,C/g,K] weights")
    pl, pr = padding
    batch, channels, length = x.shape
    out_ch, cg, kernel = w.shape
    if channels != cg * groups or out_ch % groups:
        raise ValueError("channel counts incompatible with the group count")
    if length + pl + pr < kernel:
        raise ValueError(f"input length {length} shorter than kernel {kernel}")
    y = kernels.conv1d_forward(x.data, w.data, stride, pl, pr, groups)
    children = (x, w)
    if bias is not None:
        bias = as_tensor(bias)
        y = y + bias.data.reshape(1, -1, 1)
        children = (x, w, bias)
    out = _node(y, children)

    def _bw():
        gy = np.ascontiguousarray(out.grad)
        if w.requires_grad:
            xc = np.conj(x.data) if x.is_complex else x.data
            w._accum(kernels.conv1d_grad_weight(gy, np.ascontiguousarray(xc), kernel, stride, pl, groups))
        if x.requires_grad:
            wc = np.conj(w.data) if w.is_complex else w.data
            x._accum(kernels.conv1d_grad_input(gy, np.ascontiguousarray(wc), length, stride, pl, groups))
        if bias is not None:
            bias._accum(gy.sum(axis=(0, 2)))

    out._backward = _bw
    return out


def softmax_cross_entropy(logits, labels):
    """Mean cross-entropy of integer labels against [B, n_classes] logits."""
    if logits.is_complex:
        raise TypeError("cross-entropy expects real logits")
    labels = np.asarray(labels)
    z = logits.data
    zmax = z.max(axis=1, keepdims=True)
    ez = np.exp(z - zmax)
    sez = ez.sum(axis=1, keepdims=True)
    logp = (z - zmax) - np.log(sez)
    n = z.shape[0]
    loss = -logp[np.arange(n), labels].mean()
    out = _node(np.asarray(loss), (logits,))

    def _bw():
        p = ez / sez
        p[np.arange(n), labels] -= 1.0
        logits._accum(out.grad * p / n)

    out._backward = _bw
    return out


def mse(pred, target):
    """Mean squared error between real tensors."""
    pred, target = as_tensor(pred), as_tensor(target)
    if pred.is_complex or target.is_complex:
        raise TypeError("mse expects real tensors")
    diff = pred - target
    return (diff * diff).mean()


def elementwise(op_kind, a, b=None, eps=None):
    """Dispatch an elementwise operation by name.

    ``eps`` selects the guarded division variant a / (b + eps), which never
    raises on zero denominators.
    """
    if op_kind not in _ELEMENTWISE_KINDS:
        raise ValueError(f"unknown elementwise op {op_kind!r}")
    if eps is not None and op_kind != "div":
        raise ValueError("eps applies to the div op only")
    if op_kind == "div" and eps is not None:
        return as_tensor(a) / (as_tensor(b) + eps)
    a = as_tensor(a)
    unary = {
        "neg": lambda t: -t,
        "conj": Tensor.conj,
        "abs": Tensor.abs,
        "arg": Tensor.arg,
        "exp": Tensor.exp,
        "sqrt": Tensor.sqrt,
        "real": Tensor.real,
        "imag": Tensor.imag,
        "sign": Tensor.sign,
    }
    if op_kind in unary:
        if b is not None:
            raise ValueError(f"{op_kind} takes a single operand")
        return unary[op_kind](a)
    if b is None:
        raise ValueError(f"{op_kind} takes two operands")
    binary = {
        "add": Tensor.__add__,
        "sub": Tensor.__sub__,
        "mul": Tensor.__mul__,
        "div": Tensor.__truediv__,
        "max": maximum,
    }
    return binary[op_kind](a, as_tensor(b))


# -- gradient extraction and the finite-difference oracle ----------------------


@dataclass
class Gradient:
    """Gradient of the loss with respect to one named parameter."""

    wrt: str
    value: Tensor


def backward(loss, params=None):
    """Run reverse-mode AD and return gradients keyed by parameter name.

    Parameters that do not influence the loss map to zero gradients.
    """
    loss.backward()
    result = {}
    for i, p in enumerate(params or ()):
        key = p.name if p.name is not None else f"param{i}"
        g = p.grad if p.grad is not None else np.zeros_like(p.data)
        result[key] = Gradient(wrt=key, value=Tensor(g))
    return result


def finite_difference_gradient(f, params, step=1e-6):
    """Central differences over every real/imag component of ``params``.

    ``f`` is a zero-argument callable that recomputes the scalar loss from the
    current parameter data.  Returns gradients in the same packed convention
    as :func:`backward`.  This is the independent oracle used to validate the
    analytic rules; it never touches the computation graph.
    """
    if step <= 0:
        raise ValueError("step must be positive")

    def evaluate():
        value = f()
        value = value.item() if isinstance(value, Tensor) else float(value)
        if not np.isfinite(value):
            raise FloatingPointError("objective returned a non-finite value")
        return value

    result = {}
    for i, p in enumerate(params):
        flat = p.data.view(REAL).ravel() if p.is_complex else p.data.ravel()
        g = np.empty(flat.size, dtype=REAL)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + step
            f_plus = evaluate()
            flat[j] = orig - step
            f_minus = evaluate()
            flat[j] = orig
            g[j] = (f_plus - f_minus) / (2.0 * step)
        if p.is_complex:
            g = g.view(COMPLEX)
        key = p.name if p.name is not None else f"param{i}"
        result[key] = Gradient(wrt=key, value=Tensor(g.reshape(p.shape)))
    return result


# -- serialization -------------------------------------------------------------


def tensor_to_json(t):
    """JSON-friendly dict: complex data is interleaved [re, im, re, im, ...]."""
    arr = t.data if isinstance(t, Tensor) else np.asarray(t)
    if np.iscomplexobj(arr):
        flat = np.ascontiguousarray(arr, dtype=COMPLEX).ravel().view(REAL)
        dtype = "complex128"
    else:
        flat = np.ascontiguousarray(arr, dtype=REAL).ravel()
        dtype = "real64"
    return {"shape": list(arr.shape), "dtype": dtype, "data": flat.tolist()}


def tensor_from_json(obj):
    shape = tuple(obj["shape"])
    data = np.asarray(obj["data"], dtype=REAL)
    if obj["dtype"] == "complex128":
        return Tensor(data.view(COMPLEX).reshape(shape))
    if obj["dtype"] == "real64":
        return Tensor(data.reshape(shape))
    raise ValueError(f"unknown tensor dtype {obj['dtype']!r}")
