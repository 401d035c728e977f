"""Real and complex 1-D layers, optimizers, and parameter counting.

Every layer exposes ``parameters()`` (a list of named gradient-tracked
tensors) and is callable on :class:`~hybridnn.tensor.Tensor` values.  The
parameter counting rule used throughout: a complex weight or bias counts as
two parameters, a real one as one.
"""

from __future__ import annotations

import math

import numpy as np

from . import activations
from .tensor import COMPLEX, REAL, Tensor, concat, conv1d, matmul

DOMAINS = ("real", "complex")


def _check_domain(domain):
    if domain not in DOMAINS:
        raise ValueError(f"domain must be one of {DOMAINS}, got {domain!r}")


def _init_weight(rng, shape, fan_in, domain):
    if domain == "complex":
        scale = math.sqrt(0.5 / fan_in)
        w = rng.normal(scale=scale, size=shape) + 1j * rng.normal(scale=scale, size=shape)
        return w.astype(COMPLEX)
    return rng.normal(scale=math.sqrt(1.0 / fan_in), size=shape).astype(REAL)


class Conv1d:
    """Grouped 1-D convolution over [batch, channels, length].

    "same" padding (the default) keeps the output length at ceil(L/stride) so
    stacked blocks never collapse the length dimension.
    """

    def __init__(self, domain, in_channels, out_channels, kernel, stride=1,
                 groups=1, bias=True, padding="same", rng=None, name="conv"):
        _check_domain(domain)
        if in_channels % groups or out_channels % groups:
            raise ValueError("in/out channels must be divisible by groups")
        if kernel < 1 or stride < 1:
            raise ValueError("kernel and stride must be positive")
        if padding not in ("same", "valid"):
            raise ValueError("padding must be 'same' or 'valid'")
        rng = rng or np.random.default_rng()
        self.domain = domain
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel = kernel
        self.stride = stride
        self.groups = groups
        self.padding = padding
        self.name = name
        fan_in = (in_channels // groups) * kernel
        self.weight = Tensor(
            _init_weight(rng, (out_channels, in_channels // groups, kernel), fan_in, domain),
            requires_grad=True, name=f"{name}.weight",
        )
        self.bias = None
        if bias:
            self.bias = Tensor(
                np.zeros(out_channels, dtype=COMPLEX if domain == "complex" else REAL),
                requires_grad=True, name=f"{name}.bias",
            )

    def _pads(self):
        if self.padding == "same":
            return (self.kernel - 1) // 2, self.kernel // 2
        return 0, 0

    def __call__(self, x, **_):
        if x.is_complex != (self.domain == "complex"):
            raise TypeError(f"{self.name}: expected {self.domain} input, got {x.dtype_name}")
        if x.shape[1] != self.in_channels:
            raise ValueError(f"{self.name}: expected {self.in_channels} channels, got {x.shape[1]}")
        return conv1d(x, self.weight, self.bias, self.stride, self._pads(), self.groups)

    def parameters(self):
        return [self.weight] + ([self.bias] if self.bias is not None else [])


class Dense:
    """Fully connected layer on [batch, features]."""

    def __init__(self, domain, in_features, out_features, bias=True, rng=None, name="dense"):
        _check_domain(domain)
        rng = rng or np.random.default_rng()
        self.domain = domain
        self.in_features = in_features
        self.out_features = out_features
        self.name = name
        self.weight = Tensor(
            _init_weight(rng, (out_features, in_features), in_features, domain),
            requires_grad=True, name=f"{name}.weight",
        )
        self.bias = None
        if bias:
            self.bias = Tensor(
                np.zeros(out_features, dtype=COMPLEX if domain == "complex" else REAL),
                requires_grad=True, name=f"{name}.bias",
            )

    def __call__(self, x, **_):
        if x.is_complex != (self.domain == "complex"):
            raise TypeError(f"{self.name}: expected {self.domain} input, got {x.dtype_name}")
        out = matmul(x, self.weight.transpose())
        if self.bias is not None:
            out = out + self.bias.reshape(1, -1)
        return out

    def parameters(self):
        return [self.weight] + ([self.bias] if self.bias is not None else [])


class BatchAmplitudeNorm:
    """Per-channel magnitude-mean normalization for complex activations.

    Divides by the mean element magnitude taken over the batch and length
    dimensions, which scales amplitudes toward 1 while preserving the phase
    of every element exactly.  Running means (momentum 0.1) are used in eval
    mode.
    """

    def __init__(self, channels, eps=1e-5, momentum=0.1, name="bamn"):
        self.channels = channels
        self.eps = eps
        self.momentum = momentum
        self.running_mean = np.ones(channels, dtype=REAL)
        self.name = name

    def __call__(self, x, training=False, **_):
        if not x.is_complex:
            raise TypeError(f"{self.name}: expects complex input")
        if x.shape[0] == 0:
            raise ValueError(f"{self.name}: empty batch")
        if training:
            mean = x.abs().mean(axis=(0, 2))
            self.running_mean = (
                (1.0 - self.momentum) * self.running_mean + self.momentum * mean.data
            )
        else:
            mean = Tensor(self.running_mean.copy())
        return x / (mean.reshape(-1, 1) + self.eps)

    def parameters(self):
        return []


class AvgPool1d:
    """Non-overlapping average pooling over the length dimension."""

    def __init__(self, kernel, name="pool"):
        if kernel < 1:
            raise ValueError("pool kernel must be positive")
        self.kernel = kernel
        self.name = name

    def __call__(self, x, **_):
        b, c, t = x.shape
        n = t // self.kernel
        if n == 0:
            raise ValueError(f"{self.name}: length {t} shorter than pool kernel {self.kernel}")
        y = x[:, :, : n * self.kernel].reshape(b, c, n, self.kernel)
        return y.mean(axis=3)

    def parameters(self):
        return []


class Dropout:
    """Dropout that zeroes complex elements as whole re/im units."""

    def __init__(self, p, name="dropout"):
        if not 0.0 <= p < 1.0:
            raise ValueError(f"dropout probability must be in [0, 1), got {p}")
        self.p = p
        self.name = name

    def __call__(self, x, training=False, rng=None, **_):
        if not training or self.p == 0.0:
            return x
        if rng is None:
            raise ValueError(f"{self.name}: training mode requires an rng stream")
        mask = (rng.random(x.shape) >= self.p).astype(REAL) / (1.0 - self.p)
        return x * Tensor(mask)

    def parameters(self):
        return []


class Sequential:
    """A named stack of layers/activations with probe support.

    ``record`` (a dict) collects each step's output under its name, which is
    how the analysis probes read hidden activations.
    """

    def __init__(self, steps):
        self.steps = list(steps)  # (name, callable) pairs

    def __call__(self, x, training=False, rng=None, record=None):
        for name, step in self.steps:
            x = step(x, training=training, rng=rng)
            if record is not None:
                record[name] = x.data.copy()
        return x

    def apply(self, inputs, training=False, rng=None, record=None):
        out = self(inputs["real"], training=training, rng=rng, record=record)
        return {"real": out}

    def parameters(self):
        params = []
        for _, step in self.steps:
            if hasattr(step, "parameters"):
                params.extend(step.parameters())
        return params

    def layer(self, name):
        for step_name, step in self.steps:
            if step_name == name:
                return step
        raise KeyError(name)


def build_mlp(in_features, layer_sizes, activation="ELU", seed=0, domain="real"):
    """Dense stack with the given hidden activation after every layer but the last."""
    rng = np.random.default_rng(seed)
    steps = []
    prev = in_features
    for i, size in enumerate(layer_sizes):
        steps.append((f"layer{i + 1}", Dense(domain, prev, size, rng=rng, name=f"layer{i + 1}")))
        if i < len(layer_sizes) - 1:
            steps.append((f"act{i + 1}", activations.RealActivation(activation)))
        prev = size
    return Sequential(steps)


# -- spec-surface aliases -------------------------------------------------------


def conv_forward(layer, x):
    return layer(x)


def fully_connected_forward(layer, x):
    return layer(x)


def bamn_forward(layer, x, training=False):
    return layer(x, training=training)


# -- parameter counting ---------------------------------------------------------


def count_parameters(obj) -> int:
    """Total parameter count; complex entries count twice."""
    if isinstance(obj, Tensor):
        return obj.size * (2 if obj.is_complex else 1)
    if hasattr(obj, "parameters"):
        return sum(count_parameters(p) for p in obj.parameters())
    return sum(count_parameters(p) for p in obj)


# -- optimizers ------------------------------------------------------------------


def _float_view(arr):
    """View a complex array as interleaved float pairs (shared memory)."""
    return arr.view(REAL) if np.iscomplexobj(arr) else arr


class SGD:
    """Gradient descent with optional momentum, identical on real and complex
    parameters under the split-real convention."""

    def __init__(self, params, lr, momentum=0.0):
        self.params = list(params)
        self.lr = lr
        self.momentum = momentum
        self._buf = [np.zeros_like(p.data) for p in self.params] if momentum else None

    def step(self):
        for i, p in enumerate(self.params):
            if p.grad is None:
                continue
            g = p.grad
            if self.momentum:
                self._buf[i] = self.momentum * self._buf[i] + g
                g = self._buf[i]
            p.data -= self.lr * g

    def zero_grad(self):
        for p in self.params:
            p.grad = None


class Adam:
    """Adam on the underlying real components (complex parameters are viewed
    as interleaved float pairs, so moments track re and im independently)."""

    def __init__(self, params, lr, betas=(0.9, 0.999), eps=1e-8):
        self.params = list(params)
        self.lr = lr
        self.b1, self.b2 = betas
        self.eps = eps
        self._m = [np.zeros(_float_view(p.data).shape, dtype=REAL) for p in self.params]
        self._v = [np.zeros(_float_view(p.data).shape, dtype=REAL) for p in self.params]
        self._t = 0

    def step(self):
        self._t += 1
        for i, p in enumerate(self.params):
            if p.grad is None:
                continue
            g = _float_view(np.ascontiguousarray(p.grad))
            self._m[i] = self.b1 * self._m[i] + (1 - self.b1) * g
            self._v[i] = self.b2 * self._v[i] + (1 - self.b2) * g * g
            mhat = self._m[i] / (1 - self.b1 ** self._t)
            vhat = self._v[i] / (1 - self.b2 ** self._t)
            _float_view(p.data)[...] -= self.lr * mhat / (np.sqrt(vhat) + self.eps)

    def zero_grad(self):
        for p in self.params:
            p.grad = None


def make_optimizer(kind, params, lr):
    if kind == "sgd":
        return SGD(params, lr, momentum=0.9)
    if kind == "adam":
        return Adam(params, lr)
    raise ValueError(f"unknown optimizer {kind!r}")


def optimizer_step(optimizer):
    """Apply one update from the gradients currently stored on the parameters."""
    optimizer.step()
