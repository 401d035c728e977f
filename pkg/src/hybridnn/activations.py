"""Real activations and the generalized complex activation families.

Four parameterized families cover the complex catalogue:

* ``P``:  Z = alpha*z + (k0 + k1*z + k2*z^2 + k3*z^3) / (|z|^q + eps)
* ``Ps``: Z = alpha*z + (k0 + k1*z + k2*z^2 + k3*z^3) / sqrt(|z|^q + eps)
* ``D``:  Z = z * (1 - |alpha| + alpha * sign(v))        (hard switch)
* ``E``:  Z = z * (1 - |alpha| + alpha * v^q / (|z|^q + eps))  (smooth switch)

with v = max(0, Re(z) - k1*|Im(z)| - k0) for the switching families.  All
families evaluate identically on real and complex tensors; with real
coefficients a real input yields an exactly real output.

Eight named presets pin the coefficient vectors for the standard shapes
(reciprocal, ReLU-, Abs-, Tanhshrink-, Tanh-, Softplus-like, plus the two
switching variants), and a ninth "none" sentinel stands for no activation.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .tensor import Tensor, as_tensor, maximum, pow_int

FAMILIES = ("P", "Ps", "D", "E", "RealNamed")

REAL_ACTIVATIONS = ("ReLU", "Softplus", "Tanh", "Abs", "Tanhshrink")
# search catalogue above; ELU is additionally available by name for the
# sinusoid regression experiment
_REAL_EXTRA = ("ELU", "none")

NO_ACTIVATION_NAME = "none"


@dataclass(frozen=True)
class ActivationSpec:
    """One activation family plus its coefficient vector."""

    family: str
    q: int = 0
    alpha: complex = 0.0
    k: tuple = (0.0, 0.0, 0.0, 0.0)
    epsilon: float | None = None
    name: str | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown activation family {self.family!r}")
        if len(self.k) != 4:
            raise ValueError("coefficient vector must have entries k0..k3")
        if self.family in ("P", "Ps", "E"):
            if self.epsilon is None or self.epsilon <= 0:
                raise ValueError(f"family {self.family} requires epsilon > 0")
        if self.family in ("D", "E") and abs(self.alpha) > 1:
            raise ValueError("families D and E require |alpha| <= 1")


def _is_zero(c):
    return c == 0

def _switch_level(spec, z):
    """v = max(0, Re(z) - k1*|Im(z)| - k0), real by construction."""
    re = z.real()
    im_mag = z.imag().abs()
    level = re - spec.k[1] * im_mag - Tensor(np.full(z.shape, float(spec.k[0])))
    return maximum(level, Tensor(np.zeros(z.shape)))


def activate(spec: ActivationSpec, z) -> Tensor:
    """Evaluate a complex activation family elementwise.

    Real tensors pass through the same formulas; with real coefficients the
    output stays exactly real.
    """
    z = as_tensor(z)
    if spec.name == NO_ACTIVATION_NAME:
        return z + 0.0
    if spec.family == "RealNamed":
        return activate_real(spec.name, z)
    if spec.family in ("P", "Ps"):
        mag_q = pow_int(z.abs(), spec.q)
        denom = mag_q + spec.epsilon
        if spec.family == "Ps":
            denom = denom.sqrt()
        numer = None
        for n, kn in enumerate(spec.k):
            if _is_zero(kn):
                continue
            term = kn * pow_int(z, n) if n else Tensor(np.full(z.shape, 1.0)) * kn
            numer = term if numer is None else numer + term
        out = numer / denom if numer is not None else Tensor(np.zeros(z.shape))
        if not _is_zero(spec.alpha):
            out = spec.alpha * z + out
        return out
    v = _switch_level(spec, z)
    a = spec.alpha
    if spec.family == "D":
        gate = (1.0 - abs(a)) + a * v.sign()
    else:
        gate = (1.0 - abs(a)) + a * (pow_int(v, spec.q) / (pow_int(z.abs(), spec.q) + spec.epsilon))
    return z * gate


def activate_real(name: str, x) -> Tensor:
    """Standard real activations by name."""
    x = as_tensor(x)
    if x.is_complex:
        raise TypeError("activate_real expects a real tensor")
    if name == "ReLU":
        return maximum(x, Tensor(np.zeros(x.shape)))
    if name == "Softplus":
        # log(1 + e^x) stabilized as max(x,0) + log(1 + e^-|x|)
        return maximum(x, Tensor(np.zeros(x.shape))) + ((-x.abs()).exp() + 1.0).log()
    if name == "Tanh":
        return x.tanh()
    if name == "Abs":
        return x.abs()
    if name == "Tanhshrink":
        return x - x.tanh()
    if name == "ELU":
        neg = -maximum(-x, Tensor(np.zeros(x.shape)))  # min(x, 0)
        return maximum(x, Tensor(np.zeros(x.shape))) + neg.exp() - 1.0
    if name == NO_ACTIVATION_NAME:
        return x + 0.0
    raise ValueError(f"unknown real activation {name!r}")


_PRESET_ROWS = (
    # name,          family, q, alpha, (k0,    k1, k2,  k3), epsilon
    ("cRecip",       "P",  1, 0.0,  (0.0,   1.0, 0.0, 0.0), 0.01),
    ("cReLU",        "P",  1, 0.5,  (0.0,   0.0, 0.5, 0.0), 0.01),
    ("cAbs",         "P",  1, 0.0,  (0.0,   0.0, 1.0, 0.0), 0.01),
    ("cTanhshrink",  "P",  2, 0.0,  (0.0,   0.0, 0.0, 1.0), 1.0),
    ("cTanh",        "Ps", 2, 0.0,  (0.0,   1.0, 0.0, 0.0), 1.0),
    ("cSoftPlus",    "Ps", 2, 0.5,  (2.134, 0.0, 0.5, 0.0), 9.481),
    ("cReImLU",      "D",  0, 0.95, (0.1,   1.0, 0.0, 0.0), None),
    ("cRecipMax",    "E",  2, 0.9,  (0.1,   0.5, 0.0, 0.0), 0.1),
)

_PRESETS = {
    name: ActivationSpec(family=family, q=q, alpha=alpha, k=k, epsilon=eps, name=name)
    for name, family, q, alpha, k, eps in _PRESET_ROWS
}

NO_ACTIVATION = ActivationSpec(family="RealNamed", name=NO_ACTIVATION_NAME)

COMPLEX_ACTIVATIONS = tuple(_PRESETS)


def list_presets():
    """The eight named complex presets plus the no-activation sentinel."""
    return [*(_PRESETS[n] for n in COMPLEX_ACTIVATIONS), NO_ACTIVATION]


def get_preset(name: str) -> ActivationSpec:
    if name == NO_ACTIVATION_NAME:
        return NO_ACTIVATION
    try:
        return _PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown activation preset {name!r}") from None


def elu_surrogate_spec() -> ActivationSpec:
    """Smooth rational surrogate of ELU: 0.373z + z(1.513 + 0.627z)/(|z| + 2.411)."""
    return ActivationSpec(
        family="P", q=1, alpha=0.373, k=(0.0, 1.513, 0.627, 0.0), epsilon=2.411, name="cELU"
    )


def is_real_activation(name: str) -> bool:
    return name in REAL_ACTIVATIONS or name in _REAL_EXTRA


def is_complex_activation(name: str) -> bool:
    return name in _PRESETS or name == NO_ACTIVATION_NAME


class RealActivation:
    """Callable wrapper so named real activations slot into layer stacks."""

    def __init__(self, name):
        if not is_real_activation(name):
            raise ValueError(f"unknown real activation {name!r}")
        self.name = name

    def __call__(self, x, **_):
        return activate_real(self.name, x)

    def parameters(self):
        return []

    def __repr__(self):
        return f"RealActivation({self.name!r})"


class ComplexActivation:
    """Callable wrapper around an :class:`ActivationSpec`."""

    def __init__(self, spec_or_name):
        self.spec = get_preset(spec_or_name) if isinstance(spec_or_name, str) else spec_or_name

    def __call__(self, z, **_):
        return activate(self.spec, z)

    def parameters(self):
        return []

    def __repr__(self):
        return f"ComplexActivation({self.spec.name or self.spec.family})"
