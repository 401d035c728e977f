"""Fixed (non-learned) conversion functions between real and complex channels.

Real-to-complex kinds consume 1-3 real channels per complex output channel;
complex-to-real kinds emit 1-N real channels per complex input channel.
Phase-like outputs are normalized by pi so they live in [-1, 1] or [0, 1].

Channel wiring on [batch, channels, length] tensors:

* r2c input grouping: consecutive channel blocks, one block per function
  instance (arity 2 pairs channels (0,1), (2,3), ...).
* c2r multi-output layout: blocked by component, i.e. all component-0 outputs
  for every input channel first, then all component-1 outputs, and so on.

All conversions are differentiable through the autodiff ops away from z = 0
(and x1 = 0 for the square-root kind).  The multi-phase magnitude/real kind
is exactly invertible for n_phases >= 3; see :func:`invert_lossless`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .tensor import Tensor, as_tensor, complex_pack, concat

R2C_ARITY = {
    "Real": 1, "Exp": 1, "Sqrt": 1, "MagExp": 1,
    "Cartesian": 2, "Polar": 2, "Rotation": 3,
}

C2R_OUTPUTS = {
    "Real": 1, "Mag": 1, "SquareMag": 1, "AbsPhase": 1,
    "MagAbsPhase": 2, "Cartesian": 2, "Polar": 2,
    "MultiMagReal": None, "MultiMagPhase": None,  # n_phases outputs
}

LOSSLESS_C2R = ("Cartesian", "Polar", "MultiMagReal")


@dataclass(frozen=True)
class ConversionSpec:
    """Identifies one conversion function plus its phase-count parameter."""

    direction: str  # "R2C" or "C2R"
    kind: str
    n_phases: int = 3

    def __post_init__(self):
        if self.direction not in ("R2C", "C2R"):
            raise ValueError(f"direction must be R2C or C2R, got {self.direction!r}")
        table = R2C_ARITY if self.direction == "R2C" else C2R_OUTPUTS
        if self.kind not in table:
            raise ValueError(f"unknown {self.direction} conversion kind {self.kind!r}")
        if self.n_phases < 1:
            raise ValueError("n_phases must be >= 1")

    @property
    def in_arity(self):
        return R2C_ARITY[self.kind] if self.direction == "R2C" else 1

    @property
    def out_arity(self):
        if self.direction == "R2C":
            return 1
        n = C2R_OUTPUTS[self.kind]
        return self.n_phases if n is None else n


def r2c_spec(kind, n_phases=3):
    return ConversionSpec("R2C", kind, n_phases)


def c2r_spec(kind, n_phases=3):
    return ConversionSpec("C2R", kind, n_phases)


def _components(x, arity):
    """Split grouped channels: component m of each consecutive group."""
    if x.shape[1] % arity:
        raise ValueError(f"channel count {x.shape[1]} not divisible by arity {arity}")
    return [x[:, m::arity, :] for m in range(arity)]


def _unit_phase(x):
    """e^{i*pi*x} for a real tensor x."""
    return (1j * math.pi * x.to_complex()).exp()


def _signed_sqrt(x):
    """Principal square root of a real tensor: i*sqrt(|x|) for negative x."""
    zero = Tensor(np.zeros(x.shape))
    from .tensor import maximum

    pos = maximum(x, zero).sqrt()
    neg = maximum(-x, zero).sqrt()
    return complex_pack(pos, neg)


def r2c(spec: ConversionSpec, x) -> Tensor:
    """Real channels [B, C, T] -> complex channels [B, C/arity, T]."""
    if spec.direction != "R2C":
        raise ValueError("r2c requires an R2C spec")
    x = as_tensor(x)
    if x.is_complex:
        raise TypeError("r2c expects a real tensor")
    parts = _components(x, spec.in_arity)
    kind = spec.kind
    if kind == "Real":
        return parts[0].to_complex()
    if kind == "Exp":
        return _unit_phase(parts[0])
    if kind == "Sqrt":
        return _signed_sqrt(parts[0])
    if kind == "MagExp":
        return parts[0].abs().to_complex() * _unit_phase(parts[0])
    if kind == "Cartesian":
        return complex_pack(parts[0], parts[1])
    if kind == "Polar":
        return parts[0].to_complex() * _unit_phase(parts[1])
    if kind == "Rotation":
        return complex_pack(parts[0], parts[1]) * _unit_phase(parts[2])
    raise AssertionError(kind)


def _phase_rotations(n_phases):
    return [complex(np.exp(-2j * math.pi * n / n_phases)) for n in range(n_phases)]


def c2r(spec: ConversionSpec, z) -> Tensor:
    """Complex channels [B, C, T] -> real channels [B, C*outputs, T]."""
    if spec.direction != "C2R":
        raise ValueError("c2r requires a C2R spec")
    z = as_tensor(z)
    if not z.is_complex:
        raise TypeError("c2r expects a complex tensor")
    kind = spec.kind
    if kind == "Real":
        return z.real()
    if kind == "Mag":
        return z.abs()
    if kind == "SquareMag":
        mag = z.abs()
        return mag * mag
    if kind == "AbsPhase":
        return z.arg().abs() * (1.0 / math.pi)
    if kind == "MagAbsPhase":
        return concat([z.abs(), z.arg().abs() * (1.0 / math.pi)], axis=1)
    if kind == "Cartesian":
        return concat([z.real(), z.imag()], axis=1)
    if kind == "Polar":
        return concat([z.abs(), z.arg() * (1.0 / math.pi)], axis=1)
    if kind == "MultiMagReal":
        mag = z.abs()
        outs = [(mag + (z * rot).real()) * 0.5 for rot in _phase_rotations(spec.n_phases)]
        return concat(outs, axis=1)
    if kind == "MultiMagPhase":
        mag = z.abs()
        outs = [
            mag * (z * rot).arg().abs() * (1.0 / math.pi)
            for rot in _phase_rotations(spec.n_phases)
        ]
        return concat(outs, axis=1)
    raise AssertionError(kind)


def invert_lossless(spec: ConversionSpec, y) -> Tensor:
    """Reconstruct the complex input of a lossless C2R conversion.

    Exists as the round-trip oracle for the lossless class (Cartesian, Polar,
    and the multi-phase magnitude/real kind with n_phases >= 3); other kinds
    raise.  Accepts the blocked channel layout produced by :func:`c2r`.
    """
    if spec.direction != "C2R" or spec.kind not in LOSSLESS_C2R:
        raise ValueError(f"{spec.kind} is not a lossless C2R conversion")
    if spec.kind == "MultiMagReal" and spec.n_phases < 3:
        raise ValueError("multi-phase inversion requires n_phases >= 3")
    y = as_tensor(y)
    data = y.data
    n_out = spec.out_arity
    if data.shape[1] % n_out:
        raise ValueError(f"channel count {data.shape[1]} does not hold {n_out} components")
    c = data.shape[1] // n_out
    comps = [data[:, n * c:(n + 1) * c, :] for n in range(n_out)]
    if spec.kind == "Cartesian":
        return Tensor(comps[0] + 1j * comps[1])
    if spec.kind == "Polar":
        return Tensor(comps[0] * np.exp(1j * math.pi * comps[1]))
    # MultiMagReal: solve 2*y_n = r + a*cos(th_n) + b*sin(th_n) for (r, a, b)
    theta = 2.0 * math.pi * np.arange(spec.n_phases) / spec.n_phases
    design = np.stack([np.ones_like(theta), np.cos(theta), np.sin(theta)], axis=1)
    rhs = 2.0 * np.stack([comp.ravel() for comp in comps], axis=0)
    solution, *_ = np.linalg.lstsq(design, rhs, rcond=None)
    z = solution[1] + 1j * solution[2]
    return Tensor(z.reshape(comps[0].shape))
