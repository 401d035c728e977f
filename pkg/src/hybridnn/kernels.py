"""Backend selection for the convolution hot loops.

Two interchangeable implementations exist: a Cython extension (``_convcy``)
and a pure-numpy one (``_convnp``) whose heavy lifting runs inside BLAS.
``benchmarks/bench_kernels.py`` compares them; on BLAS-accelerated numpy
builds the numpy path wins at realistic network shapes (the scalar compiled
loops only lead on very small problems), so it is the default.

Selection happens once at import time:

* ``HYBRIDNN_BACKEND=compiled`` prefers the extension (if it built),
* ``HYBRIDNN_BACKEND=numpy`` or ``HYBRIDNN_PURE_PYTHON=1`` force the
  numpy implementation.
"""

import os

from . import _convnp

try:
    from . import _convcy
except ImportError:
    _convcy = None

_choice = os.environ.get("HYBRIDNN_BACKEND", "numpy").lower()
if os.environ.get("HYBRIDNN_PURE_PYTHON"):
    _choice = "numpy"

_impl = _convcy if (_choice == "compiled" and _convcy is not None) else _convnp

BACKEND = "compiled" if _impl is _convcy else "numpy"

conv1d_forward = _impl.conv1d_forward
conv1d_grad_weight = _impl.conv1d_grad_weight
conv1d_grad_input = _impl.conv1d_grad_input


def available_backends():
    """Mapping of backend name to its module, for tests and benchmarks."""
    result = {"numpy": _convnp}
    if _convcy is not None:
        result["compiled"] = _convcy
    return result
