"""hybridnn: hybrid real/complex-valued neural networks.

Split-real autodiff tensors, real and complex 1-D layers, parameterized
complex activation families, real<->complex domain conversion functions, a
four-path hybrid building block with dependency pruning, a phase-wise
architecture search, audio/sinusoid dataset pipelines, and weight forensics.
"""

from .tensor import (
    Tensor,
    Gradient,
    as_tensor,
    backward,
    concat,
    conv1d,
    complex_pack,
    elementwise,
    finite_difference_gradient,
    matmul,
    maximum,
    mse,
    pow_int,
    softmax_cross_entropy,
    tensor_from_json,
    tensor_to_json,
)

from . import activations, analysis, conversion, datasets, graph, kernels, layers, nas

__version__ = "0.1.0"

__all__ = [
    "activations",
    "analysis",
    "conversion",
    "datasets",
    "graph",
    "kernels",
    "layers",
    "nas",
    "Tensor",
    "Gradient",
    "as_tensor",
    "backward",
    "concat",
    "conv1d",
    "complex_pack",
    "elementwise",
    "finite_difference_gradient",
    "matmul",
    "maximum",
    "mse",
    "pow_int",
    "softmax_cross_entropy",
    "tensor_from_json",
    "tensor_to_json",
    "__version__",
]
