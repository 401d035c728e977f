"""Convolution kernels: every backend against the direct-sum oracle and each other."""

import numpy as np
import pytest

from hybridnn import kernels

from oracles import brute_conv1d

BACKENDS = kernels.available_backends()

CASES = [
    # batch, in_ch, length, out_ch, kernel, stride, pads, groups
    (2, 3, 11, 4, 3, 1, (1, 1), 1),
    (1, 4, 9, 6, 1, 1, (0, 0), 2),
    (3, 6, 16, 6, 5, 2, (2, 2), 3),
    (2, 2, 7, 2, 4, 1, (1, 2), 1),
    (1, 1, 5, 3, 5, 1, (0, 0), 1),
]


def _arrays(rng, case, complex_dtype):
    b, c, length, o, k, stride, pads, groups = case
    shape_x, shape_w = (b, c, length), (o, c // groups, k)
    if complex_dtype:
        x = rng.normal(size=shape_x) + 1j * rng.normal(size=shape_x)
        w = rng.normal(size=shape_w) + 1j * rng.normal(size=shape_w)
    else:
        x = rng.normal(size=shape_x)
        w = rng.normal(size=shape_w)
    return x, w


@pytest.mark.parametrize("backend", sorted(BACKENDS))
@pytest.mark.parametrize("case", CASES)
@pytest.mark.parametrize("complex_dtype", [False, True])
class TestForwardAgainstOracle:
    def test_matches_direct_sum(self, rng, backend, case, complex_dtype):
        x, w = _arrays(rng, case, complex_dtype)
        _, _, _, _, _, stride, pads, groups = case
        got = BACKENDS[backend].conv1d_forward(x, w, stride, pads[0], pads[1], groups)
        want = brute_conv1d(x, w, stride=stride, pad=pads, groups=groups)
        np.testing.assert_allclose(got, want, atol=1e-12)


@pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled backend unavailable")
@pytest.mark.parametrize("case", CASES)
@pytest.mark.parametrize("complex_dtype", [False, True])
class TestBackendParity:
    def test_all_three_entry_points_agree(self, rng, case, complex_dtype):
        x, w = _arrays(rng, case, complex_dtype)
        _, _, length, _, k, stride, pads, groups = case
        y0 = BACKENDS["numpy"].conv1d_forward(x, w, stride, pads[0], pads[1], groups)
        gy = (rng.normal(size=y0.shape) + 1j * rng.normal(size=y0.shape)) if complex_dtype \
            else rng.normal(size=y0.shape)
        ref = None
        for name, mod in BACKENDS.items():
            triple = (
                mod.conv1d_forward(x, w, stride, pads[0], pads[1], groups),
                mod.conv1d_grad_weight(gy, np.conj(x), k, stride, pads[0], groups),
                mod.conv1d_grad_input(gy, np.conj(w), length, stride, pads[0], groups),
            )
            if ref is None:
                ref = triple
            else:
                for a, b_arr in zip(ref, triple):
                    np.testing.assert_allclose(a, b_arr, atol=1e-11)


class TestDispatch:
    def test_a_backend_is_selected(self):
        assert kernels.BACKEND in BACKENDS

    def test_numpy_fallback_always_present(self):
        assert "numpy" in BACKENDS
