"""Tensor core: elementwise ops, matmul, reverse-mode gradients, serialization."""

import numpy as np
import pytest

from hybridnn.tensor import (
    Tensor,
    backward,
    concat,
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

from oracles import gradcheck


class TestElementwise:
    def test_abs_pythagorean(self):
        assert elementwise("abs", Tensor([3 + 4j])).data[0] == 5.0

    def test_conj(self):
        out = elementwise("conj", Tensor([1 + 2j]))
        assert out.data[0] == 1 - 2j

    def test_arg_principal_value(self):
        out = elementwise("arg", Tensor([-1 + 0j]))
        assert out.data[0] == pytest.approx(np.pi)

    def test_arg_zero_is_zero(self):
        assert elementwise("arg", Tensor([0j])).data[0] == 0.0

    def test_div_by_zero_raises(self):
        with pytest.raises(ZeroDivisionError):
            elementwise("div", Tensor([1.0]), Tensor([0.0]))

    def test_guarded_div_tolerates_zero(self):
        out = elementwise("div", Tensor([1.0]), Tensor([0.0]), eps=0.5)
        assert out.data[0] == 2.0

    def test_broadcast_trailing_alignment(self):
        a = Tensor(np.ones((2, 3, 4)))
        b = Tensor(np.arange(4.0))
        assert (a + b).shape == (2, 3, 4)

    def test_shape_mismatch_raises(self):
        with pytest.raises(ValueError):
            _ = Tensor(np.ones(3)) + Tensor(np.ones(4))

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            elementwise("frobnicate", Tensor([1.0]))


class TestPromotion:
    def test_real_to_complex_and_back_lossless(self, rng):
        x = Tensor(rng.normal(size=17))
        roundtrip = x.to_complex().real()
        assert roundtrip.data.dtype == np.float64
        np.testing.assert_array_equal(roundtrip.data, x.data)

    def test_mixed_ops_promote(self):
        out = Tensor([2.0]) * Tensor([1j])
        assert out.is_complex and out.data[0] == 2j


class TestMatmul:
    def test_known_matrix_vector(self):
        w = Tensor([[0.827, -0.986], [0.986, 0.819]])
        x = Tensor([[1.0], [0.0]])
        out = matmul(w, x)
        np.testing.assert_allclose(out.data.ravel(), [0.827, 0.986])

    def test_identity(self, rng):
        x = Tensor(rng.normal(size=(4, 4)))
        np.testing.assert_allclose(matmul(Tensor(np.eye(4)), x).data, x.data)

    def test_complex_basis_vectors_select_columns(self, rng):
        w = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        for i, e in enumerate(np.eye(2)):
            out = matmul(Tensor(w), Tensor(e.reshape(2, 1) + 0j))
            np.testing.assert_allclose(out.data.ravel(), w[:, i])

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))


class TestBackward:
    def test_squared_magnitude_gradient(self):
        # d|w|^2 = (2 Re w, 2 Im w); at w = 1+2j that is (2, 4)
        w = Tensor([1 + 2j], requires_grad=True, name="w")
        grads = backward((w.abs() * w.abs()).sum(), [w])
        np.testing.assert_allclose(grads["w"].value.data, [2 + 4j], atol=1e-12)

    def test_real_part_gradient_is_one_zero(self, rng):
        w = Tensor(rng.normal(size=3) + 1j * rng.normal(size=3), requires_grad=True, name="w")
        grads = backward(w.real().sum(), [w])
        np.testing.assert_allclose(grads["w"].value.data, np.ones(3) + 0j)

    def test_constant_loss_zero_gradients(self):
        w = Tensor([1 + 1j], requires_grad=True, name="w")
        grads = backward(Tensor(np.asarray(5.0), requires_grad=False), [w])
        np.testing.assert_array_equal(grads["w"].value.data, [0j])

    def test_untouched_parameter_maps_to_zero(self):
        used = Tensor([2.0], requires_grad=True, name="used")
        unused = Tensor([3.0], requires_grad=True, name="unused")
        grads = backward((used * used).sum(), [used, unused])
        np.testing.assert_array_equal(grads["unused"].value.data, [0.0])
        np.testing.assert_allclose(grads["used"].value.data, [4.0])

    def test_non_scalar_loss_rejected(self):
        w = Tensor([1.0, 2.0], requires_grad=True)
        with pytest.raises(ValueError):
            (w * w).backward()

    def test_complex_loss_rejected(self):
        w = Tensor([1 + 1j], requires_grad=True)
        with pytest.raises(ValueError):
            (w * w).sum().backward()


class TestFiniteDifferenceOracle:
    def test_quadratic_slope(self):
        w = Tensor([2.0], requires_grad=True, name="w")
        grads = finite_difference_gradient(lambda: float(np.abs(w.data[0]) ** 2), [w])
        assert grads["w"].value.data[0] == pytest.approx(4.0, abs=1e-6)

    def test_cubed_imaginary_component(self):
        # f(w) = Im(w)^3 at w = i has d/dIm = 3
        w = Tensor([1j], requires_grad=True, name="w")
        grads = finite_difference_gradient(lambda: float(w.data[0].imag ** 3), [w])
        g = grads["w"].value.data[0]
        assert g.imag == pytest.approx(3.0, abs=1e-6)
        assert g.real == pytest.approx(0.0, abs=1e-6)

    def test_constant_function(self):
        w = Tensor([1 + 1j], requires_grad=True, name="w")
        grads = finite_difference_gradient(lambda: 7.0, [w])
        np.testing.assert_array_equal(grads["w"].value.data, [0j])

    def test_nonfinite_objective_rejected(self):
        w = Tensor([1.0], requires_grad=True, name="w")
        with pytest.raises(FloatingPointError):
            finite_difference_gradient(lambda: float("nan"), [w])

    def test_step_must_be_positive(self):
        with pytest.raises(ValueError):
            finite_difference_gradient(lambda: 0.0, [], step=0.0)


def _away_from_axes(rng, shape):
    mag = rng.uniform(0.4, 1.6, shape)
    ang = rng.uniform(0.15, np.pi / 2 - 0.15, shape)  # both components bounded away from 0
    sign_r = rng.choice([-1.0, 1.0], shape)
    sign_i = rng.choice([-1.0, 1.0], shape)
    return mag * (sign_r * np.cos(ang) + 1j * sign_i * np.sin(ang))


class TestGradientsMatchFiniteDifferences:
    @pytest.mark.parametrize("op", ["add", "sub", "mul", "div"])
    def test_binary_complex(self, rng, op):
        a = Tensor(_away_from_axes(rng, 6), requires_grad=True, name="a")
        b = Tensor(_away_from_axes(rng, 6), requires_grad=True, name="b")
        gradcheck(lambda: (elementwise(op, a, b).abs() ** 2).sum(), [a, b])

    @pytest.mark.parametrize("op", ["neg", "conj", "exp", "real", "imag", "abs", "arg", "sqrt"])
    def test_unary_complex(self, rng, op):
        z = Tensor(_away_from_axes(rng, 6), requires_grad=True, name="z")
        gradcheck(lambda: (elementwise(op, z).abs() ** 2).sum(), [z])

    @pytest.mark.parametrize("op", ["abs", "exp", "sqrt", "add", "mul", "div", "max"])
    def test_real_domain(self, rng, op):
        a = Tensor(rng.uniform(0.5, 2.0, 6), requires_grad=True, name="a")
        if op in ("add", "mul", "div", "max"):
            b = Tensor(rng.uniform(0.5, 2.0, 6) + 0.01, requires_grad=True, name="b")
            gradcheck(lambda: (elementwise(op, a, b) ** 2).sum(), [a, b])
        else:
            gradcheck(lambda: (elementwise(op, a) ** 2).sum(), [a])

    def test_matmul_complex(self, rng):
        a = Tensor(_away_from_axes(rng, (3, 4)), requires_grad=True, name="a")
        b = Tensor(_away_from_axes(rng, (4, 2)), requires_grad=True, name="b")
        gradcheck(lambda: (matmul(a, b).abs() ** 2).sum(), [a, b])

    def test_shape_ops(self, rng):
        z = Tensor(_away_from_axes(rng, (2, 6)), requires_grad=True, name="z")
        gradcheck(
            lambda: (concat([z[:, :3], z[:, 3:]], axis=1).transpose().reshape(12).abs() ** 2).sum(),
            [z],
        )

    def test_complex_pack(self, rng):
        re = Tensor(rng.normal(size=5), requires_grad=True, name="re")
        im = Tensor(rng.normal(size=5), requires_grad=True, name="im")
        gradcheck(lambda: (complex_pack(re, im).abs() ** 2).sum(), [re, im])

    def test_softmax_cross_entropy(self, rng):
        logits = Tensor(rng.normal(size=(5, 4)), requires_grad=True, name="logits")
        labels = rng.integers(0, 4, 5)
        gradcheck(lambda: softmax_cross_entropy(logits, labels), [logits])

    def test_mse(self, rng):
        pred = Tensor(rng.normal(size=(4, 3)), requires_grad=True, name="pred")
        target = rng.normal(size=(4, 3))
        gradcheck(lambda: mse(pred, target), [pred])


class TestProductRule:
    def test_split_real_form_on_random_samples(self, rng):
        # grad of Re(a*b) wrt a must equal conj'(b) contribution: check the
        # packed gradient against the hand-derived product rule on 100 draws
        for _ in range(100):
            av = complex(rng.normal(), rng.normal())
            bv = complex(rng.normal(), rng.normal())
            a = Tensor([av], requires_grad=True, name="a")
            b = Tensor([bv], requires_grad=True, name="b")
            grads = backward((a * b).real().sum(), [a, b])
            # d Re(ab)/dRe(a) = Re(b), d Re(ab)/dIm(a) = -Im(b)
            expected_a = bv.real - 1j * bv.imag
            expected_b = av.real - 1j * av.imag
            assert grads["a"].value.data[0] == pytest.approx(expected_a, abs=1e-12)
            assert grads["b"].value.data[0] == pytest.approx(expected_b, abs=1e-12)


class TestPowInt:
    def test_small_powers_exact(self, rng):
        z = _away_from_axes(rng, 8)
        for n in range(4):
            np.testing.assert_allclose(pow_int(Tensor(z), n).data, z ** n, rtol=1e-12)

    def test_negative_power_rejected(self):
        with pytest.raises(ValueError):
            pow_int(Tensor([1.0]), -1)


class TestMaximum:
    def test_complex_rejected(self):
        with pytest.raises(TypeError):
            maximum(Tensor([1j]), Tensor([0.0]))


class TestSerialization:
    def test_complex_roundtrip_interleaved(self, rng):
        t = Tensor(rng.normal(size=(2, 3)) + 1j * rng.normal(size=(2, 3)))
        payload = tensor_to_json(t)
        assert payload["dtype"] == "complex128"
        assert len(payload["data"]) == 12  # interleaved re/im
        assert payload["data"][0] == t.data[0, 0].real
        assert payload["data"][1] == t.data[0, 0].imag
        back = tensor_from_json(payload)
        np.testing.assert_array_equal(back.data, t.data)

    def test_real_roundtrip(self, rng):
        t = Tensor(rng.normal(size=7))
        back = tensor_from_json(tensor_to_json(t))
        assert back.dtype_name == "real64"
        np.testing.assert_array_equal(back.data, t.data)

    def test_unknown_dtype_rejected(self):
        with pytest.raises(ValueError):
            tensor_from_json({"shape": [1], "dtype": "float16", "data": [0.0]})
