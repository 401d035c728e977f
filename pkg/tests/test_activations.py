"""Activations: preset golden values, derived spot checks, shape fidelity
against reference real functions, and structural properties."""

import numpy as np
import pytest

from hybridnn.activations import (
    ActivationSpec,
    COMPLEX_ACTIVATIONS,
    NO_ACTIVATION_NAME,
    REAL_ACTIVATIONS,
    activate,
    activate_real,
    elu_surrogate_spec,
    get_preset,
    list_presets,
)
from hybridnn.tensor import Tensor

from conftest import random_complex
from oracles import gradcheck

# the full preset coefficient table, frozen
GOLDEN_PRESETS = {
    # name:        (family, q, alpha, k0, k1, k2, k3, epsilon)
    "cRecip":      ("P",  1, 0.0,  0.0,   1.0, 0.0, 0.0, 0.01),
    "cReLU":       ("P",  1, 0.5,  0.0,   0.0, 0.5, 0.0, 0.01),
    "cAbs":        ("P",  1, 0.0,  0.0,   0.0, 1.0, 0.0, 0.01),
    "cTanhshrink": ("P",  2, 0.0,  0.0,   0.0, 0.0, 1.0, 1.0),
    "cTanh":       ("Ps", 2, 0.0,  0.0,   1.0, 0.0, 0.0, 1.0),
    "cSoftPlus":   ("Ps", 2, 0.5,  2.134, 0.0, 0.5, 0.0, 9.481),
    "cReImLU":     ("D",  0, 0.95, 0.1,   1.0, 0.0, 0.0, None),
    "cRecipMax":   ("E",  2, 0.9,  0.1,   0.5, 0.0, 0.0, 0.1),
}


class TestPresetTable:
    def test_every_row_loads_exactly_as_frozen(self):
        for name, (family, q, alpha, k0, k1, k2, k3, eps) in GOLDEN_PRESETS.items():
            spec = get_preset(name)
            assert spec.family == family, name
            assert spec.q == q, name
            assert spec.alpha == alpha, name
            assert spec.k == (k0, k1, k2, k3), name
            assert spec.epsilon == eps, name

    def test_catalogue_is_eight_presets_plus_sentinel(self):
        presets = list_presets()
        assert len(presets) == 9
        names = [p.name for p in presets]
        assert names[:-1] == list(COMPLEX_ACTIVATIONS)
        assert names[-1] == NO_ACTIVATION_NAME

    def test_unknown_preset_rejected(self):
        with pytest.raises(ValueError):
            get_preset("cMystery")

    def test_epsilon_must_be_positive_for_rational_families(self):
        with pytest.raises(ValueError):
            ActivationSpec(family="P", q=1, epsilon=0.0)

    def test_switch_families_require_bounded_alpha(self):
        with pytest.raises(ValueError):
            ActivationSpec(family="D", alpha=1.5)


class TestDerivedValues:
    """Expected numbers computed by evaluating the closed forms by hand."""

    def test_ctanh_at_one(self):
        # 1 / sqrt(1^2 + 1) = 1/sqrt(2)
        out = activate(get_preset("cTanh"), Tensor([1.0]))
        assert out.data[0] == pytest.approx(1 / np.sqrt(2), abs=1e-12)

    def test_crelu_positive_side(self):
        # 0.5*2 + 0.5*4/2.01 = 1.99502...
        out = activate(get_preset("cReLU"), Tensor([2.0]))
        assert out.data[0] == pytest.approx(1.9950248756218907, abs=1e-12)

    def test_crelu_negative_side_near_zero(self):
        # 0.5*(-2) + 0.5*4/2.01 = -0.0049751...; |value| < 0.005 gives the
        # ReLU shape on the negative axis
        out = activate(get_preset("cReLU"), Tensor([-2.0]))
        assert out.data[0] == pytest.approx(-0.004975124378109319, abs=1e-12)
        assert abs(out.data[0]) < 0.005

    def test_cabs_tracks_magnitude(self):
        # (-2)^2 / (2.01) = 1.99005 ~= |-2|
        out = activate(get_preset("cAbs"), Tensor([-2.0]))
        assert out.data[0] == pytest.approx(1.9900497512437814, abs=1e-12)

    def test_csoftplus_at_zero_matches_ln2(self):
        out = activate(get_preset("cSoftPlus"), Tensor([0.0]))
        assert out.data[0] == pytest.approx(np.log(2), abs=1e-3)

    def test_elu_surrogate_spot_value(self):
        # 0.373*(-1) + (-1)(1.513 - 0.627)/(1 + 2.411) = -0.632748
        out = activate(elu_surrogate_spec(), Tensor([-1.0]))
        assert out.data[0] == pytest.approx(-0.6327, abs=1e-3)
        assert activate_real("ELU", Tensor([-1.0])).data[0] == pytest.approx(-0.63212, abs=1e-4)


class TestRealActivations:
    def test_relu(self):
        assert activate_real("ReLU", Tensor([-3.0])).data[0] == 0.0

    def test_tanhshrink_zero(self):
        assert activate_real("Tanhshrink", Tensor([0.0])).data[0] == 0.0

    def test_softplus_zero_is_ln2(self):
        assert activate_real("Softplus", Tensor([0.0])).data[0] == pytest.approx(np.log(2))

    def test_abs(self):
        assert activate_real("Abs", Tensor([-2.5])).data[0] == 2.5

    def test_unknown_name_rejected(self):
        with pytest.raises(ValueError):
            activate_real("Swish", Tensor([1.0]))

    def test_complex_input_rejected(self):
        with pytest.raises(TypeError):
            activate_real("ReLU", Tensor([1j]))

    def test_none_sentinel_is_identity(self, rng):
        x = rng.normal(size=9)
        np.testing.assert_array_equal(activate_real(NO_ACTIVATION_NAME, Tensor(x)).data, x)


class TestPhaseEquivariance:
    """Presets whose only nonzero coefficient is k1 with real alpha scale the
    magnitude only, so the phase passes through unchanged."""

    @pytest.mark.parametrize("name", ["cRecip", "cTanh"])
    def test_argument_preserved(self, rng, name):
        z = random_complex(rng, 200)
        out = activate(get_preset(name), Tensor(z))
        np.testing.assert_allclose(np.angle(out.data), np.angle(z), atol=1e-12)

    def test_ctanh_magnitude_below_one(self, rng):
        z = random_complex(rng, 500, lo=1e-3, hi=1e3)
        out = activate(get_preset("cTanh"), Tensor(z))
        assert np.all(np.abs(out.data) < 1.0)


class TestRealClosure:
    @pytest.mark.parametrize("name", COMPLEX_ACTIVATIONS)
    def test_real_axis_maps_to_real_axis(self, rng, name):
        x = rng.uniform(-3.0, 3.0, 500)
        out = activate(get_preset(name), Tensor(x + 0j))
        assert np.abs(out.data.imag).max() < 1e-12, name


class TestShapeFidelity:
    """Direct evaluation of the reference real functions is the oracle."""

    def setup_method(self):
        self.x = np.arange(-3.0, 3.0 + 1e-9, 0.01)

    def test_crelu_tracks_relu(self):
        out = activate(get_preset("cReLU"), Tensor(self.x)).data
        assert np.abs(out - np.maximum(self.x, 0.0)).max() < 0.05

    def test_cabs_tracks_abs(self):
        out = activate(get_preset("cAbs"), Tensor(self.x)).data
        assert np.abs(out - np.abs(self.x)).max() < 0.05

    def test_elu_surrogate_tracks_elu(self):
        out = activate(elu_surrogate_spec(), Tensor(self.x)).data
        reference = np.where(self.x > 0, self.x, np.expm1(self.x))
        assert np.abs(out - reference).max() < 0.05


class TestSmoothSwitchFamily:
    def test_reduces_to_identity_as_alpha_vanishes(self, rng):
        z = random_complex(rng, 50)
        for alpha in (0.3, 0.1, 0.01, 0.001):
            spec = ActivationSpec(family="E", q=2, alpha=alpha, k=(0.1, 0.5, 0.0, 0.0), epsilon=0.1)
            gap = np.abs(activate(spec, Tensor(z)).data - z).max()
            if alpha <= 0.001:
                assert gap < 0.01
        # monotone shrink toward identity
        gaps = [
            np.abs(activate(
                ActivationSpec(family="E", q=2, alpha=a, k=(0.1, 0.5, 0.0, 0.0), epsilon=0.1),
                Tensor(z)).data - z).max()
            for a in (0.5, 0.05, 0.005)
        ]
        assert gaps[0] > gaps[1] > gaps[2]


def _switch_safe_points(rng, spec, n):
    """Complex samples away from the v = 0 kink and the Im = 0 fold."""
    out = []
    while len(out) < n:
        z = random_complex(rng, 1)[0]
        v = z.real - spec.k[1] * abs(z.imag) - spec.k[0]
        if abs(v) > 0.1 and abs(z.imag) > 0.05:
            out.append(z)
    return np.array(out)


class TestGradients:
    @pytest.mark.parametrize("name", COMPLEX_ACTIVATIONS)
    def test_autodiff_matches_finite_differences(self, rng, name):
        spec = get_preset(name)
        if spec.family in ("D", "E"):
            z0 = _switch_safe_points(rng, spec, 6)
        else:
            z0 = random_complex(rng, 6, lo=0.3, hi=1.5)
        z = Tensor(z0, requires_grad=True, name="z")
        gradcheck(lambda: (activate(spec, z).abs() ** 2).sum(), [z])

    @pytest.mark.parametrize("name", REAL_ACTIVATIONS + ("ELU",))
    def test_real_activations_match_finite_differences(self, rng, name):
        x0 = rng.uniform(0.2, 2.0, 6) * rng.choice([-1.0, 1.0], 6)
        x = Tensor(x0, requires_grad=True, name="x")
        gradcheck(lambda: (activate_real(name, x) ** 2).sum(), [x])
