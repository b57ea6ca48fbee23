import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from superchars.model import CnnArch, forward, init_model
from superchars.quantize import forward_fixed, load_fixed, power_of_two_exponent, quantize, save_fixed


def model_with(w, b):
    model = init_model(CnnArch("dense2", (1, 1, w.shape[1])), dtype=np.float64)
    model.params[0]["w"] = w
    model.params[0]["b"] = b
    return model


@settings(max_examples=60, deadline=None)
@given(
    arrays(np.float64, (2, 5), elements=st.floats(-100, 100)),
    st.integers(4, 16),
)
def test_dequantization_error_within_half_step(w, bits):
    fpm = quantize(model_with(w, np.zeros(2)), bits)
    scale = fpm.scale(0)
    back = fpm.dequantize().params[0]["w"]
    assert np.all(np.abs(back - w) <= scale / 2 + 1e-12)


@given(st.floats(1e-6, 1e6), st.integers(4, 16))
def test_exponent_is_smallest_that_fits(max_abs, bits):
    qmax = 2 ** (bits - 1) - 1
    e = power_of_two_exponent(max_abs, bits)
    assert max_abs <= qmax * 2.0**e
    assert max_abs > qmax * 2.0 ** (e - 1)


def test_all_zero_layer():
    fpm = quantize(model_with(np.zeros((2, 3)), np.zeros(2)), 8)
    assert fpm.scale(0) == 1.0
    assert not fpm.int_params[0]["w"].any()


def test_bias_shares_the_layer_scale():
    w = np.full((2, 3), 0.01)
    fpm = quantize(model_with(w, np.array([5.0, -5.0])), 8)
    # 5 / 127 needs a step of at least 2**-4.66, so the step is 2**-4
    assert fpm.exponents[0] == -4
    assert fpm.int_params[0]["b"].tolist() == [80, -80]
    assert not fpm.int_params[0]["w"].any()


@pytest.mark.parametrize("bits", [3, 17])
def test_bits_out_of_range(bits):
    with pytest.raises(ValueError):
        quantize(model_with(np.ones((2, 3)), np.zeros(2)), bits)


def test_integers_stay_in_range():
    model = init_model(CnnArch("conv3x4,relu,pool,gap,dense2", (1, 8, 8)), seed=2)
    for bits in (4, 8, 12):
        fpm = quantize(model, bits)
        for p in fpm.int_params:
            for v in p.values():
                assert np.abs(v).max() <= 2 ** (bits - 1) - 1


def test_fixed_file_round_trip(tmp_path):
    model = init_model(CnnArch("conv3x4,relu,pool,gap,dense2", (1, 8, 8)), seed=4)
    model.meta = {"design": "four"}
    fpm = quantize(model, 12, activation_bits=8)
    path = tmp_path / "m.scfx"
    save_fixed(fpm, path)
    back = load_fixed(path)
    assert back.exponents == fpm.exponents
    assert (back.weight_bits, back.activation_bits, back.meta) == (12, 8, {"design": "four"})
    for p, q in zip(fpm.int_params, back.int_params):
        for key in p:
            assert np.array_equal(p[key], q[key])


def test_high_precision_matches_float():
    model = init_model(CnnArch("conv3x4,relu,pool,gap,dense2", (1, 8, 8)), seed=6)
    x = np.random.default_rng(0).random((5, 1, 8, 8)).astype(np.float32)
    assert np.allclose(forward_fixed(quantize(model, 16), x), forward(model, x), atol=1e-3)


def test_agreement_on_trained_fixture(separable_fit):
    model, x = separable_fit["model"], separable_fit["x"]
    ref = forward(model, x).argmax(axis=1)
    agree = {bits: np.mean(forward_fixed(quantize(model, bits), x).argmax(axis=1) == ref) for bits in (8, 16)}
    assert agree[8] >= 0.95
    assert agree[16] >= agree[8]


def test_activation_quantization_still_agrees(separable_fit):
    model, x = separable_fit["model"], separable_fit["x"]
    ref = forward(model, x).argmax(axis=1)
    fixed = forward_fixed(quantize(model, 8, activation_bits=8), x).argmax(axis=1)
    assert np.mean(fixed == ref) >= 0.9
