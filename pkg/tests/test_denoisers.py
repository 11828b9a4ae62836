import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import gm_posterior, interval_posterior
from risquant.denoisers import GmComponent, GmPrior, gm_denoise, quantized_output_denoise
from risquant.quantizer import QuantizerSpec, design_quantizer, quantize


def test_prior_validation():
    with pytest.raises(ValueError):
        GmPrior(0.5, (GmComponent(0.4, 0, 1.0),))
    with pytest.raises(ValueError):
        GmPrior(0.5, (GmComponent(0.5, 0, 0.0),))
    with pytest.raises(ValueError):
        GmPrior(1.5, ())
    p = GmPrior(0.2, (GmComponent(0.5, 1 + 1j, 2.0), GmComponent(0.3, -1, 1.0)))
    assert p.mean == pytest.approx(0.5 * (1 + 1j) - 0.3)
    assert p.var == pytest.approx(0.5 * (2 + 2) + 0.3 * (1 + 1) - abs(p.mean) ** 2)


def test_gm_gaussian_conjugacy():
    r = np.array([0.3 - 1.2j, 2.0 + 0j])
    post = gm_denoise(r, 0.4, GmPrior(0.0, (GmComponent(1.0, 0, 1.5),)))
    np.testing.assert_allclose(post.mean, r * 1.5 / 1.9)
    np.testing.assert_allclose(post.var, 1.5 * 0.4 / 1.9)


def test_gm_pure_spike():
    post = gm_denoise(np.array([1 + 1j, -3j]), 0.2, GmPrior(1.0, ()))
    assert not post.mean.any() and not post.var.any()


def test_gm_example_against_quadrature():
    post = gm_denoise(np.array([0.5 + 0j]), 0.1, GmPrior.bernoulli_gaussian(0.1, 1.0))
    mean, var = gm_posterior(0.5 + 0j, 0.1, 0.9, [(0.1, 0j, 1.0)])
    assert abs(post.mean[0] - mean) < 1e-6
    assert abs(post.var[0] - var) < 1e-6


def test_gm_random_draws_against_quadrature():
    rng = np.random.default_rng(11)
    for _ in range(150):
        k = int(rng.integers(1, 4))
        w = rng.dirichlet(np.ones(k + 1))
        comps = [(float(w[i + 1]), complex(*rng.normal(0, 0.5, 2)), float(rng.uniform(0.1, 2)))
                 for i in range(k)]
        prior = GmPrior(float(w[0]), tuple(GmComponent(*c) for c in comps))
        r = complex(*rng.normal(0, 1, 2))
        nu = float(rng.uniform(0.05, 2))
        post = gm_denoise(np.array([r]), nu, prior)
        mean, var = gm_posterior(r, nu, float(w[0]), comps)
        assert abs(post.mean[0] - mean) < 1e-6
        assert abs(post.var[0] - var) < 1e-6


def test_gm_limits():
    prior = GmPrior(0.7, (GmComponent(0.2, 0.5, 1.0), GmComponent(0.1, -1j, 0.3)))
    r = np.array([0.4 - 0.2j, 2 + 1j, -1.5j])
    tight = gm_denoise(r, 1e-12, prior)
    np.testing.assert_allclose(tight.mean, r, atol=1e-5)
    assert np.all(tight.var < 1e-10)
    loose = gm_denoise(r, 1e12, prior)
    np.testing.assert_allclose(loose.mean, prior.mean, atol=1e-5)
    np.testing.assert_allclose(loose.var, prior.var, rtol=1e-4)


@given(st.complex_numbers(max_magnitude=1e6, allow_nan=False, allow_infinity=False),
       st.floats(1e-6, 1e3), st.floats(0.01, 0.99))
@settings(max_examples=200, deadline=None)
def test_gm_outputs_finite(r, nu, sparsity):
    post = gm_denoise(np.array([r]), nu, GmPrior.bernoulli_gaussian(sparsity, 1.0))
    assert np.isfinite(post.mean).all() and np.isfinite(post.var).all()
    assert post.var[0] >= 0


def test_output_ideal_is_awgn_conjugacy():
    spec = QuantizerSpec(None)
    y = quantize(spec, np.array([1 - 1j, 0.3j]))
    p = np.array([0.2 + 0j, -0.5 + 0.1j])
    post = quantized_output_denoise(y, p, 0.8, 0.3, spec)
    np.testing.assert_allclose(post.mean, (0.8 * y.value + 0.3 * p) / 1.1)
    np.testing.assert_allclose(post.var, 0.8 * 0.3 / 1.1)


def test_output_one_bit_half_normal():
    spec = QuantizerSpec(1, 1.0)
    y = quantize(spec, np.array([0.7 + 0.2j]))
    post = quantized_output_denoise(y, np.array([0j]), 1.0, 0.0, spec)
    assert post.mean[0].real == pytest.approx(math.sqrt(0.5) * math.sqrt(2 / math.pi), rel=1e-12)
    m, _ = interval_posterior(0.0, 0.5, 0.0, 0.0, math.inf)
    assert post.mean[0].real == pytest.approx(m, abs=1e-8)


def test_output_random_draws_against_quadrature():
    rng = np.random.default_rng(12)
    for _ in range(150):
        bits = int(rng.integers(1, 6))
        nu_p = float(rng.uniform(0.1, 2))
        noise = 0.0 if rng.uniform() < 0.3 else float(rng.uniform(0.01, 1))
        p = complex(*rng.normal(0, 0.7, 2))
        spec = design_quantizer(bits, 1 + noise)
        z = p + math.sqrt(nu_p / 2) * complex(*rng.standard_normal(2))
        y = quantize(spec, np.array([z + math.sqrt(noise / 2) * complex(*rng.standard_normal(2))]))
        post = quantized_output_denoise(y, np.array([p]), nu_p, noise, spec)
        edges = np.concatenate([[-np.inf], spec.thresholds, [np.inf]])
        mr, vr = interval_posterior(p.real, nu_p / 2, noise / 2, edges[y.bin_re[0]], edges[y.bin_re[0] + 1])
        mi, vi = interval_posterior(p.imag, nu_p / 2, noise / 2, edges[y.bin_im[0]], edges[y.bin_im[0] + 1])
        assert abs(post.mean[0] - complex(mr, mi)) < 1e-6
        assert abs(post.var[0] - (vr + vi)) < 1e-6


def test_output_mean_inside_inflated_bin():
    rng = np.random.default_rng(3)
    spec = QuantizerSpec(3, 0.5)
    z = rng.normal(0, 1, 500) + 1j * rng.normal(0, 1, 500)
    noise = 0.04
    y = quantize(spec, z + math.sqrt(noise / 2) * (rng.normal(size=500) + 1j * rng.normal(size=500)))
    post = quantized_output_denoise(y, z + 0.3 * rng.normal(size=500), 0.5, noise, spec)
    lo = (y.bin_re - 4) * 0.5
    hi = lo + 0.5
    inner = (y.bin_re > 0) & (y.bin_re < 7)
    slack = 3 * math.sqrt(noise)
    assert np.all((post.mean.real >= lo - slack) & (post.mean.real <= hi + slack) | ~inner)


def test_output_far_tail_is_finite():
    spec = QuantizerSpec(1, 1.0)
    y = quantize(spec, np.array([1 + 1j] * 3))
    p = np.array([-1e6 - 1e6j, -40 - 40j, 1e6 + 0j])
    post = quantized_output_denoise(y, p, 1e-3, 1e-8, spec)
    assert np.isfinite(post.mean).all() and np.isfinite(post.var).all()
    assert np.all(post.var >= 0)


def test_output_errors():
    spec = QuantizerSpec(1, 1.0)
    y = quantize(spec, np.array([1 + 1j]))
    with pytest.raises(ValueError):
        quantized_output_denoise(y, np.array([0j]), 0.0, 0.1, spec)
    with pytest.raises(ValueError):
        quantized_output_denoise(y, np.array([0j]), 1.0, -0.1, spec)


def test_information_never_increases_variance_on_average():
    rng = np.random.default_rng(5)
    spec = design_quantizer(2, 2.0)
    z = rng.normal(size=4000) + 1j * rng.normal(size=4000)
    y = quantize(spec, z)
    post = quantized_output_denoise(y, np.zeros(4000, complex), 2.0, 0.0, spec)
    assert post.var.mean() < 2.0
