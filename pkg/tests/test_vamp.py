import math

import numpy as np
import pytest

from oracles import circulant_slice, dense_operator
from risquant.angular_domain import reconstruct_cascaded
from risquant.config import SystemConfig
from risquant.denoisers import GmComponent, GmPrior
from risquant.harness import make_problems, measure, solve_vamp
from risquant.linear_operator import StructuredOperator, build_training_matrix
from risquant.quantizer import QuantizedSample, QuantizerSpec, design_quantizer, quantize
from risquant.vamp import (SolverAbort, SolverConfig, TRACE_COLUMNS, lmmse_stage, nmse, nmse_db,
                           vamp_estimate)


def _cvec(rng, n):
    return rng.standard_normal(n) + 1j * rng.standard_normal(n)


@pytest.mark.parametrize("dims", [(2, 2, 2, 1, 1, 2, 3), (2, 1, 2, 2, 1, 1, 6), (1, 3, 1, 2, 2, 1, 2)])
@pytest.mark.parametrize("kind", ["random", "zc"])
def test_lmmse_stage_is_dense_ridge(dims, kind):
    rng = np.random.default_rng(sum(dims))
    tr = build_training_matrix(dims[2] * dims[3], dims[6], rng, kind)
    op = StructuredOperator(*dims[:6], tr)
    a = dense_operator(*dims[:6], circulant_slice(tr.generator, op.m))
    r2, p2 = _cvec(rng, op.in_size), _cvec(rng, op.out_size)
    for nu_x2, nu_p2 in [(0.3, 2.0), (5.0, 0.01)]:
        got, alpha2 = lmmse_stage(op, op.singular_values_squared(), r2, nu_x2, p2, nu_p2)
        g = nu_x2 / nu_p2
        h = g * a.conj().T @ a + np.eye(op.in_size)
        want = np.linalg.solve(h, g * a.conj().T @ p2 + r2)
        assert np.linalg.norm(got - want) <= 1e-8 * np.linalg.norm(want)
        # alpha2 is the normalized trace of the posterior covariance
        assert alpha2 == pytest.approx(np.trace(np.linalg.inv(h)).real / op.in_size, rel=1e-8)


def test_gaussian_prior_fixed_point_is_exact_lmmse():
    rng = np.random.default_rng(0)
    tr = build_training_matrix(4, 6, rng)
    op = StructuredOperator(2, 2, 2, 2, 1, 2, tr)
    a = dense_operator(2, 2, 2, 2, 1, 2, circulant_slice(tr.generator, 4))
    rho, sigma2 = 0.7, 0.2
    x = math.sqrt(rho / 2) * _cvec(rng, op.in_size)
    y = a @ x + math.sqrt(sigma2 / 2) * _cvec(rng, op.out_size)
    spec = QuantizerSpec(None)
    res = vamp_estimate(quantize(spec, y), op, spec, GmPrior(0.0, (GmComponent(1.0, 0, rho),)), sigma2,
                        SolverConfig(max_iters=200, damping=1.0, tol=1e-12))
    want = np.linalg.solve(a.conj().T @ a / sigma2 + np.eye(op.in_size) / rho, a.conj().T @ y / sigma2)
    assert np.linalg.norm(res.x_hat - want) <= 1e-6 * np.linalg.norm(want)


def _small_problem(seed=0, **kw):
    base = dict(n1=2, n2=2, m1=2, m2=2, q1=1, q2=1, p=16, l=1, j=1, on_grid=True, seed=seed)
    base.update(kw)
    cfg = SystemConfig(**base)
    return cfg, make_problems(cfg, 0)[0]


def test_on_grid_single_path_high_snr():
    for seed in range(3):
        cfg, pb = _small_problem(seed)
        res = solve_vamp(pb, measure(pb, 30.0, math.inf), cfg, with_truth=True)
        assert min(r.nmse_lambda for r in res.trace[:30]) < -35


def test_trace_satisfies_extrinsic_identities():
    cfg, pb = _small_problem(1, n1=4, m1=4, l=2, j=2, q2=2, p=16)
    res = solve_vamp(pb, measure(pb, 5.0, 2), cfg, with_truth=True)
    ratio = pb.op.in_size / pb.op.out_size
    for rec in res.trace:
        assert 0 < rec.alpha1 < 1 and 0 < rec.alpha2 < 1 and 0 < rec.beta1 < 1 and 0 < rec.beta2 < 1
        assert rec.nu_x2 == pytest.approx(rec.nu_x1 * rec.alpha1 / (1 - rec.alpha1), rel=1e-12)
        assert rec.nu_p2 == pytest.approx(rec.nu_p1 * rec.beta1 / (1 - rec.beta1), rel=1e-12)
        assert rec.beta2 == pytest.approx((1 - rec.alpha2) * ratio, rel=1e-12)
    assert TRACE_COLUMNS == ("iter", "nu_x1", "nu_x2", "nu_p1", "nu_p2", "alpha1", "alpha2",
                             "beta1", "beta2", "nmse_lambda")
    assert len(res.trace[0].row()) == len(TRACE_COLUMNS)


def test_deterministic_trace():
    cfg, pb = _small_problem(2)
    meas = measure(pb, 10.0, 3)
    a = solve_vamp(pb, meas, cfg, with_truth=True)
    b = solve_vamp(pb, meas, cfg, with_truth=True)
    assert [r.row() for r in a.trace] == [r.row() for r in b.trace]
    np.testing.assert_array_equal(a.x_hat, b.x_hat)


@pytest.mark.parametrize("bits", [1, 3, math.inf])
def test_uninformative_measurements_give_zero_db(bits):
    cfg, pb = _small_problem(3)
    meas = measure(pb, -80.0, bits)
    res = solve_vamp(pb, meas, cfg)
    assert abs(nmse(pb.g, reconstruct_cascaded(res.lambda_hat, pb.dicts))) < 0.05
    assert np.abs(res.x_hat).max() < 1e-2 * np.abs(pb.x_true).max()


def test_input_validation_and_abort():
    cfg, pb = _small_problem(4)
    meas = measure(pb, 10.0, math.inf)
    prior = GmPrior.bernoulli_gaussian(0.1, 1.0)
    with pytest.raises(ValueError):
        vamp_estimate(meas.y, pb.op, meas.spec, prior, -1.0)
    short = QuantizedSample(meas.y.value[:-1], None, None)
    with pytest.raises(ValueError):
        vamp_estimate(short, pb.op, meas.spec, prior, 0.1)
    bad = QuantizedSample(np.full_like(meas.y.value, np.nan), None, None)
    with pytest.raises(SolverAbort) as err:
        vamp_estimate(bad, pb.op, meas.spec, prior, 0.1)
    assert err.value.step == "output denoiser" and err.value.iteration == 1


def test_solver_config_validation():
    for kw in (dict(max_iters=0), dict(damping=0.0), dict(damping=1.5), dict(eps=0.0), dict(tol=-1)):
        with pytest.raises(ValueError):
            SolverConfig(**kw)


def test_nmse_examples():
    rng = np.random.default_rng(0)
    g = _cvec(rng, 20).reshape(4, 5)
    assert nmse(g, g) == -300.0
    assert nmse(g, np.zeros_like(g)) == pytest.approx(0.0)
    e = _cvec(rng, 20).reshape(4, 5)
    e *= 0.1 * np.linalg.norm(g) / np.linalg.norm(e)
    assert nmse(g, g + e) == pytest.approx(-20.0)
    with pytest.raises(ValueError):
        nmse_db(np.zeros(3), np.ones(3))
    with pytest.raises(ValueError):
        nmse(g, g[:3])
