"""Quick oracle-equivalence checks run by ``estimate selftest``.

Each check compares a fast path against an independent slow computation
(dense matrices, literal row comparison, numerical quadrature) on small
problems.  The full-size versions live in the test suite.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate

from .angular_domain import build_compression_map, compress, dft_matrix
from .channel_model import khatri_rao
from .denoisers import GmComponent, GmPrior, gm_denoise, quantized_output_denoise
from .linear_operator import StructuredOperator, build_training_matrix
from .quantizer import design_quantizer, quantize
from .vamp import lmmse_stage

OPERATOR_DIMS = [
    # n1, n2, m1, m2, q1, q2, p
    (2, 1, 2, 1, 1, 1, 3),
    (2, 2, 2, 1, 1, 2, 4),
    (3, 1, 2, 2, 1, 1, 5),
    (1, 3, 1, 2, 2, 1, 2),
    (2, 2, 2, 2, 1, 1, 4),
    (2, 3, 3, 1, 1, 2, 7),
]


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def _rng(k: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(20240601, spawn_key=(k,)))


def _cvec(rng, n):
    return rng.standard_normal(n) + 1j * rng.standard_normal(n)


def _rel(a, b) -> float:
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300))


def check_operator(vectors: int = 20) -> CheckResult:
    rng = _rng(1)
    worst = 0.0
    for n1, n2, m1, m2, q1, q2, p in OPERATOR_DIMS:
        op = StructuredOperator(n1, n2, m1, m2, q1, q2, build_training_matrix(m1 * m2, p, rng))
        a = op.dense()
        for _ in range(vectors):
            x = _cvec(rng, op.in_size)
            y = _cvec(rng, op.out_size)
            worst = max(worst, _rel(op.forward(x), a @ x), _rel(op.adjoint(y), a.conj().T @ y))
        va = op.dense_va()
        gram = va @ np.diag(op.singular_values_squared()) @ va.conj().T
        worst = max(worst, _rel(gram, a.conj().T @ a))
    return CheckResult("operator vs dense", bool(worst < 1e-10), f"max rel err {worst:.2e}")


def check_compression() -> CheckResult:
    rng = _rng(2)
    worst = 0.0
    for m1, m2 in [(2, 1), (2, 2), (4, 2), (4, 4)]:
        m = m1 * m2
        cmap = build_compression_map(m1, m2, validate=True)
        if len(cmap.sets) != m:
            return CheckResult("compression map", False, f"{len(cmap.sets)} classes for M={m}")
        f = np.kron(dft_matrix(m1), dft_matrix(m2))
        kr = khatri_rao(f.T, f.conj().T)
        e = np.exp(2j * np.pi * rng.uniform(size=(m, 2 * m)))
        x = np.zeros((6, m * m), dtype=complex)
        cols = rng.choice(m * m, size=min(5, m * m), replace=False)
        x[:, cols] = _cvec(rng, 6 * cols.size).reshape(6, -1)
        full = x @ kr @ e
        small = compress(x, cmap).lam @ f.conj().T @ e
        worst = max(worst, _rel(small, full))
    return CheckResult("compression losslessness", bool(worst < 1e-10), f"max rel err {worst:.2e}")


def _pdf(t: float, mu: float, sd: float) -> float:
    u = (t - mu) / sd
    return math.exp(-0.5 * u * u) / (sd * math.sqrt(2 * math.pi))


def _cdf(u: float) -> float:
    return 0.5 * math.erfc(-u / math.sqrt(2))


def _bin_mass(t: float, lo: float, hi: float, sn: float) -> float:
    u_lo, u_hi = (lo - t) / sn, (hi - t) / sn
    if u_lo > 0:  # upper tail: avoid 1 - 1 cancellation
        return _cdf(-u_lo) - _cdf(-u_hi)
    return _cdf(u_hi) - _cdf(u_lo)


def _quad_moments(weight: Callable[[float], float], lo: float, hi: float) -> tuple[float, float, float]:
    # Rescale by the grid maximum (tiny masses would otherwise sit below epsabs)
    # and give the peak to the adaptive rule as a breakpoint.
    grid = np.linspace(lo, hi, 129)
    vals = [weight(t) for t in grid]
    k = int(np.argmax(vals))
    scale, peak = vals[k], float(grid[k])
    f = lambda t: weight(t) / scale
    opts = dict(epsrel=1e-11, limit=200, points=[peak] if lo < peak < hi else None)
    z = integrate.quad(f, lo, hi, epsabs=1e-14, **opts)[0]
    tol = 1e-12 * z * (hi - lo)
    m1 = peak + integrate.quad(lambda t: (t - peak) * f(t), lo, hi, epsabs=tol, **opts)[0] / z
    m2 = integrate.quad(lambda t: (t - m1) ** 2 * f(t), lo, hi, epsabs=tol * (hi - lo), **opts)[0] / z
    return z * scale, m1, m2


def check_gm_denoiser(draws: int = 200) -> CheckResult:
    rng = _rng(3)
    worst = 0.0
    for _ in range(draws):
        k = int(rng.integers(1, 4))
        w = rng.dirichlet(np.ones(k + 1))
        comps = tuple(GmComponent(float(w[i + 1]), complex(*rng.normal(0, 0.5, 2)),
                                  float(rng.uniform(0.1, 2.0))) for i in range(k))
        prior = GmPrior(float(w[0]), comps)
        r = complex(*rng.normal(0, 1.0, 2))
        nu = float(rng.uniform(0.05, 2.0))
        # Each Gaussian component factorizes over Re/Im; the spike is a point mass at 0.
        mass = [w[0] * math.exp(-abs(r) ** 2 / nu) / (math.pi * nu)]
        means = [0j]
        seconds = [0.0]
        for c in comps:
            parts = []
            for mu, obs in ((c.mean.real, r.real), (c.mean.imag, r.imag)):
                sd_c, sd_n = math.sqrt(c.var / 2), math.sqrt(nu / 2)
                f = lambda t, mu=mu, obs=obs, sd_c=sd_c, sd_n=sd_n: (
                    _pdf(t, mu, sd_c) * _pdf(obs, t, sd_n))
                span = 12 * max(sd_c, sd_n)
                parts.append(_quad_moments(f, min(mu, obs) - span, max(mu, obs) + span))
            (zr, mr, vr), (zi, mi, vi) = parts
            mass.append(c.weight * zr * zi)
            means.append(complex(mr, mi))
            seconds.append(vr + vi + mr ** 2 + mi ** 2)
        mass = np.array(mass) / np.sum(mass)
        mean = complex(np.sum(mass * np.array(means)))
        var = float(np.sum(mass * np.array(seconds)) - abs(mean) ** 2)
        got = gm_denoise(np.array([r]), nu, prior)
        worst = max(worst, abs(got.mean[0] - mean), abs(got.var[0] - var))
    return CheckResult("GM denoiser vs quadrature", bool(worst < 1e-5), f"max abs err {worst:.2e}")


def check_output_denoiser(draws: int = 200) -> CheckResult:
    rng = _rng(4)
    worst = 0.0
    for _ in range(draws):
        bits = int(rng.integers(1, 5))
        nu_p = float(rng.uniform(0.1, 2.0))
        noise = 0.0 if rng.uniform() < 0.3 else float(rng.uniform(0.01, 1.0))
        p = complex(*rng.normal(0, 0.7, 2))
        spec = design_quantizer(bits, 1.0 + noise)
        z = p + math.sqrt(nu_p / 2) * complex(*rng.standard_normal(2))
        y = quantize(spec, np.array([z + math.sqrt(noise / 2) * complex(*rng.standard_normal(2))]))
        got = quantized_output_denoise(y, np.array([p]), nu_p, noise, spec)
        edges = np.concatenate([[-np.inf], spec.thresholds, [np.inf]])
        est = []
        for centre, b in ((p.real, int(y.bin_re[0])), (p.imag, int(y.bin_im[0]))):
            lo, hi = edges[b], edges[b + 1]
            sd = math.sqrt(nu_p / 2)
            if noise == 0:
                f = lambda t, c=centre, sd=sd: _pdf(t, c, sd)
                a, bnd = max(lo, centre - 14 * sd), min(hi, centre + 14 * sd)
            else:
                sn = math.sqrt(noise / 2)
                f = lambda t, c=centre, sd=sd, lo=lo, hi=hi, sn=sn: (
                    _pdf(t, c, sd) * _bin_mass(t, lo, hi, sn))
                a, bnd = max(centre - 14 * sd, lo - 12 * sn), min(centre + 14 * sd, hi + 12 * sn)
            est.append(_quad_moments(f, a, bnd))
        (_, mr, vr), (_, mi, vi) = est
        worst = max(worst, abs(got.mean[0] - complex(mr, mi)), abs(got.var[0] - (vr + vi)))
    return CheckResult("output denoiser vs quadrature", bool(worst < 1e-5), f"max abs err {worst:.2e}")


def check_ridge() -> CheckResult:
    rng = _rng(5)
    op = StructuredOperator(2, 2, 2, 2, 1, 2, build_training_matrix(4, 6, rng))
    a = op.dense()
    r2, p2 = _cvec(rng, op.in_size), _cvec(rng, op.out_size)
    nu_x2, nu_p2 = 0.7, 0.3
    got, _ = lmmse_stage(op, op.singular_values_squared(), r2, nu_x2, p2, nu_p2)
    g = nu_x2 / nu_p2
    want = np.linalg.solve(g * a.conj().T @ a + np.eye(op.in_size), g * a.conj().T @ p2 + r2)
    err = _rel(got, want)
    return CheckResult("LMMSE stage vs dense ridge", bool(err < 1e-8), f"rel err {err:.2e}")


CHECKS = (check_operator, check_compression, check_gm_denoiser, check_output_denoiser, check_ridge)


def run_all() -> list[CheckResult]:
    return [check() for check in CHECKS]
