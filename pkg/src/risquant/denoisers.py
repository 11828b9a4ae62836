"""Scalar MMSE denoisers used by the VAMP loop.

``gm_denoise`` is the posterior of ``x`` under a spike-and-Gaussian-mixture
prior observed through ``r = x + CN(0, nu_r)``.  ``quantized_output_denoise``
is the posterior of ``z ~ CN(p_hat, nu_p)`` given that ``z + CN(0, noise_var)``
landed in the observed quantizer bins.  Both work elementwise on arrays.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

from .quantizer import QuantizedSample, QuantizerSpec, bin_bounds

_LOG_SQRT_2PI = 0.5 * np.log(2 * np.pi)


@dataclass(frozen=True)
class GmComponent:
    weight: float
    mean: complex
    var: float


@dataclass(frozen=True)
class GmPrior:
    """``lambda0 * delta(x) + sum_i w_i * CN(x; mu_i, rho_i)``."""

    lambda0: float
    components: tuple[GmComponent, ...]

    def __post_init__(self):
        total = self.lambda0 + sum(c.weight for c in self.components)
        if not 0.0 <= self.lambda0 <= 1.0:
            raise ValueError("lambda0 must lie in [0, 1]")
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"prior weights sum to {total}, not 1")
        if any(c.var <= 0 or c.weight < 0 for c in self.components):
            raise ValueError("component variances must be > 0 and weights >= 0")

    @classmethod
    def bernoulli_gaussian(cls, sparsity: float, var: float, mean: complex = 0.0) -> "GmPrior":
        """Spike plus one Gaussian; ``sparsity`` is the probability of a nonzero."""
        return cls(1.0 - sparsity, (GmComponent(sparsity, mean, var),))

    @property
    def mean(self) -> complex:
        return complex(sum(c.weight * c.mean for c in self.components))

    @property
    def var(self) -> float:
        second = sum(c.weight * (c.var + abs(c.mean) ** 2) for c in self.components)
        return float(second - abs(self.mean) ** 2)


@dataclass
class PosteriorMoments:
    mean: np.ndarray
    var: np.ndarray


def gm_denoise(r, nu_r, prior: GmPrior) -> PosteriorMoments:
    """Exact posterior mean and variance of x given r under the spike-plus-GM prior."""
    r = np.asarray(r, dtype=complex)
    nu_r = np.asarray(nu_r, dtype=float)
    if np.any(nu_r <= 0):
        raise ValueError("nu_r must be positive")

    logw, means, vars_ = [], [], []
    if prior.lambda0 > 0:
        logw.append(np.log(prior.lambda0) - np.log(np.pi * nu_r) - np.abs(r) ** 2 / nu_r)
        means.append(np.zeros_like(r))
        vars_.append(np.zeros(r.shape))
    for c in prior.components:
        if c.weight == 0:
            continue
        tot = c.var + nu_r
        logw.append(np.log(c.weight) - np.log(np.pi * tot) - np.abs(r - c.mean) ** 2 / tot)
        means.append((c.var * r + nu_r * c.mean) / tot)
        vars_.append(np.broadcast_to(c.var * nu_r / tot, r.shape))

    logw = np.stack(np.broadcast_arrays(*logw))
    resp = np.exp(logw - special.logsumexp(logw, axis=0))
    means = np.stack(means)
    vars_ = np.stack(vars_)
    mean = np.sum(resp * means, axis=0)
    # Spread of the component means about the overall mean, then within-component variance.
    var = np.sum(resp * (vars_ + np.abs(means - mean) ** 2), axis=0)
    return PosteriorMoments(mean, var)


def _log_mass(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``log(Phi(b) - Phi(a))`` for ``a < b`` without cancellation in either tail."""
    # Reflect intervals in the upper tail so both ends sit where Phi is not close to 1.
    flip = a > 0
    lo = np.where(flip, -b, a)
    hi = np.where(flip, -a, b)
    lhi = special.log_ndtr(hi)
    llo = special.log_ndtr(lo)
    with np.errstate(divide="ignore"):
        return lhi + np.log1p(-np.exp(llo - lhi))


def _log_pdf(x: np.ndarray) -> np.ndarray:
    return np.where(np.isfinite(x), -0.5 * np.where(np.isfinite(x), x, 0.0) ** 2 - _LOG_SQRT_2PI, -np.inf)


def interval_moments(p: np.ndarray, var_p: np.ndarray, noise: np.ndarray,
                     lower: np.ndarray, upper: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Moments of real ``z ~ N(p, var_p)`` given ``z + N(0, noise)`` lies in ``[lower, upper]``."""
    s = np.sqrt(var_p + noise)
    a = (lower - p) / s
    b = (upper - p) / s
    logz = _log_mass(a, b)
    ratio_a = np.exp(_log_pdf(a) - logz)
    ratio_b = np.exp(_log_pdf(b) - logz)
    # a*phi(a) with a = -inf contributes zero
    a_term = np.where(np.isfinite(a), np.where(np.isfinite(a), a, 0.0) * ratio_a, 0.0)
    b_term = np.where(np.isfinite(b), np.where(np.isfinite(b), b, 0.0) * ratio_b, 0.0)
    gain = var_p / s
    mean = p + gain * (ratio_a - ratio_b)
    var = var_p - gain ** 2 * ((b_term - a_term) + (ratio_a - ratio_b) ** 2)

    bad = ~np.isfinite(logz) | ~np.isfinite(mean)
    if np.any(bad):
        # Bin mass underflowed: the observation sits many sigma from p.  Asymptotically
        # y is pinned to the nearer bin edge, leaving the Gaussian update on that edge.
        edge = np.where(np.abs(a) < np.abs(b), lower, upper)
        tail_mean = np.where(np.isfinite(edge), p + (var_p / (var_p + noise)) * (edge - p), p)
        mean = np.where(bad, tail_mean, mean)
        var = np.where(bad, var_p * noise / (var_p + noise), var)
    var = np.maximum(var, 0.0)
    return mean, var


def quantized_output_denoise(y: QuantizedSample, p_hat, nu_p, noise_var: float,
                             spec: QuantizerSpec) -> PosteriorMoments:
    """Posterior moments of complex z from quantized observations, per element."""
    p_hat = np.asarray(p_hat, dtype=complex)
    nu_p = np.asarray(nu_p, dtype=float)
    if np.any(nu_p <= 0):
        raise ValueError("nu_p must be positive")
    if noise_var < 0:
        raise ValueError("noise_var must be non-negative")

    if spec.ideal:
        tot = nu_p + noise_var
        mean = (nu_p * y.value + noise_var * p_hat) / tot
        var = np.broadcast_to(nu_p * noise_var / tot, mean.shape).copy()
        return PosteriorMoments(mean, var)

    half_p, half_n = nu_p / 2, noise_var / 2
    lo_re, hi_re = bin_bounds(spec, np.asarray(y.bin_re))
    lo_im, hi_im = bin_bounds(spec, np.asarray(y.bin_im))
    m_re, v_re = interval_moments(p_hat.real, half_p, half_n, lo_re, hi_re)
    m_im, v_im = interval_moments(p_hat.imag, half_p, half_n, lo_im, hi_im)
    return PosteriorMoments(m_re + 1j * m_im, v_re + v_im)
