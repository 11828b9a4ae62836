"""Slow reference computations used as test oracles (independent of the package code)."""
import cmath
import math

import numba
import numpy as np
from scipy import LowLevelCallable, integrate


# Integrands are compiled with numba and handed to QUADPACK as low-level
# callables; pure-Python callbacks made the 10^4-draw comparisons several
# times slower.  Signature: xx = (t, kind, a, b, c, d, e, scale, power, shift),
# returning (t - shift)^power * weight_kind(t) / scale.
GAUSS_PRODUCT, GAUSS, GAUSS_IN_BIN = 0.0, 1.0, 2.0
_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)


@numba.njit(cache=True)
def _pdf(t, mu, sd):
    u = (t - mu) / sd
    return math.exp(-0.5 * u * u) / (sd * _SQRT2PI)


@numba.njit(cache=True)
def _cdf(u):
    return 0.5 * math.erfc(-u / _SQRT2)


@numba.njit(cache=True)
def _bin_mass(t, lo, hi, sn):
    # P(lo <= t + N(0, sn^2) < hi); upper-tail form when the bin lies above t.
    u_lo, u_hi = (lo - t) / sn, (hi - t) / sn
    if u_lo > 0:
        return _cdf(-u_lo) - _cdf(-u_hi)
    return _cdf(u_hi) - _cdf(u_lo)


@numba.njit(cache=True)
def _weight(kind, t, a, b, c, d, e):
    if kind == 0.0:  # N(t; a, b^2) N(c; t, d^2)
        return _pdf(t, a, b) * _pdf(c, t, d)
    if kind == 1.0:  # N(t; a, b^2)
        return _pdf(t, a, b)
    return _pdf(t, a, b) * _bin_mass(t, c, d, e)  # N(t; a, b^2) P(t + N(0, e^2) in [c, d))


@numba.njit(cache=True)
def _weights_on(grid, kind, a, b, c, d, e):
    out = np.empty(grid.size)
    for i in range(grid.size):
        out[i] = _weight(kind, grid[i], a, b, c, d, e)
    return out


@numba.cfunc(numba.types.float64(numba.types.intc, numba.types.CPointer(numba.types.float64)))
def _integrand(n, xx):
    t = xx[0]
    w = _weight(xx[1], t, xx[2], xx[3], xx[4], xx[5], xx[6]) / xx[7]
    power = xx[8]
    if power == 0.0:
        return w
    return (t - xx[9]) ** power * w


_INTEGRAND = LowLevelCallable(_integrand.ctypes)


def quad_moments(kind, params, lo, hi):
    """Mass, mean and variance of an unnormalized 1-D density on [lo, hi] by adaptive quadrature.

    The integrand is rescaled by its largest value on a coarse grid, and that
    location is handed to the adaptive rule as a breakpoint, so tiny total
    masses keep full relative accuracy and narrow peaks are not stepped over.
    """
    params = tuple(float(v) for v in params) + (0.0,) * (5 - len(params))
    grid = np.linspace(lo, hi, 257)
    vals = _weights_on(grid, kind, *params)
    k = int(np.argmax(vals))
    scale = float(vals[k])
    if not scale > 0:
        raise ValueError("integrand vanishes on the whole window")
    opts = dict(epsrel=1e-11, limit=200)
    if lo < grid[k] < hi:
        opts["points"] = [grid[k]]

    def moment(power, shift, epsabs):
        return integrate.quad(_INTEGRAND, lo, hi, args=(kind, *params, scale, power, shift),
                              **opts, epsabs=epsabs)[0]

    z = moment(0.0, 0.0, 1e-14)
    # The first moment about the peak is near zero, so bound its error absolutely
    # relative to the mass (far below the 1e-5 comparison tolerance).
    tol = 1e-12 * z * (hi - lo)
    m1 = grid[k] + moment(1.0, grid[k], tol) / z
    m2 = moment(2.0, m1, tol * (hi - lo)) / z
    return z * scale, m1, m2


def gm_posterior(r, nu, lambda0, comps):
    """Posterior mean/variance of x given r = x + CN(0, nu) under a spike plus CN mixture.

    ``comps`` is a list of (weight, mean, var).  Each circular component factorizes
    over the real and imaginary axes, so every component is integrated as a
    product of two 1-D quadratures; the spike contributes a point mass at zero.
    """
    mass = [lambda0 * math.exp(-abs(r) ** 2 / nu) / (math.pi * nu)]
    means = [0j]
    seconds = [0.0]
    sd_n = math.sqrt(nu / 2)
    for w, mu, var in comps:
        sd_c = math.sqrt(var / 2)
        parts = []
        for m, obs in ((mu.real, r.real), (mu.imag, r.imag)):
            span = 12 * max(sd_c, sd_n)
            parts.append(quad_moments(GAUSS_PRODUCT, (m, sd_c, obs, sd_n),
                                      min(m, obs) - span, max(m, obs) + span))
        (zr, mr, vr), (zi, mi, vi) = parts
        mass.append(w * zr * zi)
        means.append(complex(mr, mi))
        seconds.append(vr + vi + mr ** 2 + mi ** 2)
    mass = np.array(mass) / np.sum(mass)
    mean = complex(np.sum(mass * np.array(means)))
    return mean, float(np.sum(mass * np.array(seconds)) - abs(mean) ** 2)


def interval_posterior(p, var, noise, lo, hi):
    """Mean/variance of real z ~ N(p, var) given z + N(0, noise) in [lo, hi)."""
    sd = math.sqrt(var)
    if noise == 0:
        a, b = max(lo, p - 14 * sd), min(hi, p + 14 * sd)
        _, m, v = quad_moments(GAUSS, (p, sd), a, b)
    else:
        sn = math.sqrt(noise)
        # Only the overlap of the prior bulk with the (noise-widened) bin carries mass.
        a, b = max(p - 14 * sd, lo - 12 * sn), min(p + 14 * sd, hi + 12 * sn)
        _, m, v = quad_moments(GAUSS_IN_BIN, (p, sd, lo, hi, sn), a, b)
    return m, v


def dft(n):
    return np.array([[cmath.exp(-2j * math.pi * a * b / n) for b in range(n)] for a in range(n)])


def dense_operator(n1, n2, m1, m2, q1, q2, e):
    """A = (F_M^H E)^T kron (F_Q^* kron F_N) from loop-built DFTs (S = I)."""
    fm = np.kron(dft(m1), dft(m2))
    fq = np.kron(dft(q1), dft(q2))
    fn = np.kron(dft(n1), dft(n2))
    return np.kron((fm.conj().T @ e).T, np.kron(fq.conj(), fn))


def circulant_slice(generator, m):
    """E (m x P) with E^T = first m columns of the P x P circulant whose first column is generator."""
    p = len(generator)
    c = np.array([[generator[(i - k) % p] for k in range(p)] for i in range(p)])
    return c[:, :m].T
