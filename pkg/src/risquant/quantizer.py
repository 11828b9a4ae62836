"""B-bit uniform mid-rise complex quantizer with automatic gain control.

Real and imaginary parts are quantized independently with the same step.
Thresholds are ``h_b = (-2^(B-1) + b) * step`` for ``b = 1 .. 2^B - 1``; an
input in bin ``[h_b, h_(b+1))`` is reconstructed at the bin midpoint, and the
two saturation bins at the outermost midpoints.  ``bits=None`` (or ``inf``)
denotes an ideal, infinite-resolution ADC.

Run ``python -m risquant.quantizer`` to regenerate :data:`OPTIMAL_STEP`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize, special

MAX_BITS = 8

# MSE-optimal uniform mid-rise step for a unit-variance real Gaussian input,
# produced by ``_optimal_step`` below.
OPTIMAL_STEP = {
    1: 1.5957691216057308,
    2: 0.9956866812224952,
    3: 0.5860194319915628,
    4: 0.33520061219356184,
    5: 0.18813879499739916,
    6: 0.1040630098110029,
    7: 0.056867672995133955,
    8: 0.030762381237337825,
}


def _gauss_mse(step: float, bits: int) -> float:
    # Closed form from Gaussian partial moments: for x ~ N(0,1) on [lo, hi),
    # E[(x - c)^2; bin] = (1 + c^2)(Phi(hi)-Phi(lo)) + (lo - 2c) phi(lo) - (hi - 2c) phi(hi).
    levels = 2 ** bits
    edges = (np.arange(1, levels) - levels / 2) * step
    lo = np.concatenate([[-np.inf], edges])
    hi = np.concatenate([edges, [np.inf]])
    c = (np.arange(levels) - levels / 2 + 0.5) * step
    cdf = special.ndtr(hi) - special.ndtr(lo)
    lo_f = np.where(np.isfinite(lo), lo, 0.0)
    hi_f = np.where(np.isfinite(hi), hi, 0.0)
    term_lo = np.where(np.isfinite(lo), (lo_f - 2 * c) * np.exp(-0.5 * lo_f ** 2), 0.0)
    term_hi = np.where(np.isfinite(hi), (hi_f - 2 * c) * np.exp(-0.5 * hi_f ** 2), 0.0)
    term_lo /= math.sqrt(2 * math.pi)
    term_hi /= math.sqrt(2 * math.pi)
    return float(np.sum((1 + c ** 2) * cdf + term_lo - term_hi))


def _optimal_step(bits: int) -> float:
    if bits == 1:
        # sign quantizer: the optimal level is E|x| = sqrt(2/pi)
        return 2 * math.sqrt(2 / math.pi)
    res = optimize.minimize_scalar(_gauss_mse, bounds=(1e-3, 3.0), args=(bits,),
                                   method="bounded", options={"xatol": 1e-13})
    return float(res.x)


def _check_bits(bits):
    if bits is None or (isinstance(bits, float) and math.isinf(bits)):
        return None
    if int(bits) != bits or not 1 <= int(bits) <= MAX_BITS:
        raise ValueError(f"bits must be in 1..{MAX_BITS} or infinite, got {bits!r}")
    return int(bits)


@dataclass(frozen=True)
class QuantizerSpec:
    bits: int | None
    step: float = math.inf

    @property
    def ideal(self) -> bool:
        return self.bits is None

    @property
    def levels(self) -> int:
        return 0 if self.bits is None else 2 ** self.bits

    @property
    def step_re(self) -> float:
        return self.step

    @property
    def step_im(self) -> float:
        return self.step

    @property
    def thresholds(self) -> np.ndarray:
        if self.ideal:
            return np.empty(0)
        return (np.arange(1, self.levels) - self.levels / 2) * self.step


@dataclass
class QuantizedSample:
    """Quantizer output: reconstruction levels plus bin indices (vectorized)."""

    value: np.ndarray
    bin_re: np.ndarray | None
    bin_im: np.ndarray | None


def design_quantizer(bits, input_power: float) -> QuantizerSpec:
    """Step ``sqrt(E|xi|^2 / 2) * Delta(B)`` for a circularly-symmetric input."""
    bits = _check_bits(bits)
    if bits is None:
        return QuantizerSpec(None)
    if not input_power > 0:
        raise ValueError("input_power must be positive")
    return QuantizerSpec(bits, math.sqrt(input_power / 2) * OPTIMAL_STEP[bits])


def _bins(spec: QuantizerSpec, v: np.ndarray) -> np.ndarray:
    half = spec.levels // 2
    return np.clip(np.floor(v / spec.step) + half, 0, spec.levels - 1).astype(np.int64)


def _levels(spec: QuantizerSpec, b: np.ndarray) -> np.ndarray:
    return (b - spec.levels / 2 + 0.5) * spec.step


def quantize(spec: QuantizerSpec, z) -> QuantizedSample:
    z = np.asarray(z, dtype=complex)
    if spec.ideal:
        return QuantizedSample(z.copy(), None, None)
    br, bi = _bins(spec, z.real), _bins(spec, z.imag)
    return QuantizedSample(_levels(spec, br) + 1j * _levels(spec, bi), br, bi)


def bin_bounds(spec: QuantizerSpec, bin_index):
    """Lower and upper thresholds of a bin; the outer bins extend to -inf / +inf."""
    if spec.ideal:
        raise ValueError("an ideal quantizer has no bins")
    b = np.asarray(bin_index)
    if np.any((b < 0) | (b >= spec.levels)):
        raise IndexError(f"bin index out of range [0, {spec.levels})")
    lower = np.where(b == 0, -np.inf, (b - spec.levels / 2) * spec.step)
    upper = np.where(b == spec.levels - 1, np.inf, (b + 1 - spec.levels / 2) * spec.step)
    if np.ndim(bin_index) == 0:
        return float(lower), float(upper)
    return lower, upper


if __name__ == "__main__":
    for b in range(1, MAX_BITS + 1):
        print(f"    {b}: {_optimal_step(b)!r},")
