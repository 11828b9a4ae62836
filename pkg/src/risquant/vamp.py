"""VAMP estimation of the compressed angular channel from quantized measurements.

Each iteration runs the two separable MMSE denoisers (spike-plus-GM on ``x``,
quantized-output on ``z = A x``), passes their extrinsic messages to a joint
LMMSE stage that is solved exactly through the eigen-structure
``A^H A = V_A diag(s2) V_A^H``, and returns extrinsic messages to the
denoisers.  All products with ``A``, ``A^H``, ``V_A`` and ``V_A^H`` go through the
FFT fast paths of :class:`~risquant.linear_operator.StructuredOperator`.
"""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from .angular_domain import CompressedAngularMatrix
from .denoisers import GmPrior, gm_denoise, quantized_output_denoise
from .linear_operator import StructuredOperator
from .quantizer import QuantizedSample, QuantizerSpec

log = logging.getLogger(__name__)

NMSE_FLOOR_DB = -300.0
TRACE_COLUMNS = ("iter", "nu_x1", "nu_x2", "nu_p1", "nu_p2",
                 "alpha1", "alpha2", "beta1", "beta2", "nmse_lambda")


class SolverAbort(RuntimeError):
    """Raised when the iteration produces non-finite state."""

    def __init__(self, step: str, iteration: int):
        super().__init__(f"non-finite values at step '{step}' in iteration {iteration}")
        self.step = step
        self.iteration = iteration


@dataclass
class SolverConfig:
    max_iters: int = 50
    damping: float = 0.9
    eps: float = 1e-11
    tol: float = 1e-6

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not 0.0 < self.damping <= 1.0:
            raise ValueError("damping must lie in (0, 1]")
        if not 0.0 < self.eps < 0.5:
            raise ValueError("eps must lie in (0, 0.5)")
        if self.tol < 0:
            raise ValueError("tol must be non-negative")


@dataclass
class IterationRecord:
    iter: int
    nu_x1: float
    nu_x2: float
    nu_p1: float
    nu_p2: float
    alpha1: float
    alpha2: float
    beta1: float
    beta2: float
    nmse_lambda: float = float("nan")

    def row(self) -> tuple:
        return tuple(asdict(self)[c] for c in TRACE_COLUMNS)


@dataclass
class VampResult:
    lambda_hat: CompressedAngularMatrix
    x_hat: np.ndarray
    z_hat: np.ndarray
    trace: list[IterationRecord] = field(default_factory=list)
    converged: bool = False
    stalled: bool = False

    @property
    def iterations(self) -> int:
        return len(self.trace)


def nmse_db(truth: np.ndarray, estimate: np.ndarray) -> float:
    truth = np.asarray(truth)
    denom = np.vdot(truth, truth).real
    if denom == 0:
        raise ValueError("NMSE undefined for an all-zero reference")
    err = np.asarray(estimate) - truth
    ratio = np.vdot(err, err).real / denom
    if ratio <= 0:
        return NMSE_FLOOR_DB
    return max(10 * np.log10(ratio), NMSE_FLOOR_DB)


def nmse(g_true, g_hat) -> float:
    """``10 log10(||G - G_hat||_F^2 / ||G||_F^2)``, floored at -300 dB."""
    a = getattr(g_true, "g", g_true)
    b = getattr(g_hat, "g", g_hat)
    if np.shape(a) != np.shape(b):
        raise ValueError(f"shape mismatch {np.shape(a)} vs {np.shape(b)}")
    return nmse_db(a, b)


def _finite(step: str, it: int, *arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise SolverAbort(step, it)


def lmmse_stage(op: StructuredOperator, s2: np.ndarray, r2: np.ndarray, nu_x2: float,
                p2: np.ndarray, nu_p2: float) -> tuple[np.ndarray, float]:
    """Posterior mean of x under ``CN(r2, nu_x2)`` prior and ``A x ~ CN(p2, nu_p2)``.

    Returns ``(x_hat2, alpha2)`` where ``alpha2`` is the mean posterior variance
    divided by ``nu_x2``.
    """
    gamma = nu_x2 / nu_p2
    filt = 1.0 / (gamma * s2 + 1.0)
    rhs = gamma * op.adjoint(p2) + r2
    x_hat = op.va_apply(filt * op.va_adjoint_apply(rhs))
    return x_hat, float(np.mean(filt))


def _clamp(v: float, eps: float) -> float:
    return min(max(v, eps), 1.0 - eps)


def vamp_estimate(y: QuantizedSample, op: StructuredOperator, spec: QuantizerSpec,
                  prior: GmPrior, noise_var: float, cfg: SolverConfig | None = None,
                  x_true: np.ndarray | None = None) -> VampResult:
    """Estimate ``x = vec(Lambda)`` from quantized ``y = Q(A x + w)``.

    ``x_true`` is only used to fill the ``nmse_lambda`` column of the trace.
    """
    cfg = cfg or SolverConfig()
    if noise_var < 0:
        raise ValueError("noise_var must be non-negative")
    if np.shape(y.value) != (op.out_size,):
        raise ValueError(f"expected {op.out_size} measurements, got {np.shape(y.value)}")

    eps = cfg.eps
    damp = cfg.damping
    s2 = op.singular_values_squared()
    n_in, n_out = op.in_size, op.out_size

    # Initialization from the prior: r1 carries no information yet.
    r1 = np.full(n_in, prior.mean, dtype=complex)
    nu_x1 = max(prior.var, eps)
    p1 = op.forward(r1)
    nu_p1 = nu_x1 * float(np.sum(s2)) / n_out
    var_floor = eps * nu_x1

    trace: list[IterationRecord] = []
    x_hat1 = r1.copy()
    z_hat = p1
    converged = False
    at_clamp = 0
    stalled = False

    for it in range(1, cfg.max_iters + 1):
        x_prev = x_hat1

        # Input denoiser and its extrinsic message.
        post_x = gm_denoise(r1, nu_x1, prior)
        x_hat1 = post_x.mean
        alpha1_raw = float(np.mean(post_x.var)) / nu_x1
        alpha1 = _clamp(alpha1_raw, eps)
        r2 = (x_hat1 - alpha1 * r1) / (1 - alpha1)
        nu_x2 = max(nu_x1 * alpha1 / (1 - alpha1), var_floor)
        _finite("input denoiser", it, x_hat1, r2)

        # Output denoiser and its extrinsic message.
        post_z = quantized_output_denoise(y, p1, nu_p1, noise_var, spec)
        beta1_raw = float(np.mean(post_z.var)) / nu_p1
        beta1 = _clamp(beta1_raw, eps)
        p2 = (post_z.mean - beta1 * p1) / (1 - beta1)
        nu_p2 = max(nu_p1 * beta1 / (1 - beta1), var_floor)
        _finite("output denoiser", it, post_z.mean, p2)

        # Joint LMMSE stage.
        x_hat2, alpha2_raw = lmmse_stage(op, s2, r2, nu_x2, p2, nu_p2)
        alpha2 = _clamp(alpha2_raw, eps)
        z_hat = op.forward(x_hat2)
        beta2 = _clamp((1 - alpha2) * n_in / n_out, eps)
        _finite("LMMSE", it, x_hat2, z_hat)

        r1_new = (x_hat2 - alpha2 * r2) / (1 - alpha2)
        nu_x1_new = max(nu_x2 * alpha2 / (1 - alpha2), var_floor)
        p1_new = (z_hat - beta2 * p2) / (1 - beta2)
        nu_p1_new = max(nu_p2 * beta2 / (1 - beta2), var_floor)
        _finite("extrinsic update", it, r1_new, p1_new)

        rec = IterationRecord(it, nu_x1, nu_x2, nu_p1, nu_p2, alpha1, alpha2, beta1, beta2)
        if x_true is not None:
            rec.nmse_lambda = nmse_db(x_true, x_hat1)
        trace.append(rec)

        clamped = any(v != raw for v, raw in ((alpha1, alpha1_raw), (beta1, beta1_raw),
                                              (alpha2, alpha2_raw)))
        at_clamp = at_clamp + 1 if clamped else 0
        if at_clamp >= 5 and not stalled:
            stalled = True
            log.warning("divergence scalar pinned at its clamp for 5 iterations (iter %d)", it)

        r1 = damp * r1_new + (1 - damp) * r1
        nu_x1 = damp * nu_x1_new + (1 - damp) * nu_x1
        p1 = damp * p1_new + (1 - damp) * p1
        nu_p1 = damp * nu_p1_new + (1 - damp) * nu_p1

        norm = np.linalg.norm(x_hat1)
        if norm > 0 and np.linalg.norm(x_hat1 - x_prev) <= cfg.tol * norm:
            converged = True
            break

    lam = x_hat1.reshape(op.m, op.q * op.n).T
    return VampResult(CompressedAngularMatrix(lam), x_hat1, z_hat, trace, converged, stalled)
