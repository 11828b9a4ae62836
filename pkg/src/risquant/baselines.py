"""Least-squares baseline that treats quantized outputs as linear measurements."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .angular_domain import CompressedAngularMatrix
from .linear_operator import StructuredOperator


@dataclass
class LsSolution:
    lambda_hat: CompressedAngularMatrix
    x_hat: np.ndarray
    residual_norm: float


def ls_estimate(y, op: StructuredOperator, ridge: float = 0.0) -> LsSolution:
    """Ridge-regularized LS ``(A^H A + ridge I)^{-1} A^H y`` via the V_A eigenbasis."""
    y = np.asarray(getattr(y, "value", y), dtype=complex)
    if ridge < 0:
        raise ValueError("ridge must be non-negative")
    s2 = op.singular_values_squared()
    denom = s2 + ridge
    if np.all(denom == 0):
        raise ValueError("normal equations are singular (all s2 + ridge are zero)")
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = np.where(denom > 0, 1.0 / denom, 0.0)
    x = op.va_apply(inv * op.va_adjoint_apply(op.adjoint(y)))
    resid = float(np.linalg.norm(op.forward(x) - y))
    lam = x.reshape(op.m, op.q * op.n).T
    return LsSolution(CompressedAngularMatrix(lam), x, resid)
