"""DFT dictionaries, virtual angular representation and the lossless compression map.

Conventions: every DFT is unnormalized, ``U_n[a, b] = exp(-2j*pi*a*b/n)``, and a
2-D index ``(a1, a2)`` of a ``k1 x k2`` array maps to the flat index ``a1*k2 + a2``
(Kronecker ordering).  With these, ``(U_k1 kron U_k2) v`` is ``fft2`` of ``v``
reshaped to ``(k1, k2)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .channel_model import CascadedChannel, ChannelPair, khatri_rao


def dft_matrix(n: int) -> np.ndarray:
    a = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(a, a) / n)


@dataclass(frozen=True)
class DftDictionary:
    dim1: int
    dim2: int

    def __post_init__(self):
        if self.dim1 < 1 or self.dim2 < 1:
            raise ValueError("dictionary dims must be >= 1")

    @property
    def size(self) -> int:
        return self.dim1 * self.dim2

    @cached_property
    def matrix(self) -> np.ndarray:
        return np.kron(dft_matrix(self.dim1), dft_matrix(self.dim2))


def build_dictionary(dim1: int, dim2: int) -> DftDictionary:
    return DftDictionary(dim1, dim2)


@dataclass(frozen=True)
class AngularDictionaries:
    """The three UPA dictionaries ``F_N`` (BS), ``F_M`` (RIS) and ``F_Q`` (user)."""

    bs: DftDictionary
    ris: DftDictionary
    user: DftDictionary

    @classmethod
    def from_config(cls, cfg) -> "AngularDictionaries":
        return cls(DftDictionary(cfg.n1, cfg.n2), DftDictionary(cfg.m1, cfg.m2),
                   DftDictionary(cfg.q1, cfg.q2))


# -- compression of the Kronecker-sparse matrix ------------------------------

@dataclass(frozen=True)
class CompressionMap:
    """Row classes of ``F_M^T <> F_M^H`` (M^2 x M).

    ``row_of[n]`` is the index ``i < M`` of the first-block row identical to row
    ``n``; ``sets[i]`` lists every ``n`` in class ``i``.
    """

    m1: int
    m2: int
    row_of: np.ndarray
    sets: tuple[np.ndarray, ...]

    @property
    def m(self) -> int:
        return self.m1 * self.m2


def _class_index(m1: int, m2: int) -> np.ndarray:
    # Row n = a*M + b holds F_M[m, a] * conj(F_M[m, b]) = conj(F_M[m, (b - a) mod]).
    idx = np.arange(m1 * m2)
    a1, a2 = np.divmod(idx, m2)
    d1 = (a1[None, :] - a1[:, None]) % m1
    d2 = (a2[None, :] - a2[:, None]) % m2
    return (d1 * m2 + d2).ravel()


def literal_row_classes(m1: int, m2: int) -> np.ndarray:
    """Class of each row found by direct comparison with the first M rows."""
    f = DftDictionary(m1, m2).matrix
    kr = khatri_rao(f.T, f.conj().T)
    m = m1 * m2
    head = kr[:m]
    # First-block rows are mutually orthogonal with squared norm M.
    best = np.argmax(np.abs(kr @ head.conj().T), axis=1)
    if not np.allclose(kr, head[best], atol=1e-9 * m, rtol=0):
        raise AssertionError("a row of F_M^T <> F_M^H is not a copy of a first-block row")
    return best


def build_compression_map(m1: int, m2: int, validate: bool | None = None) -> CompressionMap:
    m = m1 * m2
    if m < 1:
        raise ValueError("RIS dims must be >= 1")
    row_of = _class_index(m1, m2)
    if validate is None:
        validate = m <= 64
    if validate:
        literal = literal_row_classes(m1, m2)
        if not np.array_equal(literal, row_of):
            raise AssertionError("index-arithmetic compression map disagrees with literal rows")
    sets = tuple(np.flatnonzero(row_of == i) for i in range(m))
    return CompressionMap(m1, m2, row_of, sets)


@dataclass
class CompressedAngularMatrix:
    lam: np.ndarray  # (Q*N) x M


def compress(kron_sparse: np.ndarray, cmap: CompressionMap) -> CompressedAngularMatrix:
    """Sum the columns of the (QN x M^2) Kronecker matrix within each row class."""
    m = cmap.m
    if kron_sparse.ndim != 2 or kron_sparse.shape[1] != m * m:
        raise ValueError(f"expected {m * m} columns, got shape {kron_sparse.shape}")
    lam = np.zeros((kron_sparse.shape[0], m), dtype=complex)
    for i, cols in enumerate(cmap.sets):
        lam[:, i] = kron_sparse[:, cols].sum(axis=1)
    return CompressedAngularMatrix(lam)


# -- angular-domain transforms -----------------------------------------------

def angular_decompose(pair: ChannelPair, dicts: AngularDictionaries) -> tuple[np.ndarray, np.ndarray]:
    """Exact inverse of ``H_br = F_N Hb F_M^H`` and ``H_ru = F_M Hr F_Q^H``."""
    fn, fm, fq = dicts.bs.matrix, dicts.ris.matrix, dicts.user.matrix
    n, m, q = fn.shape[0], fm.shape[0], fq.shape[0]
    hb = fn.conj().T @ pair.h_br @ fm / (n * m)
    hr = fm.conj().T @ pair.h_ru @ fq / (m * q)
    return hb, hr


def angular_compose(hb: np.ndarray, hr: np.ndarray,
                    dicts: AngularDictionaries) -> tuple[np.ndarray, np.ndarray]:
    fn, fm, fq = dicts.bs.matrix, dicts.ris.matrix, dicts.user.matrix
    return fn @ hb @ fm.conj().T, fm @ hr @ fq.conj().T


def _split(a: np.ndarray, dicts: AngularDictionaries) -> np.ndarray:
    # (Q*N, M) -> (Q1, Q2, N1, N2, M1, M2)
    d = dicts
    return a.reshape(d.user.dim1, d.user.dim2, d.bs.dim1, d.bs.dim2, d.ris.dim1, d.ris.dim2)


def reconstruct_cascaded(lam: CompressedAngularMatrix | np.ndarray,
                         dicts: AngularDictionaries) -> CascadedChannel:
    """``G = (F_Q^* kron F_N) Lambda F_M^H`` evaluated with FFTs."""
    lam = lam.lam if isinstance(lam, CompressedAngularMatrix) else lam
    t = _split(lam, dicts)
    scale = dicts.user.size * dicts.ris.size
    g = np.fft.fftn(np.fft.ifftn(t, axes=(0, 1, 4, 5)), axes=(2, 3)) * scale
    return CascadedChannel(g.reshape(lam.shape))


def lambda_from_cascaded(g: CascadedChannel | np.ndarray,
                         dicts: AngularDictionaries) -> CompressedAngularMatrix:
    """Inverse of :func:`reconstruct_cascaded`; the compressed model is exact for any G."""
    g = g.g if isinstance(g, CascadedChannel) else g
    t = _split(g, dicts)
    scale = dicts.user.size * dicts.ris.size
    lam = np.fft.ifftn(np.fft.fftn(t, axes=(0, 1, 4, 5)), axes=(2, 3)) / scale
    return CompressedAngularMatrix(lam.reshape(g.shape))


def kronecker_angular(pair: ChannelPair, dicts: AngularDictionaries) -> np.ndarray:
    """The uncompressed (QN x M^2) angular matrix ``Hr^T kron Hb``."""
    hb, hr = angular_decompose(pair, dicts)
    return np.kron(hr.T, hb)
