"""FFT-structured measurement operator ``A = (F_M^H E)^T kron (S^T F_Q^* kron F_N)``.

The unknown ``x = vec(Lambda)`` (column-major, length N*M*Q) and the measurement
``y = vec(Y)`` (column-major, length P*T*N).  Internally both are handled in
"transposed" layouts, which for C-ordered NumPy arrays are plain reshapes:

* ``x.reshape(M, Q*N)`` is ``Lambda^T`` (row i = column i of Lambda),
* ``y.reshape(P, T*N)`` is ``Y^T``.

so that ``Y^T = E^T (F_M^* Lambda^T) B^T`` with ``B = S^T F_Q^* kron F_N``.  Each
factor is applied with FFTs: 2-D IFFTs over the RIS grid, a circular
convolution for the circulant training matrix, then 2-D IFFTs over the user
grid and 2-D FFTs over the BS grid on every row.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class TrainingMatrix:
    """RIS phase configurations ``E`` (M x P) whose transpose is the first M
    columns of the P x P circulant matrix generated by ``generator``.

    ``u_e`` / ``eigvals`` diagonalize ``E^* E^T = U_E diag(eigvals) U_E^H``.
    """

    generator: np.ndarray
    m: int
    eigvals: np.ndarray
    u_e: np.ndarray
    circulant: bool

    @property
    def p(self) -> int:
        return self.generator.shape[0]

    @property
    def e(self) -> np.ndarray:
        idx = (np.arange(self.p)[None, :] - np.arange(self.m)[:, None]) % self.p
        return self.generator[idx]


def zadoff_chu(length: int) -> np.ndarray:
    k = np.arange(length)
    if length % 2:
        return np.exp(1j * np.pi * k * (k + 1) / length)
    return np.exp(1j * np.pi * k * k / length)


def training_from_generator(generator: np.ndarray, m: int) -> TrainingMatrix:
    generator = np.asarray(generator, dtype=complex)
    p = generator.shape[0]
    if p < m:
        raise ValueError(f"need P >= M for a tall circulant slice, got P={p}, M={m}")
    if m == p:
        # E^* E^T = C^H C with C circulant: eigenvectors are the (conjugate) DFT basis.
        eigvals = np.abs(np.fft.fft(generator)) ** 2
        u_e = np.fft.ifft(np.eye(p), axis=0, norm="ortho")
        return TrainingMatrix(generator, m, eigvals, u_e, True)
    # Leading M x M block of C^H C: Hermitian Toeplitz, entries from the autocorrelation.
    acf = np.fft.ifft(np.abs(np.fft.fft(generator)) ** 2)
    lag = (np.arange(m)[:, None] - np.arange(m)[None, :]) % p
    gram = acf[lag]
    eigvals, u_e = np.linalg.eigh(gram)
    return TrainingMatrix(generator, m, np.clip(eigvals, 0.0, None), u_e, False)


def build_training_matrix(m: int, p: int, rng: np.random.Generator | None = None,
                          kind: str = "random") -> TrainingMatrix:
    """Unit-modulus circulant training; ``kind`` is ``"random"`` phases or ``"zc"``."""
    if p < m:
        raise ValueError(f"need P >= M, got P={p}, M={m}")
    if kind == "random":
        if rng is None:
            raise ValueError("random training requires an rng")
        gen = np.exp(2j * np.pi * rng.uniform(0.0, 1.0, size=p))
    elif kind == "zc":
        gen = zadoff_chu(p)
    else:
        raise ValueError(f"unknown training kind {kind!r}")
    return training_from_generator(gen, m)


@dataclass(frozen=True)
class StructuredOperator:
    n1: int
    n2: int
    m1: int
    m2: int
    q1: int
    q2: int
    training: TrainingMatrix
    pilot: np.ndarray | None = None  # S (Q x T); None means S = I_Q
    _gen_fft: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.training.m != self.m:
            raise ValueError(f"training has M={self.training.m}, operator expects {self.m}")
        if self.pilot is not None and self.pilot.shape[0] != self.q:
            raise ValueError("pilot matrix must have Q rows")
        object.__setattr__(self, "_gen_fft", np.fft.fft(self.training.generator))

    @classmethod
    def from_config(cls, cfg, training: TrainingMatrix) -> "StructuredOperator":
        return cls(cfg.n1, cfg.n2, cfg.m1, cfg.m2, cfg.q1, cfg.q2, training)

    n = property(lambda self: self.n1 * self.n2)
    m = property(lambda self: self.m1 * self.m2)
    q = property(lambda self: self.q1 * self.q2)
    p = property(lambda self: self.training.p)

    @property
    def t(self) -> int:
        return self.q if self.pilot is None else self.pilot.shape[1]

    @property
    def in_size(self) -> int:
        return self.n * self.m * self.q

    @property
    def out_size(self) -> int:
        return self.p * self.t * self.n

    # -- building blocks, all on 2-D "transposed" layouts ------------------

    def _ris_conj(self, rows: np.ndarray) -> np.ndarray:
        # F_M^* applied along axis 0 of an (M, K) array
        g = rows.reshape(self.m1, self.m2, -1)
        return (np.fft.ifft2(g, axes=(0, 1)) * self.m).reshape(self.m, -1)

    def _ris(self, rows: np.ndarray) -> np.ndarray:
        g = rows.reshape(self.m1, self.m2, -1)
        return np.fft.fft2(g, axes=(0, 1)).reshape(self.m, -1)

    def _train_t(self, w: np.ndarray) -> np.ndarray:
        # E^T w = (first M columns of circulant(c)) w, a zero-padded circular convolution
        wf = np.fft.fft(w, n=self.p, axis=0)
        return np.fft.ifft(self._gen_fft[:, None] * wf, axis=0)

    def _train_conj(self, w: np.ndarray) -> np.ndarray:
        # E^* w = C[:, :M]^H w: circular correlation, keep the first M entries
        wf = np.fft.fft(w, axis=0)
        return np.fft.ifft(self._gen_fft.conj()[:, None] * wf, axis=0)[: self.m]

    def _rows_b(self, rows: np.ndarray) -> np.ndarray:
        # Apply B = S^T F_Q^* kron F_N to every row (length Q*N) of a (K, Q*N) array.
        k = rows.shape[0]
        g = rows.reshape(k, self.q1, self.q2, self.n1, self.n2)
        g = np.fft.ifft2(g, axes=(1, 2)) * self.q           # F_Q^* over the user grid
        g = np.fft.fft2(g, axes=(3, 4))                      # F_N over the BS grid
        g = g.reshape(k, self.q, self.n)
        if self.pilot is not None:
            g = np.einsum("qt,kqn->ktn", self.pilot, g)      # S^T on the user axis
        return g.reshape(k, self.t * self.n)

    def _rows_bh(self, rows: np.ndarray) -> np.ndarray:
        # B^H = F_Q^T S^* kron F_N^H
        k = rows.shape[0]
        g = rows.reshape(k, self.t, self.n)
        if self.pilot is not None:
            g = np.einsum("qt,ktn->kqn", self.pilot.conj(), g)
        g = g.reshape(k, self.q1, self.q2, self.n1, self.n2)
        g = np.fft.fft2(g, axes=(1, 2))
        g = np.fft.ifft2(g, axes=(3, 4)) * self.n
        return g.reshape(k, self.q * self.n)

    # -- public fast paths on flat vectors ----------------------------------

    def _check(self, v, size: int) -> np.ndarray:
        v = np.asarray(v, dtype=complex)
        if v.shape != (size,):
            raise ValueError(f"expected a vector of length {size}, got shape {v.shape}")
        return v

    def forward(self, x) -> np.ndarray:
        """``A x`` in O(QPN log(QPN))."""
        lam_t = self._check(x, self.in_size).reshape(self.m, self.q * self.n)
        w = self._train_t(self._ris_conj(lam_t))
        return self._rows_b(w).ravel()

    def adjoint(self, y) -> np.ndarray:
        """``A^H y``."""
        y_t = self._check(y, self.out_size).reshape(self.p, self.t * self.n)
        w = self._train_conj(self._rows_bh(y_t))
        return self._ris(w).ravel()

    def _need_identity_pilot(self):
        if self.pilot is not None:
            raise ValueError("the eigen-structure of A^H A is only available for S = I_Q")

    def _u_e(self, w: np.ndarray) -> np.ndarray:
        if self.training.circulant:
            return np.fft.ifft(w, axis=0, norm="ortho")
        return self.training.u_e @ w

    def _u_e_h(self, w: np.ndarray) -> np.ndarray:
        if self.training.circulant:
            return np.fft.fft(w, axis=0, norm="ortho")
        return self.training.u_e.conj().T @ w

    def va_apply(self, v) -> np.ndarray:
        """``V_A v`` with ``V_A = (F_M U_E / sqrt(M)) kron I_{NQ}``."""
        self._need_identity_pilot()
        w = self._check(v, self.in_size).reshape(self.m, -1)
        w = self._u_e(w).reshape(self.m1, self.m2, -1)
        return np.fft.fft2(w, axes=(0, 1), norm="ortho").ravel()

    def va_adjoint_apply(self, v) -> np.ndarray:
        self._need_identity_pilot()
        w = self._check(v, self.in_size).reshape(self.m1, self.m2, -1)
        w = np.fft.ifft2(w, axes=(0, 1), norm="ortho").reshape(self.m, -1)
        return self._u_e_h(w).ravel()

    def singular_values_squared(self) -> np.ndarray:
        """Diagonal of ``S_A^H S_A`` so that ``A^H A = V_A diag(s2) V_A^H``."""
        self._need_identity_pilot()
        per_ris = self.n * self.m * self.q * self.training.eigvals
        return np.repeat(per_ris, self.q * self.n)

    def dense(self) -> np.ndarray:
        """Materialize A by Kronecker products (small dims only)."""
        from .angular_domain import dft_matrix

        fm = np.kron(dft_matrix(self.m1), dft_matrix(self.m2))
        fq = np.kron(dft_matrix(self.q1), dft_matrix(self.q2))
        fn = np.kron(dft_matrix(self.n1), dft_matrix(self.n2))
        s = np.eye(self.q) if self.pilot is None else self.pilot
        left = (fm.conj().T @ self.training.e).T
        return np.kron(left, np.kron(s.T @ fq.conj(), fn))

    def dense_va(self) -> np.ndarray:
        from .angular_domain import dft_matrix

        fm = np.kron(dft_matrix(self.m1), dft_matrix(self.m2))
        return np.kron(fm @ self.training.u_e / np.sqrt(self.m), np.eye(self.n * self.q))


# Functional aliases mirroring the operation names.
def forward(op: StructuredOperator, x) -> np.ndarray:
    return op.forward(x)


def adjoint_times(op: StructuredOperator, p) -> np.ndarray:
    return op.adjoint(p)


def va_apply(op: StructuredOperator, v) -> np.ndarray:
    return op.va_apply(v)


def va_adjoint_apply(op: StructuredOperator, v) -> np.ndarray:
    return op.va_adjoint_apply(v)


def singular_values_squared(op: StructuredOperator) -> np.ndarray:
    return op.singular_values_squared()
