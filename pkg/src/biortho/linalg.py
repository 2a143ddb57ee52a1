"""Dense complex linear-algebra primitives.

Vectors are 1-D ``complex128`` arrays and matrices are square 2-D ``complex128``
arrays. The inner product follows the Dirac convention: it is conjugate-linear
in its FIRST argument,

    inner(f, g) = sum_k conj(f_k) g_k,

so that ``inner(f, A @ g) == inner(adjoint(A) @ f, g)``. NumPy's ``vdot`` uses
the same convention; ``np.dot`` on complex arrays does not conjugate at all.
"""

from __future__ import annotations

import warnings

import numpy as np
import scipy.linalg as sla

from .errors import (
    DegeneratePairingError,
    DimensionError,
    NonFiniteError,
    SingularMatrixError,
    ZeroVectorError,
)

PIVOT_FLOOR = 1e-14
PAIRING_FLOOR = 1e-12


def as_cvector(x, name="vector") -> np.ndarray:
    v = np.asarray(x, dtype=np.complex128)
    if v.ndim != 1 or v.size == 0:
        raise DimensionError(f"{name} must be a non-empty 1-D array, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise NonFiniteError(f"{name} has non-finite entries")
    return v


def as_cmatrix(a, name="matrix") -> np.ndarray:
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise DimensionError(f"{name} must be square and non-empty, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NonFiniteError(f"{name} has non-finite entries")
    return m


def _check_pair(a, b, what="vectors"):
    if a.shape[-1] != b.shape[0]:
        raise DimensionError(f"dimension mismatch between {what}: {a.shape} vs {b.shape}")


def matvec(A, x) -> np.ndarray:
    A = np.asarray(A, dtype=np.complex128)
    x = np.asarray(x, dtype=np.complex128)
    if A.ndim != 2 or x.ndim != 1:
        raise DimensionError(f"matvec expects a matrix and a vector, got {A.shape} and {x.shape}")
    _check_pair(A, x, "matrix and vector")
    return A @ x


def adjoint(A) -> np.ndarray:
    """Conjugate transpose."""
    return np.asarray(A, dtype=np.complex128).conj().T


def inner(f, g) -> complex:
    f = np.asarray(f, dtype=np.complex128)
    g = np.asarray(g, dtype=np.complex128)
    if f.shape != g.shape:
        raise DimensionError(f"inner product of vectors with shapes {f.shape} and {g.shape}")
    return complex(np.vdot(f, g))


def norm2(f) -> float:
    return float(np.linalg.norm(np.asarray(f, dtype=np.complex128)))


def rayleigh(A, y) -> complex:
    """Rayleigh quotient <y, Ay> / <y, y>."""
    y = np.asarray(y, dtype=np.complex128)
    yy = inner(y, y).real
    if yy == 0.0:
        raise ZeroVectorError("Rayleigh quotient of the zero vector")
    return inner(y, matvec(A, y)) / yy


def bi_rayleigh(A, x_psi, x_phi, pairing_floor=PAIRING_FLOOR) -> complex:
    """Biorthogonal quotient <x_psi, A x_phi> / <x_psi, x_phi>.

    Raises DegeneratePairingError when |<x_psi, x_phi>| is below ``pairing_floor``.
    """
    den = inner(x_psi, x_phi)
    if abs(den) < pairing_floor:
        raise DegeneratePairingError(den, pairing_floor)
    return inner(x_psi, matvec(A, x_phi)) / den


def residual(A, lam, x) -> float:
    """||A x - lam x||."""
    x = np.asarray(x, dtype=np.complex128)
    return norm2(matvec(A, x) - lam * x)


class LUFactor:
    """LU factorization with partial pivoting, reusable for A and A^dagger solves.

    ``pivot_floor`` is relative to max|A_ij|; any pivot at or below
    ``pivot_floor * max|A_ij|`` raises SingularMatrixError carrying its index.
    """

    def __init__(self, A, pivot_floor=PIVOT_FLOOR):
        A = as_cmatrix(A)
        self.n = A.shape[0]
        scale = float(np.max(np.abs(A)))
        floor = pivot_floor * scale
        if scale == 0.0:
            raise SingularMatrixError(0, 0.0, 0.0)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", sla.LinAlgWarning)
            self._lu, self._piv = sla.lu_factor(A, check_finite=False)
        pivots = np.abs(np.diag(self._lu))
        bad = np.flatnonzero(pivots <= floor)
        if bad.size:
            i = int(bad[0])
            raise SingularMatrixError(i, complex(self._lu[i, i]), floor)

    def solve(self, b) -> np.ndarray:
        b = as_cvector(b, "right-hand side")
        if b.shape[0] != self.n:
            raise DimensionError(f"rhs has length {b.shape[0]}, expected {self.n}")
        return sla.lu_solve((self._lu, self._piv), b, check_finite=False)

    def solve_adjoint(self, b) -> np.ndarray:
        """Solve A^dagger x = b with the same factorization."""
        b = as_cvector(b, "right-hand side")
        if b.shape[0] != self.n:
            raise DimensionError(f"rhs has length {b.shape[0]}, expected {self.n}")
        return sla.lu_solve((self._lu, self._piv), b, trans=2, check_finite=False)


def lu_solve(A, b, pivot_floor=PIVOT_FLOOR) -> np.ndarray:
    return LUFactor(A, pivot_floor).solve(b)


def expm(M) -> np.ndarray:
    """Matrix exponential (Pade scaling-and-squaring)."""
    return sla.expm(as_cmatrix(M))


def v_norm(f, V) -> float:
    """sup_j |<v_j, f>| over the columns of V (or over a list of vectors)."""
    f = np.asarray(f, dtype=np.complex128)
    if isinstance(V, (list, tuple)):
        V = np.column_stack([np.asarray(v, dtype=np.complex128) for v in V])
    V = np.asarray(V, dtype=np.complex128)
    if V.ndim == 1:
        V = V[:, None]
    if V.shape[0] != f.shape[0]:
        raise DimensionError(f"basis vectors have length {V.shape[0]}, f has {f.shape[0]}")
    return float(np.max(np.abs(V.conj().T @ f)))


def is_hermitian(A, tol=1e-12) -> bool:
    A = np.asarray(A, dtype=np.complex128)
    scale = max(1.0, float(np.max(np.abs(A))))
    return bool(np.max(np.abs(A - A.conj().T)) <= tol * scale)


def binormalize(phi, psi, pairing_floor=PAIRING_FLOOR):
    """Scale phi to unit norm, then psi so that <psi, phi> = 1."""
    phi = np.asarray(phi, dtype=np.complex128)
    nrm = norm2(phi)
    if nrm == 0.0:
        raise ZeroVectorError("cannot bi-normalize a zero right vector")
    phi = phi / nrm
    s = inner(psi, phi)
    if abs(s) < pairing_floor:
        raise DegeneratePairingError(s, pairing_floor)
    return phi, np.asarray(psi, dtype=np.complex128) / np.conj(s)


def canonical_phase(x) -> np.ndarray:
    """Rotate x so that its largest-modulus component is real and positive."""
    x = np.asarray(x, dtype=np.complex128)
    k = int(np.argmax(np.abs(x)))
    if x[k] == 0:
        return x
    return x * (abs(x[k]) / x[k])
