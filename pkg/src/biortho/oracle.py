"""Independent reference eigensolver and closed-form flow trajectories.

The spectrum comes from a Householder reduction to Hessenberg form followed by
single-shift complex QR with Wilkinson shifts (a different algorithm family
from both the flow and the power iterations). Right and left eigenvectors are
obtained by inverse iteration on the original matrix and its adjoint.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, SingularMatrixError, ValidationError
from .linalg import LUFactor, as_cmatrix, inner

_EPS = np.finfo(float).eps


@dataclass
class SpectralData:
    """Eigenvalues with right/left vectors stored as matrix columns.

    Pairs are bi-normalized (unit right vector, <left_i, right_i> = 1) and sorted
    by decreasing real part. ``flags`` holds one dict per pair with the
    eigenvalue condition number and clustered/defective markers.
    """

    eigenvalues: np.ndarray
    right: np.ndarray
    left: np.ndarray
    flags: list = field(default_factory=list)
    converged: bool = True
    sweeps: int = 0

    @property
    def n(self) -> int:
        return self.eigenvalues.size

    def pair(self, i):
        return self.eigenvalues[i], self.right[:, i], self.left[:, i]

    def by_modulus(self) -> np.ndarray:
        """Indices ordered by decreasing |lambda|."""
        return np.argsort(-np.abs(self.eigenvalues), kind="stable")

    def dominant_modulus(self) -> complex:
        return complex(self.eigenvalues[self.by_modulus()[0]])

    def dominant_real(self) -> complex:
        return complex(self.eigenvalues[0])

    def is_real(self, tol=1e-8) -> bool:
        return bool(np.all(np.abs(self.eigenvalues.imag) < tol))

    def as_dict(self):
        return {
            "eigenvalues": self.eigenvalues,
            "right": self.right,
            "left": self.left,
            "flags": self.flags,
            "converged": self.converged,
            "sweeps": self.sweeps,
            "real_spectrum": self.is_real(),
        }


# ----------------------------------------------------------------- QR sweep


def hessenberg_reduce(A) -> np.ndarray:
    """Unitary similarity to upper Hessenberg form by Householder reflections."""
    H = as_cmatrix(A).copy()
    n = H.shape[0]
    for k in range(n - 2):
        x = H[k + 1 :, k].copy()
        nx = np.linalg.norm(x)
        if nx == 0.0:
            continue
        phase = x[0] / abs(x[0]) if x[0] != 0 else 1.0
        v = x
        v[0] += phase * nx
        v /= np.linalg.norm(v)
        H[k + 1 :, k:] -= 2.0 * np.outer(v, v.conj() @ H[k + 1 :, k:])
        H[:, k + 1 :] -= 2.0 * np.outer(H[:, k + 1 :] @ v, v.conj())
        H[k + 2 :, k] = 0.0
    return H


def _givens(x, y):
    """(c, s) with [[c, s], [-conj(s), c]] @ [x, y] = [r, 0]."""
    ax = abs(x)
    r = np.hypot(ax, abs(y))
    if r == 0.0:
        return 1.0, 0j
    if ax == 0.0:
        return 0.0, 1.0 + 0j
    return ax / r, (x / ax) * np.conj(y) / r


def _wilkinson(a, b, c, d):
    """Eigenvalue of [[a, b], [c, d]] closer to d."""
    half = 0.5 * (a - d)
    disc = cmath.sqrt(half * half + b * c)
    mu1 = d - (b * c) / (half + disc) if (half + disc) != 0 else d
    mu2 = d - (b * c) / (half - disc) if (half - disc) != 0 else d
    return mu1 if abs(mu1 - d) <= abs(mu2 - d) else mu2


def qr_eigenvalues(A, max_sweeps=None):
    """Eigenvalues by shifted QR on the Hessenberg form.

    Returns (eigenvalues, converged, sweeps). Stops after ``100 n`` sweeps by
    default, returning the diagonal of the unconverged block as estimates.
    """
    H = hessenberg_reduce(A)
    n = H.shape[0]
    max_sweeps = 100 * n if max_sweeps is None else max_sweeps
    eig = np.zeros(n, dtype=np.complex128)
    hi = n - 1
    its = 0
    sweeps = 0
    converged = True
    while hi >= 0:
        if hi == 0:
            eig[0] = H[0, 0]
            break
        # Locate the start of the active unreduced block.
        lo = hi
        while lo > 0:
            s = abs(H[lo - 1, lo - 1]) + abs(H[lo, lo])
            if s == 0.0:
                s = np.abs(H[lo - 1 : hi + 1, lo - 1 : hi + 1]).sum()
            if abs(H[lo, lo - 1]) <= _EPS * s:
                H[lo, lo - 1] = 0.0
                break
            lo -= 1
        if lo == hi:
            eig[hi] = H[hi, hi]
            hi -= 1
            its = 0
            continue
        if sweeps >= max_sweeps:
            converged = False
            eig[: hi + 1] = np.diag(H)[: hi + 1]
            break
        its += 1
        sweeps += 1
        if its % 11 == 0:
            # Exceptional shift to break cycles.
            mu = H[hi, hi] + 0.75 * abs(H[hi, hi - 1]) * (1 + 1j)
        else:
            mu = _wilkinson(H[hi - 1, hi - 1], H[hi - 1, hi], H[hi, hi - 1], H[hi, hi])
        idx = np.arange(lo, hi + 1)
        B = H[np.ix_(idx, idx)]
        B[np.diag_indices_from(B)] -= mu
        m = B.shape[0]
        rots = []
        for k in range(m - 1):
            c, s = _givens(B[k, k], B[k + 1, k])
            rows = B[k : k + 2, k:].copy()
            B[k, k:] = c * rows[0] + s * rows[1]
            B[k + 1, k:] = -np.conj(s) * rows[0] + c * rows[1]
            rots.append((c, s))
        for k, (c, s) in enumerate(rots):
            top = min(k + 2, m - 1) + 1
            cols = B[:top, k : k + 2].copy()
            B[:top, k] = c * cols[:, 0] + np.conj(s) * cols[:, 1]
            B[:top, k + 1] = -s * cols[:, 0] + c * cols[:, 1]
        B[np.diag_indices_from(B)] += mu
        H[np.ix_(idx, idx)] = B
    return eig, converged, sweeps


# ------------------------------------------------------- eigenvector recovery


def _inverse_iteration(A, lam, scale, iters=3):
    """Right and left unit vectors for ``lam`` by inverse iteration.

    The shift is lam + delta with delta = 1e-10 * scale (relative), enlarged
    tenfold whenever the factorization reports an exactly singular pivot.
    """
    n = A.shape[0]
    delta = 1e-10 * scale
    for _ in range(6):
        try:
            lu = LUFactor(A - (lam + delta) * np.eye(n), pivot_floor=1e-300)
            break
        except SingularMatrixError:
            delta *= 10.0
    else:
        raise ValidationError(f"inverse iteration could not factor near {lam}")
    start = np.exp(1j * np.arange(n)) * (1.0 + np.arange(n) / n)
    x = start / np.linalg.norm(start)
    y = x.copy()
    for _ in range(iters):
        x = lu.solve(x)
        x /= np.linalg.norm(x)
        y = lu.solve_adjoint(y)
        y /= np.linalg.norm(y)
    return x, y


def qr_spectrum(A) -> SpectralData:
    """Full bi-normalized spectral data for a dense complex matrix."""
    A = as_cmatrix(A)
    n = A.shape[0]
    eig, converged, sweeps = qr_eigenvalues(A)
    scale = max(float(np.linalg.norm(A, 1)), 1e-300)
    order = np.lexsort((-eig.imag, -eig.real))
    eig = eig[order]
    R = np.zeros((n, n), dtype=np.complex128)
    L = np.zeros((n, n), dtype=np.complex128)
    flags = []
    for i, lam in enumerate(eig):
        x, y = _inverse_iteration(A, lam, scale)
        others = np.delete(eig, i)
        gap = float(np.min(np.abs(others - lam))) if others.size else np.inf
        s = inner(y, x)
        cond = 1.0 / abs(s) if s != 0 else np.inf
        defective = abs(s) < 1e-8
        if not defective:
            y = y / np.conj(s)
        R[:, i] = x
        L[:, i] = y
        flags.append(
            {
                "condition": cond,
                "clustered": bool(gap < 1e-8 * scale),
                "defective": bool(defective),
            }
        )
    return SpectralData(eig, R, L, flags, converged, sweeps)


def eig_2x2(A) -> SpectralData:
    """Closed-form spectral data of a 2x2 matrix (quadratic formula)."""
    A = as_cmatrix(A)
    if A.shape != (2, 2):
        raise DimensionError("eig_2x2 needs a 2x2 matrix")
    a, b, c, d = A[0, 0], A[0, 1], A[1, 0], A[1, 1]
    half = 0.5 * (a - d)
    disc = cmath.sqrt(half * half + b * c)
    mean = 0.5 * (a + d)
    scale = max(float(np.max(np.abs(A))), 1e-300)
    lams = np.array([mean + disc, mean - disc])
    double = abs(disc) <= 1e-8 * scale
    scalar = double and abs(b) <= 1e-14 * scale and abs(c) <= 1e-14 * scale

    def null_vec(M):
        # Orthogonal complement of the larger row of a rank-one 2x2 matrix.
        r = M[0] if np.linalg.norm(M[0]) >= np.linalg.norm(M[1]) else M[1]
        if np.linalg.norm(r) == 0.0:
            return np.array([1.0, 0.0], dtype=np.complex128)
        v = np.array([-r[1], r[0]], dtype=np.complex128)
        return v / np.linalg.norm(v)

    if scalar:
        R = np.eye(2, dtype=np.complex128)
        L = np.eye(2, dtype=np.complex128)
        flags = [{"condition": 1.0, "clustered": True, "defective": False}] * 2
    else:
        R = np.column_stack([null_vec(A - lam * np.eye(2)) for lam in lams])
        L = np.column_stack([null_vec(A.conj().T - np.conj(lam) * np.eye(2)) for lam in lams])
        flags = []
        for i in range(2):
            s = inner(L[:, i], R[:, i])
            defective = double or abs(s) < 1e-8
            if not defective:
                L[:, i] = L[:, i] / np.conj(s)
            flags.append(
                {
                    "condition": 1.0 / abs(s) if s != 0 else np.inf,
                    "clustered": bool(double),
                    "defective": bool(defective),
                }
            )
    order = np.lexsort((-lams.imag, -lams.real))
    return SpectralData(lams[order], R[:, order], L[:, order], [flags[i] for i in order])


# ------------------------------------------------------- closed-form flows


def _log_norm_factor(w, rates, chi, t, samples=None):
    """log of chi / S(t) with S(t) = sum_l w_l exp(rates_l t), branch continuous from t = 0.

    The phase of S is unwrapped along a time grid fine enough that no term
    rotates by more than half a radian between samples.
    """
    if t == 0.0:
        return 0j
    max_rot = float(np.max(np.abs(rates.imag))) * abs(t)
    m = int(samples or max(64, np.ceil(2.0 * max_rot) + 1))
    ts = np.linspace(0.0, t, m + 1)
    expo = np.log(w.astype(np.complex128))[None, :] + np.outer(ts, rates)
    shift = np.max(expo.real, axis=1)
    hat = np.exp(expo - shift[:, None]).sum(axis=1)
    mag = np.log(np.abs(hat)) + shift
    phase = np.unwrap(np.angle(hat))
    # Anchor the branch at t = 0 where S(0) = chi.
    phase += np.angle(chi) - phase[0]
    logS = mag[-1] + 1j * phase[-1]
    return cmath.log(chi) - logS


def closed_form_flow(spec: SpectralData, c0, t: float, d0=None, which="phi"):
    """Analytic solution of the coupled flow at time t.

    With x_phi(0) = sum c_k phi_k and x_psi(0) = sum d_k psi_k, the pairing
    chi = sum conj(d_k) c_k is conserved and

        c_k(t) = c_k(0) exp(chi lambda_k t) g(t),
        d_k(t) = d_k(0) exp(conj(chi lambda_k) t) conj(g(t)),
        g(t)^2 = chi / sum_l conj(d_l(0)) c_l(0) exp(2 chi lambda_l t),

    with g(0) = 1 and the square root continued along t. ``d0`` defaults to
    conj(c0), for which real c0 recovers the familiar single-sum formula; the
    Hermitian flow is the special case psi_k = phi_k. Everything is evaluated
    in log-space. ``which`` selects "phi", "psi" or "both".
    """
    c0 = np.asarray(c0, dtype=np.complex128)
    if c0.shape != spec.eigenvalues.shape:
        raise DimensionError("c0 must have one entry per eigenvalue")
    d0 = np.conj(c0) if d0 is None else np.asarray(d0, dtype=np.complex128)
    if d0.shape != c0.shape:
        raise DimensionError("d0 must match c0")
    if not np.any(c0) or not np.any(d0):
        raise ValidationError("initial coefficients must not all vanish")
    lam = spec.eigenvalues
    w = np.conj(d0) * c0
    chi = complex(w.sum())
    if chi == 0:
        raise ValidationError("initial pairing chi is zero")
    active = w != 0
    rates = 2.0 * chi * lam
    log_g2 = _log_norm_factor(w[active], rates[active], chi, float(t))
    log_g = 0.5 * log_g2
    out = []
    if which in ("phi", "both"):
        with np.errstate(divide="ignore"):
            logc = np.log(c0) + chi * lam * t + log_g
        c = np.where(c0 == 0, 0, np.exp(logc))
        out.append(spec.right @ c)
    if which in ("psi", "both"):
        with np.errstate(divide="ignore"):
            logd = np.log(d0) + np.conj(chi * lam) * t + np.conj(log_g)
        d = np.where(d0 == 0, 0, np.exp(logd))
        out.append(spec.left @ d)
    if which not in ("phi", "psi", "both"):
        raise ValidationError("which must be 'phi', 'psi' or 'both'")
    return out[0] if len(out) == 1 else tuple(out)
