"""Matrix families used in the experiments.

* the fixed 7x7 complex test matrix A = R + iT,
* Hessenberg matrices D{alpha} built from a sequence with |alpha_k| < 1,
* the truncated Swanson Hamiltonian H_theta = T_theta h T_theta^-1, which is
  non-Hermitian but similar to diag(1/2, 3/2, ...),
* seeded random complex matrices and matrices with a prescribed spectrum.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .linalg import LUFactor, as_cmatrix, expm

_R = np.array(
    [
        [0.445, -0.219, 0.489, 0.770, 0.589, -0.00333, 0.950],
        [0.481, -0.892, -0.806, -0.743, -0.641, -0.422, 0.701],
        [-0.735, 0.747, 0.750, -0.879, 0.884, -0.0114, -0.260],
        [0.528, 0.357, 0.707, 0.986, 0.201, 0.320, 0.207],
        [0.899, 0.727, 0.206, -0.792, 0.109, 0.895, 0.672],
        [-0.400, -0.259, -0.988, 0.459, 0.681, 0.843, 0.788],
        [0.326, -0.530, -0.168, 0.141, 0.0158, -0.496, -0.907],
    ]
)
_T = np.array(
    [
        [0.959, 0.314, -0.237, 0.232, -0.608, 0.199, -0.164],
        [-0.744, -0.112, 0.239, 0.384, -0.132, 0.299, 0.817],
        [0.921, 0.681, -0.302, 0.942, -0.781, 0.908, -0.0566],
        [0.465, -0.641, 0.505, -0.892, -0.830, 0.715, -0.170],
        [-0.807, 0.978, -0.185, -0.619, -0.923, 0.322, -0.690],
        [0.0672, 0.893, 0.620, 0.711, -0.631, -0.636, -0.211],
        [-0.742, -0.0257, 0.536, -0.952, -0.325, 0.0701, 0.196],
    ]
)

# Reference eigenvalues of R + iT, ordered by decreasing real part (4-5 digits).
E1_EIGENVALUES = (
    1.5181 - 1.2564j,
    0.9604 - 2.2206j,
    0.9394 - 0.6078j,
    0.8326 + 2.0418j,
    -0.7583 - 1.154j,
    -0.8380 + 0.1978j,
    -1.3201 + 1.2896j,
)

# Reference 7x7 Swanson matrix for theta = 0.4 (about six significant digits).
SWANSON_REFERENCE_THETA = 0.4
SWANSON_REFERENCE = np.array(
    [
        [0.348126, 0, -0.510541j, 0, 0.0140773, 0, 0.0216558j],
        [0, 1.05673, 0, -0.805139j, 0, -0.145695, 0],
        [-0.510541j, 0, 1.79157, 0, -1.01756j, 0, -0.372785],
        [0, -0.805139j, 0, 1.9337, 0, -2.76093j, 0],
        [0.0140773, 0, -1.01756j, 0, 2.0337, 0, -4.04439j],
        [0, -0.145695, 0, -2.76093j, 0, 7.50957, 0],
        [0.0216558j, 0, -0.372785, 0, -4.04439j, 0, 9.8266],
    ],
    dtype=np.complex128,
)

# Expected top-three-modulus eigenvalues of D{alpha} at n = 15.
E2_TARGETS = {
    "exp_minus_k_squared": (-0.0233, 0.0059, -0.00069),
    "inverse_factorial_k_squared": (-0.0417, 6.58e-5, 1.81e-8),
}


def e1_fixture():
    """Return (R, T, A) with A = R + iT, entries exactly as tabulated."""
    R = _R.astype(np.complex128)
    T = _T.astype(np.complex128)
    return R, T, R + 1j * T


def random_complex(n: int, seed: int) -> np.ndarray:
    """n x n matrix with real and imaginary parts i.i.d. uniform on [-1, 1]."""
    if n < 1:
        raise ValidationError("n must be at least 1")
    rng = np.random.default_rng(seed)
    return rng.uniform(-1, 1, (n, n)) + 1j * rng.uniform(-1, 1, (n, n))


def random_hermitian(n: int, seed: int) -> np.ndarray:
    M = random_complex(n, seed)
    return 0.5 * (M + M.conj().T)


def from_spectrum(eigenvalues, seed: int, cond_limit: float = 1e3) -> np.ndarray:
    """Random dense matrix U diag(eigenvalues) U^-1 with a tame eigenvector basis.

    U is redrawn until its 2-norm condition number is below ``cond_limit`` so
    that the spectrum is known to near machine precision.
    """
    lam = np.asarray(eigenvalues, dtype=np.complex128)
    n = lam.size
    rng = np.random.default_rng(seed)
    for _ in range(100):
        U = rng.uniform(-1, 1, (n, n)) + 1j * rng.uniform(-1, 1, (n, n))
        if np.linalg.cond(U) < cond_limit:
            break
    else:
        raise ValidationError("could not draw a well-conditioned eigenvector basis")
    return U @ np.diag(lam) @ np.linalg.inv(U)


# ---------------------------------------------------------------- Hessenberg


class AlphaKind(str, enum.Enum):
    EXP_MINUS_K_SQUARED = "exp_minus_k_squared"
    INVERSE_FACTORIAL_K_SQUARED = "inverse_factorial_k_squared"
    INVERSE_FACTORIAL_SQUARED = "inverse_factorial_squared"
    GEOMETRIC_HALF = "geometric_half"
    CUSTOM = "custom"


@dataclass(frozen=True)
class AlphaSequence:
    """alpha_1, alpha_2, ... for the Hessenberg construction.

    Built-in kinds generate alpha_j = f(start + j - 1):

    * exp_minus_k_squared: exp(-k^2)
    * inverse_factorial_k_squared: 1/(k^2)!
    * inverse_factorial_squared: 1/(k!)^2
    * geometric_half: 2^-k

    ``start`` defaults to 1, except for the factorial kinds where k = 1 gives
    alpha = 1, which is not allowed; those start at 2.
    """

    kind: AlphaKind
    start: int | None = None
    values: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "kind", AlphaKind(self.kind))
        if self.start is None:
            factorial = self.kind in (
                AlphaKind.INVERSE_FACTORIAL_K_SQUARED,
                AlphaKind.INVERSE_FACTORIAL_SQUARED,
            )
            object.__setattr__(self, "start", 2 if factorial else 1)
        if self.kind is AlphaKind.CUSTOM and not self.values:
            raise ValidationError("custom alpha sequence needs values")

    def take(self, n: int) -> np.ndarray:
        if self.kind is AlphaKind.CUSTOM:
            vals = np.asarray(self.values, dtype=np.complex128)
            if vals.size < n:
                raise ValidationError(f"custom alpha sequence has {vals.size} values, need {n}")
            out = vals[:n]
        else:
            ks = range(self.start, self.start + n)
            if self.kind is AlphaKind.EXP_MINUS_K_SQUARED:
                out = [math.exp(-k * k) for k in ks]
            elif self.kind is AlphaKind.INVERSE_FACTORIAL_K_SQUARED:
                # 1/(k^2)! underflows quickly; lgamma keeps it finite until it is 0.
                out = [math.exp(-math.lgamma(k * k + 1)) for k in ks]
            elif self.kind is AlphaKind.INVERSE_FACTORIAL_SQUARED:
                out = [math.exp(-2 * math.lgamma(k + 1)) for k in ks]
            else:
                out = [2.0 ** -k for k in ks]
            out = np.asarray(out, dtype=np.complex128)
        if np.any(np.abs(out) >= 1.0):
            raise ValidationError("every |alpha_k| must be < 1")
        return out


def hessenberg(alpha: AlphaSequence | np.ndarray, n: int) -> np.ndarray:
    """Upper Hessenberg D{alpha} of order n.

    With alpha_0 = 1, k_0 = 1 and k_j = k_{j-1} / sqrt(1 - |alpha_j|^2), the
    entries (1-based) are

        D[i, j]   = -(k_{i-1} / k_{j-1}) alpha_j conj(alpha_{i-1})   for j >= i,
        D[j+1, j] = k_{j-1} / k_j,

    so alpha = 0 gives the right-shift matrix. Uses alpha_1 .. alpha_n.
    """
    if n < 2:
        raise ValidationError("Hessenberg order must be at least 2")
    if isinstance(alpha, AlphaSequence):
        a = alpha.take(n)
    else:
        a = np.asarray(alpha, dtype=np.complex128)[:n]
        if a.size < n:
            raise ValidationError(f"need {n} alpha values, got {a.size}")
    if np.any(np.abs(a) >= 1.0):
        raise ValidationError("every |alpha_k| must be < 1")
    al = np.concatenate(([1.0 + 0j], a))  # al[j] = alpha_j
    k = np.ones(n + 1)
    for j in range(1, n + 1):
        k[j] = k[j - 1] / math.sqrt(1.0 - abs(al[j]) ** 2)
    D = np.zeros((n, n), dtype=np.complex128)
    for i in range(n):
        j = np.arange(i, n)
        D[i, i:] = -(k[i] / k[j]) * al[j + 1] * np.conj(al[i])
        if i + 1 < n:
            D[i + 1, i] = k[i] / k[i + 1]
    return D


def shift_matrix(n: int) -> np.ndarray:
    """Finite right shift: ones on the subdiagonal."""
    return np.eye(n, k=-1, dtype=np.complex128)


def is_upper_hessenberg(A, tol: float = 0.0) -> bool:
    """True iff every entry below the first subdiagonal is at most ``tol`` in modulus."""
    A = np.asarray(A)
    return bool(np.all(np.abs(np.tril(A, -2)) <= tol))


# ------------------------------------------------------------------- Swanson


@dataclass(frozen=True)
class SwansonParams:
    N: int = 7
    theta: float = 0.4

    def __post_init__(self):
        if self.N < 1:
            raise ValidationError("N must be positive")
        if not (-math.pi / 4 < self.theta < math.pi / 4) or self.theta == 0.0:
            raise ValidationError("theta must lie in (-pi/4, pi/4) and be nonzero")


@dataclass(frozen=True)
class LadderConvention:
    """How the truncated ladder and similarity generator are assembled.

    ``shifted``: a e_k = sqrt(k - 1) e_{k-1} (number-state labelling from 0)
    rather than a e_k = sqrt(k) e_{k-1}. ``scale`` multiplies i*theta in the
    exponent of T_theta = exp(scale * i * theta * (a^2 - (a^dagger)^2)).
    """

    shifted: bool
    scale: float

    def as_dict(self):
        return {"ladder": "sqrt(k-1)" if self.shifted else "sqrt(k)", "generator_scale": self.scale}


CANDIDATE_CONVENTIONS = tuple(
    LadderConvention(shifted, scale) for shifted in (False, True) for scale in (1.0, -1.0, 0.5, -0.5)
)


def ladder(N: int, shifted: bool) -> np.ndarray:
    """Truncated lowering operator a (N x N); raising operator is its transpose."""
    a = np.zeros((N, N), dtype=np.complex128)
    for k in range(2, N + 1):
        a[k - 2, k - 1] = math.sqrt(k - 1 if shifted else k)
    return a


def oscillator_levels(N: int) -> np.ndarray:
    """mu_k = (2(k - 1) + 1) / 2, k = 1..N."""
    return (2.0 * np.arange(N) + 1.0) / 2.0


def _swanson_raw(p: SwansonParams, conv: LadderConvention) -> np.ndarray:
    a = ladder(p.N, conv.shifted)
    ad = a.T
    X = a @ a - ad @ ad
    T = expm(conv.scale * 1j * p.theta * X)
    lu = LUFactor(T)
    T_inv = np.column_stack([lu.solve(e) for e in np.eye(p.N, dtype=np.complex128)])
    return (T * oscillator_levels(p.N)[None, :]) @ T_inv


def _sig_fig_match(M, ref, figs=3) -> bool:
    """Entrywise agreement to ``figs`` significant figures on nonzero reference entries."""
    scale = np.max(np.abs(ref))
    nz = np.abs(ref) > 0
    rel_ok = np.all(np.abs(M[nz] - ref[nz]) <= 0.5 * 10.0 ** (1 - figs) * np.abs(ref[nz]))
    zero_ok = np.all(np.abs(M[~nz]) <= 1e-12 * scale)
    return bool(rel_ok and zero_ok)


@functools.lru_cache(maxsize=1)
def select_convention() -> LadderConvention:
    """Pick the convention that reproduces the reference theta = 0.4 matrix."""
    p = SwansonParams(SWANSON_REFERENCE.shape[0], SWANSON_REFERENCE_THETA)
    for conv in CANDIDATE_CONVENTIONS:
        if _sig_fig_match(_swanson_raw(p, conv), SWANSON_REFERENCE):
            return conv
    raise ValidationError("no ladder convention reproduces the reference Swanson matrix")


def swanson(p: SwansonParams, convention: LadderConvention | None = None):
    """Truncated Swanson Hamiltonian and generation metadata."""
    conv = convention or select_convention()
    H = _swanson_raw(p, conv)
    meta = {"kind": "swanson", "N": p.N, "theta": p.theta, **conv.as_dict()}
    return H, meta


def swanson_checkerboard(H, tol: float = 1e-12) -> bool:
    """True iff every entry with odd i + j vanishes (to ``tol`` times max |H|)."""
    H = as_cmatrix(H)
    n = H.shape[0]
    i, j = np.indices((n, n))
    odd = (i + j) % 2 == 1
    scale = max(float(np.max(np.abs(H))), 1e-300)
    return bool(np.all(np.abs(H[odd]) < tol * scale))
