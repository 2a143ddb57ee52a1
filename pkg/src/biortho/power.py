"""Power iteration with Schwartz quotients, deflation and shifted inverse power.

Two sequences are maintained side by side: x_m proportional to A^m x_phi and
y_m proportional to (A^dagger)^m x_psi, both normalized to unit length and
phase-canonicalized every step. The eigenvalue estimate is the Schwartz quotient

    gamma_m = <A^dagger y_m, x_m> / <y_m, x_m>,

which equals <(A^dagger)^{m+1} x_psi, A^m x_phi> / <(A^dagger)^m x_psi, A^m x_phi>
since both sides are invariant under rescaling of the iterates. Its error
decays like |lambda_2 / lambda_1|^(2m), twice as fast as the vectors converge.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DeflationError, DegeneratePairingError, SingularMatrixError, ZeroVectorError
from .flow import random_start
from .linalg import (
    LUFactor,
    adjoint,
    as_cmatrix,
    as_cvector,
    binormalize,
    canonical_phase,
    inner,
    norm2,
    rayleigh,
)
from .structures import BiorthoPair, ConvergenceTrace, PowerResult, SolverConfig, Status

# Dominance-tie detection: this many iterations without a new best residual
# while the iterate has moved more than TIE_DIRECTION_CHANGE from the best one.
TIE_WINDOW = 50
TIE_DIRECTION_CHANGE = 1e-3
# A stationary iterate whose residual has not improved for this long has hit
# its rounding floor; the run stops with the best pair seen.
FLOOR_WINDOW = 200
# Pairs used for deflation are converged this far below delta_tol.
SWEEP_TIGHTEN = 1e-3
# Found eigenvalues closer than this (absolute or relative) are duplicates.
DEDUP_TOL = 1e-6


def schwartz_quotient(A, x_phi, x_psi, m: int = 0, pairing_floor: float = 1e-300) -> complex:
    """<(A^dagger)^{m+1} x_psi, A^m x_phi> / <(A^dagger)^m x_psi, A^m x_phi>.

    With m = 0 the arguments are taken to be the current iterates. Powers are
    applied with renormalization, which leaves the quotient unchanged.
    """
    A = as_cmatrix(A)
    Ad = adjoint(A)
    x = as_cvector(x_phi, "x_phi")
    y = as_cvector(x_psi, "x_psi")
    for _ in range(m):
        x = A @ x
        y = Ad @ y
        x = x / norm2(x)
        y = y / norm2(y)
    den = inner(y, x)
    if abs(den) < pairing_floor * norm2(x) * norm2(y):
        raise DegeneratePairingError(den, pairing_floor)
    return inner(Ad @ y, x) / den


def schwartz_iterates(A, x_phi, x_psi, steps: int):
    """Unnormalized sequence x_m = A x_{m-1} / gamma_m with x_0 = x_phi.

    gamma_m is the Schwartz quotient at power m, computed from normalized
    copies of the two power sequences. Returns (xs, gammas) with xs[0] = x_phi.
    """
    A = as_cmatrix(A)
    Ad = adjoint(A)
    x = as_cvector(x_phi, "x_phi")
    p = x / norm2(x)
    q = as_cvector(x_psi, "x_psi")
    q = q / norm2(q)
    xs, gammas = [x.copy()], []
    for _ in range(steps):
        p = A @ p
        q = Ad @ q
        p /= norm2(p)
        q /= norm2(q)
        g = inner(Ad @ q, p) / inner(q, p)
        x = (A @ x) / g
        xs.append(x)
        gammas.append(g)
    return xs, np.array(gammas)


def deflate_vector(x, found) -> np.ndarray:
    """x - sum_j <psi_j, x> phi_j, so that <psi_j, result> = 0 for each found pair."""
    x = as_cvector(x)
    out = x.copy()
    for p in found:
        out = out - inner(p.psi, out) * p.phi
    if norm2(out) < 1e-10 * norm2(x):
        raise DeflationError("trial vector lies in the span of the found pairs; re-seed")
    return out


def deflate_adjoint(y, found) -> np.ndarray:
    """y - sum_j <phi_j, y> psi_j, the left-vector counterpart of deflate_vector."""
    y = as_cvector(y)
    out = y.copy()
    for p in found:
        out = out - inner(p.phi, out) * p.psi
    if norm2(out) < 1e-10 * norm2(y):
        raise DeflationError("trial vector lies in the span of the found pairs; re-seed")
    return out


def _unit(v):
    nrm = norm2(v)
    if not nrm > np.finfo(float).tiny or not np.isfinite(nrm):
        raise ZeroVectorError("iterate norm underflowed")
    return canonical_phase(v / nrm)


def _starts(A, cfg, x0, y0, found, rng):
    n = A.shape[0]
    if x0 is None:
        x0 = random_start(n, rng)
    x0 = as_cvector(x0, "x0")
    if norm2(x0) == 0.0:
        raise ZeroVectorError("x0 must be non-zero")
    if y0 is None:
        y0 = random_start(n, rng) if cfg.independent_pairs else x0.copy()
    y0 = as_cvector(y0, "y0")
    if norm2(y0) == 0.0:
        raise ZeroVectorError("y0 must be non-zero")
    if found:
        x0 = deflate_vector(deflate_vector(x0, found), found)
        y0 = deflate_adjoint(deflate_adjoint(y0, found), found)
    return _unit(x0), _unit(y0)


def _run(A, cfg, step, x, y, found, accept_tol):
    """Shared iteration loop.

    ``step(x, y)`` returns (x_next_raw, y_next_raw, lam, Ax, Ady) where lam is
    the eigenvalue of A estimated from the current iterates and Ax, Ady are
    A x and A^dagger y (used for residuals).
    """
    accept_tol = cfg.delta_tol if accept_tol is None else max(accept_tol, cfg.delta_tol)
    trace = ConvergenceTrace()
    best = (np.inf, None)
    since_best = 0
    window_x = x
    moved = 0.0
    it = 0
    status, diag = Status.MAX_ITER, f"max_iter = {cfg.max_iter} reached"
    while it < cfg.max_iter:
        den = inner(y, x)
        if abs(den) < cfg.pairing_floor:
            status, diag = Status.BREAKDOWN, f"pairing |<y, x>| = {abs(den):.2e} below floor"
            break
        try:
            xn, yn, lam, Ax, Ady = step(x, y)
        except ZeroVectorError as exc:
            status, diag = Status.BREAKDOWN, str(exc)
            break
        if not np.isfinite(lam):
            status, diag = Status.BREAKDOWN, "non-finite eigenvalue estimate"
            break
        # Residuals of the bi-normalized pair (x, y / conj(<y, x>)).
        r_phi = norm2(Ax - lam * x)
        r_psi = norm2(Ady - np.conj(lam) * y) / abs(den)
        trace.append(it, lam, r_phi, r_psi, rayleigh(A, x))
        r = max(r_phi, r_psi) if cfg.check_left else r_phi
        if r < best[0]:
            best = (r, (lam, x, y))
            since_best = 0
            window_x = x
            moved = 0.0
        else:
            since_best += 1
            # Largest excursion, so that periodic iterates count as moving.
            moved = max(moved, norm2(x - window_x))
        if r < cfg.delta_tol:
            status, diag = Status.CONVERGED, ""
            break
        if since_best >= TIE_WINDOW:
            if best[0] < accept_tol:
                status, diag = Status.CONVERGED, f"residual floor {best[0]:.2e} accepted"
                break
            if since_best == TIE_WINDOW and moved > TIE_DIRECTION_CHANGE:
                status = Status.DOMINANCE_TIE
                diag = (
                    f"residual has not improved for {TIE_WINDOW} iterations while the iterate "
                    f"keeps moving ({moved:.2e}); the dominant eigenvalue is not unique in modulus"
                )
                break
            if since_best >= FLOOR_WINDOW:
                status, diag = Status.MAX_ITER, f"residual stalled at {best[0]:.2e} above delta_tol"
                break
        it += 1
        try:
            if found and it % cfg.reorthogonalize_every == 0:
                xn = deflate_vector(xn, found)
                yn = deflate_adjoint(yn, found)
            x, y = _unit(xn), _unit(yn)
        except (ZeroVectorError, DeflationError) as exc:
            status, diag = Status.BREAKDOWN, str(exc)
            break

    pair = None
    if best[1] is not None:
        lam, bx, by = best[1]
        try:
            phi, psi = binormalize(bx, by, cfg.pairing_floor)
            pair = BiorthoPair(complex(lam), phi, psi)
        except DegeneratePairingError:
            pair = None
    return PowerResult(pair, trace, it, status, diag)


def power_iterate(A, x0=None, cfg: SolverConfig | None = None, y0=None, found=(), accept_tol=None) -> PowerResult:
    """Dominant (largest-modulus) eigenpair of A by power iteration.

    x0 and y0 start the right and left sequences; y0 defaults to x0 (or to an
    independent random vector with ``cfg.independent_pairs``). With ``found``
    the iterates are kept biorthogonal to those pairs, so the run converges to
    the largest-modulus eigenvalue outside them. Stops when the residuals are
    below ``cfg.delta_tol``; a run that stalls below ``accept_tol`` is also
    accepted. The best pair seen is always reported.
    """
    cfg = cfg or SolverConfig()
    A = as_cmatrix(A)
    Ad = adjoint(A)
    found = list(found)
    rng = np.random.default_rng(cfg.seed)
    x, y = _starts(A, cfg, x0, y0, found, rng)

    def step(x, y):
        Ax = A @ x
        Ady = Ad @ y
        lam = inner(Ady, x) / inner(y, x)
        return Ax, Ady, lam, Ax, Ady

    return _run(A, cfg, step, x, y, found, accept_tol)


def adjoint_power_iterate(A, y0=None, cfg: SolverConfig | None = None, phi=None, found=()) -> PowerResult:
    """Left eigenvector of the dominant eigenvalue by power iteration on A^dagger.

    The returned pair is expressed for A: ``psi`` is the iterated left vector
    and ``lam`` the eigenvalue of A (the conjugate of the one found for
    A^dagger). When ``phi`` (a previously found right vector) is given, the
    pair is bi-normalized against it; otherwise the right vector comes from
    the companion sequence.
    """
    cfg = cfg or SolverConfig()
    A = as_cmatrix(A)
    swapped = [BiorthoPair(np.conj(p.lam), p.psi / norm2(p.psi), p.phi * norm2(p.psi)) for p in found]
    res = power_iterate(adjoint(A), y0, cfg, found=swapped)
    trace = ConvergenceTrace()
    for i in range(len(res.trace)):
        trace.append(res.trace.x[i], np.conj(res.trace.lam[i]), res.trace.residual_psi[i], res.trace.residual_phi[i])
    pair = None
    if res.pair is not None:
        psi = res.pair.phi
        right = res.pair.psi if phi is None else as_cvector(phi, "phi")
        try:
            ph, ps = binormalize(right, psi, cfg.pairing_floor)
            pair = BiorthoPair(np.conj(res.pair.lam), ph, ps)
        except DegeneratePairingError as exc:
            return PowerResult(None, trace, res.iterations, Status.BREAKDOWN, str(exc))
    return PowerResult(pair, trace, res.iterations, res.status, res.diagnostic)


def shifted_inverse_power(A, q, x0=None, cfg: SolverConfig | None = None, y0=None, found=(), accept_tol=None) -> PowerResult:
    """Eigenpair of A nearest the shift q, via power iteration on (A - q I)^-1.

    One LU factorization serves both the right and the adjoint solves. The
    dominant eigenvalue mu of the inverse gives lambda = q + 1/mu. A shift
    that hits the spectrum to working precision raises SingularMatrixError.
    """
    cfg = cfg or SolverConfig()
    A = as_cmatrix(A)
    Ad = adjoint(A)
    n = A.shape[0]
    q = complex(q)
    try:
        lu = LUFactor(A - q * np.eye(n))
    except SingularMatrixError as exc:
        hint = f"shift q = {q} is an eigenvalue to working precision; perturb the shift and retry"
        raise SingularMatrixError(exc.pivot_index, exc.pivot, exc.floor, hint) from exc
    found = list(found)
    rng = np.random.default_rng(cfg.seed)
    x, y = _starts(A, cfg, x0, y0, found, rng)

    def step(x, y):
        z = lu.solve(x)
        w = lu.solve_adjoint(y)
        mu = inner(y, z) / inner(y, x)
        if mu == 0:
            raise ZeroVectorError("inverse iterate vanished")
        lam = q + 1.0 / mu
        return z, w, lam, A @ x, Ad @ y

    return _run(A, cfg, step, x, y, found, accept_tol)


def gershgorin_disks(A):
    """(centers, radii) of the row Gershgorin disks."""
    A = as_cmatrix(A)
    c = np.diag(A).copy()
    r = np.sum(np.abs(A), axis=1) - np.abs(c)
    return c, r


def sample_gershgorin(A, rng, size: int = 1) -> np.ndarray:
    """Points drawn uniformly from the union of the Gershgorin disks."""
    c, r = gershgorin_disks(A)
    r = np.maximum(r, 1e-12 * max(1.0, float(np.max(np.abs(c)))))
    lo = np.min(c.real - r) + 1j * np.min(c.imag - r)
    hi = np.max(c.real + r) + 1j * np.max(c.imag + r)
    out = []
    while len(out) < size:
        z = rng.uniform(lo.real, hi.real) + 1j * rng.uniform(lo.imag, hi.imag)
        if np.any(np.abs(z - c) <= r):
            out.append(z)
    return np.array(out)


def _is_duplicate(lam, lams) -> bool:
    return any(abs(lam - m) <= DEDUP_TOL * max(1.0, abs(m)) for m in lams)


def power_sweep(A, cfg: SolverConfig | None = None, count=None):
    """Eigenpairs in decreasing modulus by successive deflated power runs.

    Each run is converged to ``SWEEP_TIGHTEN * delta_tol`` (accepted at
    ``delta_tol``) because deflation errors feed into every later run. Yields
    PowerResults; stops after the first failure or duplicate eigenvalue.
    """
    cfg = cfg or SolverConfig()
    A = as_cmatrix(A)
    n = A.shape[0]
    count = n if count is None else min(count, n)
    tight = replace(cfg, delta_tol=cfg.delta_tol * SWEEP_TIGHTEN)
    found = []
    for i in range(count):
        try:
            res = power_iterate(A, None, replace(tight, seed=cfg.seed + i), found=found, accept_tol=cfg.delta_tol)
        except DeflationError:
            return
        yield res
        if not res.converged or res.pair is None or _is_duplicate(res.pair.lam, [p.lam for p in found]):
            return
        found.append(res.pair)


@dataclass
class SpectrumResult:
    pairs: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)
    power_runs: int = 0
    shift_attempts: int = 0

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.array([p.lam for p in self.pairs])

    @property
    def complete(self) -> bool:
        return bool(self.pairs) and len(self.pairs) == self.pairs[0].phi.size


def full_spectrum(A, cfg: SolverConfig | None = None) -> SpectrumResult:
    """All eigenpairs by deflated power iteration, then shifted inverse sweeps.

    Deflated power runs peel off eigenvalues in decreasing modulus until one
    fails (for example on a modulus tie). The remainder is sought with shifts
    drawn uniformly from the Gershgorin disk union, skipping shifts within
    DEDUP_TOL of an eigenvalue already found, for up to 10 n attempts. Pairs
    are returned in descending modulus with per-failure diagnostics.
    """
    cfg = cfg or SolverConfig()
    A = as_cmatrix(A)
    n = A.shape[0]
    tight = replace(cfg, delta_tol=cfg.delta_tol * SWEEP_TIGHTEN)
    out = SpectrumResult()
    found: list = []

    def accept(res, label):
        if res.converged and res.pair is not None and not _is_duplicate(res.pair.lam, [p.lam for p in found]):
            found.append(res.pair)
            return True
        reason = res.diagnostic or res.status.value
        if res.converged:
            reason = f"duplicate of an eigenvalue already found ({res.pair.lam:.6g})"
        out.diagnostics.append(f"{label}: {reason}")
        return False

    for res in power_sweep(A, cfg):
        out.power_runs += 1
        if not accept(res, f"power run {out.power_runs}"):
            break
    else:
        if len(found) < n:
            out.diagnostics.append(f"power run {out.power_runs + 1}: could not build a deflated start")

    rng = np.random.default_rng(cfg.seed + 7919)
    while len(found) < n and out.shift_attempts < 10 * n:
        q = sample_gershgorin(A, rng)[0]
        if any(abs(q - p.lam) < DEDUP_TOL for p in found):
            continue
        out.shift_attempts += 1
        label = f"shift {out.shift_attempts} (q = {q:.4g})"
        try:
            res = shifted_inverse_power(
                A, q, None, replace(tight, seed=cfg.seed + 1000 + out.shift_attempts), found=found, accept_tol=cfg.delta_tol
            )
        except (SingularMatrixError, DeflationError) as exc:
            out.diagnostics.append(f"{label}: {exc}")
            continue
        accept(res, label)

    if len(found) < n:
        out.diagnostics.append(f"found {len(found)} of {n} eigenpairs")
    out.pairs = sorted(found, key=lambda p: -abs(p.lam))
    return out
