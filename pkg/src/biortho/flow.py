"""Eigenpairs as equilibria of a coupled nonlinear flow.

For Hermitian A the flow

    x' = ||x||^2 A x - <x, A x> x

conserves ||x|| and drives x to an eigenvector of the largest eigenvalue. For
general A the right and left vectors evolve together,

    x_phi' = chi A x_phi - <x_psi, A x_phi> x_phi,
    x_psi' = conj(chi) A^dagger x_psi - <x_phi, A^dagger x_psi> x_psi,

where chi = <x_psi(0), x_phi(0)> is frozen. The pairing <x_psi, x_phi> is then
conserved and the pair converges to eigenvectors of A and A^dagger for the
eigenvalue with the largest real part of chi * lambda. The eigenvalue is read
off as <x_psi, A x_phi> / <x_psi, x_phi>.
"""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from .errors import DeflationError, DegeneratePairingError, NotHermitianError
from .linalg import (
    adjoint,
    as_cmatrix,
    as_cvector,
    bi_rayleigh,
    binormalize,
    inner,
    is_hermitian,
    norm2,
)
from .ode import Termination, integrate
from .structures import BiorthoPair, ConvergenceTrace, FlowResult, Mode, SolverConfig, Status

# Stagnation: best residual improves by < 1% over this many accepted steps...
STAGNATION_STEPS = 100
# ...and over at least this many natural time units 1 / (|chi| ||A||)...
STAGNATION_TIME_UNITS = 1000.0
# ...and the largest residual in the newer half of that window is at least
# this fraction of the largest in the older half. Without it an early dip in
# an oscillating but slowly decaying residual reads as stagnation.
STAGNATION_ENVELOPE = 0.99
# A residual this many times its best value means the trajectory is running
# away (finite-time blow-up of the nonlinear flow); the run ends as
# step_underflow instead of creeping towards the singularity.
DIVERGENCE_FACTOR = 1e8
# Near the equilibrium the residual settles at about the integrator's rel_tol,
# so the integrator runs at most this fraction of the residual to be reached
# (never below INTEGRATOR_TOL_MIN).
INTEGRATOR_TOL_MARGIN = 0.1
INTEGRATOR_TOL_MIN = 1e-13


def _envelope_flat(hist) -> bool:
    """True when the residual maxima of the two halves of the window agree."""
    t_mid = 0.5 * (hist[0][0] + hist[-1][0])
    older = max(r for t, _, r in hist if t < t_mid)
    newer = max(r for t, _, r in hist if t >= t_mid)
    return newer >= STAGNATION_ENVELOPE * older


def hermitian_rhs(A, x) -> np.ndarray:
    """||x||^2 A x - <x, A x> x for Hermitian A."""
    A = as_cmatrix(A)
    if not is_hermitian(A):
        raise NotHermitianError("hermitian_rhs needs a Hermitian matrix; use coupled_rhs instead")
    x = as_cvector(x, "x")
    Ax = A @ x
    return inner(x, x).real * Ax - inner(x, Ax) * x


def coupled_rhs(A, x_phi, x_psi, chi) -> tuple[np.ndarray, np.ndarray]:
    """Right-hand sides of the coupled flow with frozen pairing ``chi``."""
    A = np.asarray(A, dtype=np.complex128)
    Ax = A @ x_phi
    Ady = A.conj().T @ x_psi
    chi = complex(chi)
    return (
        chi * Ax - np.vdot(x_psi, Ax) * x_phi,
        np.conj(chi) * Ady - np.vdot(x_phi, Ady) * x_psi,
    )


def random_start(n: int, rng) -> np.ndarray:
    return rng.uniform(-1, 1, n) + 1j * rng.uniform(-1, 1, n)


def _projectors(found, n):
    """P = I - sum phi_j psi_j^dagger (annihilates found right vectors' dual directions)."""
    P = np.eye(n, dtype=np.complex128)
    for p in found:
        P -= np.outer(p.phi, p.psi.conj())
    return P


def deflated_initials(found, n: int, seed=None, rng=None, independent=False):
    """Random start pair biorthogonal to every found pair.

    Returns (x_phi, x_psi) with <psi_j, x_phi> = 0 and <phi_j, x_psi> = 0 for
    each found pair j. Raises DeflationError when the found pairs span C^n.
    """
    found = list(found)
    if len(found) >= n:
        raise DeflationError(f"{len(found)} found pairs already span C^{n}")
    rng = rng if rng is not None else np.random.default_rng(seed)
    P = _projectors(found, n)
    for _ in range(10):
        x = random_start(n, rng)
        y = random_start(n, rng) if independent else x.copy()
        xp = P @ x
        yp = P.conj().T @ y
        # Second pass removes rounding left over by the oblique projection.
        xp = P @ xp
        yp = P.conj().T @ yp
        if norm2(xp) > 1e-10 * norm2(x) and norm2(yp) > 1e-10 * norm2(y):
            return xp, yp
    raise DeflationError("random starts keep landing in the span of the found pairs")


def _bi_residuals(A, Ad, lam, x_phi, x_psi, floor):
    """Residuals of the bi-normalized version of (x_phi, x_psi)."""
    phi, psi = binormalize(x_phi, x_psi, floor)
    r_phi = np.linalg.norm(A @ phi - lam * phi)
    r_psi = np.linalg.norm(Ad @ psi - np.conj(lam) * psi)
    return float(r_phi), float(r_psi), phi, psi


def solve_flow(
    A, cfg: SolverConfig | None = None, found=(), x0=None, y0=None, accept_tol=None
) -> FlowResult:
    """Integrate the coupled flow until both residuals drop below ``cfg.delta_tol``.

    The start is drawn from ``cfg.seed`` unless ``x0`` (and optionally ``y0``)
    are given; by default x_psi(0) = x_phi(0). With ``found`` pairs the start is
    deflated and the vector field is projected so the deflated components stay
    zero. A Hermitian matrix with a shared start runs the single-vector flow.
    ``cfg.mode == "smallest"`` delegates to :func:`solve_flow_smallest`.

    If the residual stalls above ``delta_tol`` but below ``accept_tol``, the best
    pair seen is reported as converged (used when polishing deflation pairs).
    The reported pair is always the best one seen, not the last state.
    """
    cfg = cfg or SolverConfig()
    if cfg.mode is Mode.SMALLEST:
        return solve_flow_smallest(A, cfg, found=found, x0=x0, y0=y0, accept_tol=accept_tol)
    return _solve(as_cmatrix(A), cfg, list(found), x0, y0, accept_tol)


def solve_flow_smallest(
    A, cfg: SolverConfig | None = None, found=(), x0=None, y0=None, accept_tol=None
) -> FlowResult:
    """Smallest-real-part eigenpair: run the flow on -A and negate lambda."""
    cfg = cfg or SolverConfig()
    A = as_cmatrix(A)
    neg = [BiorthoPair(-p.lam, p.phi, p.psi) for p in found]
    res = _solve(-A, cfg, neg, x0, y0, accept_tol)
    if res.pair is not None:
        res.pair.lam = -res.pair.lam
    res.trace.lam = [-z for z in res.trace.lam]
    return res


def _integrator_config(cfg: SolverConfig, accept_tol: float):
    """cfg.integrator with rel_tol tightened below the residual the run must reach."""
    integ = cfg.integrator
    rel = max(min(integ.rel_tol, INTEGRATOR_TOL_MARGIN * accept_tol), INTEGRATOR_TOL_MIN)
    if rel >= integ.rel_tol:
        return integ
    return replace(integ, rel_tol=rel, abs_tol=min(integ.abs_tol, rel * integ.abs_tol / integ.rel_tol))


def _solve(A, cfg: SolverConfig, found, x0, y0, accept_tol=None) -> FlowResult:
    n = A.shape[0]
    accept_tol = cfg.delta_tol if accept_tol is None else max(accept_tol, cfg.delta_tol)
    Ad = adjoint(A)
    rng = np.random.default_rng(cfg.seed)
    if x0 is not None:
        x_phi0 = as_cvector(x0, "x0").copy()
        if x_phi0.size != n:
            raise DeflationError(f"x0 has length {x_phi0.size}, expected {n}")
        if y0 is not None:
            x_psi0 = as_cvector(y0, "y0").copy()
        elif cfg.independent_pairs:
            x_psi0 = random_start(n, rng)
        else:
            x_psi0 = x_phi0.copy()
    else:
        x_phi0, x_psi0 = deflated_initials(found, n, rng=rng, independent=cfg.independent_pairs)

    chi = inner(x_psi0, x_phi0)
    if abs(chi) < cfg.pairing_floor:
        raise DegeneratePairingError(chi, cfg.pairing_floor)
    if x0 is None or y0 is None:
        # Make chi real positive so the flow ranks eigenvalues by Re(lambda);
        # a complex chi would rank them by Re(chi * lambda) instead.
        x_psi0 = x_psi0 * (chi / abs(chi))
        chi = inner(x_psi0, x_phi0)

    hermitian = not found and is_hermitian(A) and np.array_equal(x_phi0, x_psi0)
    P = _projectors(found, n) if found else None
    Pd = P.conj().T if found else None
    # Adding s I to A adds s (chi - <x_psi, x_phi>) x_phi to the field, which is
    # zero on exact trajectories. With Re(chi s) >= |chi| ||A|| it turns the
    # otherwise neutral-or-repelling pairing deviation into a decaying mode.
    sigma = float(np.linalg.norm(A, 2)) * np.conj(chi) / abs(chi)
    A_s = A + sigma * np.eye(n)

    def rhs(_t, y):
        if hermitian:
            Ax = A @ y
            return np.vdot(y, y).real * Ax - np.vdot(y, Ax) * y
        r_phi, r_psi = coupled_rhs(A_s, y[:n], y[n:], chi)
        if P is not None:
            r_phi = P @ r_phi
            r_psi = Pd @ r_psi
        return np.concatenate((r_phi, r_psi))

    def split(y):
        return (y, y) if hermitian else (y[:n], y[n:])

    trace = ConvergenceTrace()
    anorm = max(float(np.linalg.norm(A, 2)), 1e-300)
    window_time = STAGNATION_TIME_UNITS / (abs(chi) * anorm)
    state = {
        "status": None,
        "best": np.inf,
        "best_hist": [],
        "drift": 0.0,
        "pair": None,
        "steps": 0,
        "diag": "",
    }

    def monitor(t, y):
        x_phi, x_psi = split(y)
        p = inner(x_psi, x_phi)
        state["drift"] = max(state["drift"], abs(p - chi) / abs(chi))
        try:
            lam = bi_rayleigh(A, x_psi, x_phi, cfg.pairing_floor)
            r_phi, r_psi, phi, psi = _bi_residuals(A, Ad, lam, x_phi, x_psi, cfg.pairing_floor)
        except DegeneratePairingError as exc:
            state["status"] = Status.PAIRING_COLLAPSE
            state["diag"] = str(exc)
            return True
        trace.append(t, lam, r_phi, r_psi)
        state["steps"] += 1
        r = max(r_phi, r_psi)
        if r < state["best"] or state["pair"] is None:
            state["pair"] = (lam, phi, psi)
        if r < cfg.delta_tol:
            state["pair"] = (lam, phi, psi)
            state["status"] = Status.CONVERGED
            return True
        state["best"] = min(state["best"], r)
        if r > DIVERGENCE_FACTOR * state["best"]:
            state["status"] = Status.STEP_UNDERFLOW
            state["diag"] = (
                f"residual {r:.3e} at t = {t:.4g} exceeds {DIVERGENCE_FACTOR:.0e} times its best "
                f"{state['best']:.3e}; the trajectory is diverging"
            )
            return True
        hist = state["best_hist"]
        hist.append((t, state["best"], r))
        if len(hist) > STAGNATION_STEPS:
            # Drop samples so the window spans >= STAGNATION_STEPS steps and window_time.
            while len(hist) > STAGNATION_STEPS + 1 and t - hist[1][0] >= window_time:
                hist.pop(0)
            t_old, best_old, _ = hist[0]
            if t - t_old >= window_time and state["best"] > 0.99 * best_old and _envelope_flat(hist):
                if state["best"] < accept_tol:
                    state["status"] = Status.CONVERGED
                    state["diag"] = f"residual floor {state['best']:.3e} reached before the target"
                    return True
                state["status"] = Status.MAX_TIME
                state["diag"] = (
                    f"residual stagnated at {state['best']:.3e} over t in [{t_old:.4g}, {t:.4g}]; "
                    "likely a tie in real part between leading eigenvalues"
                )
                return True
        return False

    y0_state = x_phi0 if hermitian else np.concatenate((x_phi0, x_psi0))
    traj = integrate(rhs, y0_state, _integrator_config(cfg, accept_tol), stop=monitor, store=False)

    status = state["status"]
    if status is None:
        status = {
            Termination.MAX_TIME: Status.MAX_TIME,
            Termination.MAX_STEPS: Status.MAX_TIME,
            Termination.STEP_UNDERFLOW: Status.STEP_UNDERFLOW,
        }.get(traj.terminated_by, Status.MAX_TIME)
        if not state["diag"]:
            state["diag"] = f"integration ended by {traj.terminated_by.value}"
    pair = None
    if state["pair"] is not None:
        lam, phi, psi = state["pair"]
        pair = BiorthoPair(complex(lam), phi, psi)
    return FlowResult(
        pair=pair,
        trace=trace,
        status=status,
        chi=complex(chi),
        max_pairing_drift=state["drift"],
        final_time=traj.final_t,
        steps=state["steps"],
        diagnostic=state["diag"],
    )


# Pairs used for deflation are converged this much below delta_tol, since
# their error sets the residual floor of every later deflated run.
SWEEP_TIGHTEN = 1e-3


def flow_sweep(A, cfg: SolverConfig | None = None, count=None):
    """Successive eigenpairs in decreasing real part via deflated flows.

    Each run starts biorthogonal to the pairs already found and is converged
    to ``SWEEP_TIGHTEN * delta_tol``. Returns the list of FlowResults; stops at
    the first run that does not converge.
    """
    cfg = cfg or SolverConfig()
    tight = replace(cfg, delta_tol=cfg.delta_tol * SWEEP_TIGHTEN)
    A = as_cmatrix(A)
    n = A.shape[0]
    count = n if count is None else count
    found, results = [], []
    for i in range(count):
        res = solve_flow(A, replace(tight, seed=cfg.seed + i), found=found, accept_tol=cfg.delta_tol)
        results.append(res)
        if not res.converged:
            break
        found.append(res.pair)
    return results
