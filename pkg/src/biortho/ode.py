"""Variable-step, variable-order Adams-Bashforth-Moulton integrator.

PECE scheme on complex state vectors: an order-k Adams-Bashforth predictor over
the last k right-hand-side values, one evaluation, an order-(k+1) Adams-Moulton
corrector over the same history plus the predicted point, and a final
evaluation. The corrected value is kept (local extrapolation) and the
predictor/corrector gap, divided by the step (error per unit step), is the
error estimate; this keeps the endpoint error roughly proportional to the
tolerance. Orders run 1..12.

The history is started (and rebuilt after repeated step failures) with a few
equally spaced classical Runge-Kutta steps, each checked by step doubling, and
the multistep phase then begins at order 4. Step growth is capped at 1.5x per
step and never follows a step-size change directly, which keeps the history
close to equally spaced. The order is raised by at most one, and only after
k + 1 accepted steps at order k.

Quadrature weights for the non-uniform history are obtained by integrating the
Lagrange basis with Gauss-Legendre nodes, which is exact for the polynomial
degrees involved and avoids Vandermonde solves.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import IntegrationError, ValidationError

MAX_ORDER = 12
START_STEPS = 4
# Step growth is applied only when the estimate allows at least GROW_MIN and
# is capped at GROW_MAX per step; larger jumps destabilize the history.
GROW_MIN = 1.1
GROW_MAX = 1.5
# Start-up step-doubling gaps below this many ulps of |y| are treated as zero.
ROUNDOFF_ULPS = 16

# 8-point rule is exact through degree 15; the widest corrector has 14 nodes.
_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)
_GL_X = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W


class Termination(str, enum.Enum):
    STOP_PREDICATE = "stop_predicate"
    MAX_TIME = "max_time"
    MAX_STEPS = "max_steps"
    STEP_UNDERFLOW = "step_underflow"


@dataclass(frozen=True)
class IntegratorConfig:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    initial_step: float = 1e-3
    max_step: float = 1.0
    max_time: float = 1e4
    max_steps: int = 10_000_000
    max_order: int = MAX_ORDER

    def __post_init__(self):
        for name in ("abs_tol", "rel_tol", "initial_step", "max_step", "max_time", "max_steps"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"IntegratorConfig.{name} must be positive")
        if self.abs_tol > self.rel_tol * 1e3:
            raise ValidationError("abs_tol must not exceed rel_tol * 1e3")
        if not 1 <= self.max_order <= MAX_ORDER:
            raise ValidationError(f"max_order must lie in 1..{MAX_ORDER}")


@dataclass
class Trajectory:
    t: list = field(default_factory=list)
    y: list = field(default_factory=list)
    terminated_by: Termination | None = None
    rhs_evaluations: int = 0
    rejected_steps: int = 0
    orders: list = field(default_factory=list)

    @property
    def final_t(self) -> float:
        return self.t[-1]

    @property
    def final_y(self) -> np.ndarray:
        return self.y[-1]

    def __len__(self):
        return len(self.t)


def _weights(nodes: np.ndarray) -> np.ndarray:
    """Integrals over [0, 1] of the Lagrange basis polynomials on ``nodes``."""
    m = nodes.size
    if m == 1:
        return np.ones(1)
    diff = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(diff, 1.0)
    denom = np.prod(diff, axis=1)
    # prod_{i != j} (x_q - nodes_i) from prefix and suffix products
    d = _GL_X[:, None] - nodes[None, :]          # (q, m)
    ones = np.ones((_GL_X.size, 1))
    pre = np.cumprod(np.hstack((ones, d[:, :-1])), axis=1)
    suf = np.cumprod(np.hstack((ones, d[:, :0:-1])), axis=1)[:, ::-1]
    return (_GL_W @ (pre * suf)) / denom


def _increments(tau, hist_f, f_new, m):
    """Adams-Bashforth and Adams-Moulton increments over the m newest samples.

    The error estimate compares these increments rather than y_c - y_p; that
    difference cancels the common y and leaves rounding noise of order
    eps*|y|, which per unit step swamps the tolerance once h is small.
    """
    b = _weights(tau[:m])
    a = _weights(np.concatenate(([1.0], tau[:m])))
    inc_p = b @ hist_f[:m]
    inc_c = a[0] * f_new + a[1:] @ hist_f[:m]
    return inc_p, inc_c, float(np.linalg.norm(inc_c - inc_p))


def integrate(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    y0,
    cfg: IntegratorConfig | None = None,
    stop: Callable[[float, np.ndarray], bool] | None = None,
    t0: float = 0.0,
    store: bool = True,
) -> Trajectory:
    """Integrate y' = rhs(t, y) from ``t0`` until ``stop`` holds or a cap fires.

    ``stop`` is consulted at accepted steps only. The step is clamped so the
    final time never exceeds ``t0 + cfg.max_time``; that cap therefore lands
    exactly on the final time. With ``store=False`` only the initial and final
    samples are kept.
    """
    cfg = cfg or IntegratorConfig()
    y = np.array(y0, dtype=np.complex128)
    if y.ndim != 1 or not np.all(np.isfinite(y)):
        raise IntegrationError("initial state must be a finite 1-D vector")
    t = float(t0)
    t_end = t0 + cfg.max_time
    traj = Trajectory()
    traj.t.append(t)
    traj.y.append(y.copy())

    def f(tt, yy):
        out = np.asarray(rhs(tt, yy), dtype=np.complex128)
        traj.rhs_evaluations += 1
        if out.shape != yy.shape:
            raise IntegrationError(f"rhs returned shape {out.shape}, expected {yy.shape}")
        if not np.all(np.isfinite(out)):
            raise IntegrationError(f"rhs produced non-finite values at t={tt!r}")
        return out

    if stop is not None and stop(t, y):
        traj.terminated_by = Termination.STOP_PREDICATE
        return traj

    def rk4(tt, yy, ff, hh):
        k1 = ff
        k2 = f(tt + 0.5 * hh, yy + 0.5 * hh * k1)
        k3 = f(tt + 0.5 * hh, yy + 0.5 * hh * k2)
        k4 = f(tt + hh, yy + hh * k3)
        return yy + (hh / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    def tol_scale(*vs):
        return cfg.abs_tol + cfg.rel_tol * max(np.linalg.norm(v) for v in vs)

    def gap(a, b):
        # Differences at rounding level carry no truncation information; left
        # in, they grow like 1/h in the per-unit-step estimate and can drive
        # the step to underflow at tight tolerances.
        noise = ROUNDOFF_ULPS * np.finfo(float).eps * max(np.linalg.norm(a), np.linalg.norm(b))
        return max(float(np.linalg.norm(a - b)) - noise, 0.0)

    def startup(tt, yy, hh):
        """RK4 steps at constant size, each checked by step doubling.

        Returns (ts, fs, ys, h) with START_STEPS + 1 equally spaced samples, or
        None when the step underflows. Shortens the run near t_end.
        """
        while True:
            hh = min(hh, cfg.max_step, (t_end - tt) / START_STEPS)
            if hh <= 16.0 * np.finfo(float).eps * max(1.0, abs(tt)):
                return None
            s_t, s_y, s_f = [tt], [yy], [f(tt, yy)]
            ok = True
            for _ in range(START_STEPS):
                full = rk4(s_t[-1], s_y[-1], s_f[-1], hh)
                mid = rk4(s_t[-1], s_y[-1], s_f[-1], 0.5 * hh)
                two = rk4(s_t[-1] + 0.5 * hh, mid, f(s_t[-1] + 0.5 * hh, mid), 0.5 * hh)
                err = gap(two, full) / 15.0 / (tol_scale(s_y[-1], two) * hh)
                if not np.isfinite(err) or err > 1.0:
                    traj.rejected_steps += 1
                    ok = False
                    break
                s_t.append(s_t[-1] + hh)
                s_y.append(two)
                s_f.append(f(s_t[-1], two))
            if ok:
                return s_t, s_f, s_y, hh
            hh *= 0.25

    def factor(e, q):
        return 10.0 if e == 0.0 else 0.9 * e ** (-1.0 / q)

    h = min(cfg.initial_step, cfg.max_step)
    steps = 0
    fs: list = []
    spans: list = []                           # step sizes between samples in fs
    restart = True

    while True:
        if restart and t_end - t <= 16.0 * np.finfo(float).eps * max(1.0, abs(t)):
            traj.terminated_by = Termination.MAX_TIME
            break
        if restart:
            boot = startup(t, y, h)
            if boot is None:
                traj.terminated_by = Termination.STEP_UNDERFLOW
                break
            b_t, b_f, b_y, h = boot
            fs, spans = list(b_f), [h] * (len(b_f) - 1)
            done = False
            for tt, yy in zip(b_t[1:], b_y[1:]):
                t, y = tt, yy
                steps += 1
                traj.orders.append(0)
                if store:
                    traj.t.append(t)
                    traj.y.append(y.copy())
                if stop is not None and stop(t, y):
                    traj.terminated_by = Termination.STOP_PREDICATE
                    done = True
                    break
            if done:
                break
            k = min(START_STEPS, cfg.max_order)
            const_h = 0
            at_order = 0
            fails = 0
            restart = False
            if t >= t_end:
                traj.terminated_by = Termination.MAX_TIME
                break
        if steps >= cfg.max_steps:
            traj.terminated_by = Termination.MAX_STEPS
            break
        remaining = t_end - t
        last = h >= remaining
        if last:
            h = remaining
        if h <= 16.0 * np.finfo(float).eps * max(1.0, abs(t)):
            traj.terminated_by = Termination.STEP_UNDERFLOW
            break

        # Nodes come from the step sizes, not from differences of the times:
        # near t = 1 with h ~ 1e-9, t_i - t carries a relative error of 1e-7.
        hist_f = np.array(fs[::-1])            # newest first
        tau = -np.concatenate(([0.0], np.cumsum(spans[::-1]))) / h
        k = min(k, len(fs))

        t_new = t + h
        y_p = y + h * (_weights(tau[:k]) @ hist_f[:k])
        f_p = f(t_new, y_p)
        _, inc_c, diff = _increments(tau, hist_f, f_p, k)
        y_c = y + h * inc_c
        scale = tol_scale(y, y_c)
        err = diff / scale

        if not np.isfinite(err) or err > 1.0:
            traj.rejected_steps += 1
            fails += 1
            const_h = 0
            if fails >= 3:
                # Persistent failure: rebuild the history from here.
                h *= 0.25
                restart = True
                continue
            h *= max(0.1, min(0.5, 0.9 * err ** (-1.0 / k))) if np.isfinite(err) else 0.25
            continue

        # Neighbouring-order estimates from the same evaluations.
        err_lo = err_hi = np.inf
        if k > 1:
            err_lo = _increments(tau, hist_f, f_p, k - 1)[2] / scale
        if k < cfg.max_order and len(fs) > k and at_order >= k + 1:
            err_hi = _increments(tau, hist_f, f_p, k + 1)[2] / scale

        t = t_new if not last else t_end
        y = y_c
        spans.append(h)
        fs.append(f(t, y))
        if len(fs) > cfg.max_order + 2:
            del spans[0]
            del fs[0]
        steps += 1
        traj.orders.append(k)
        fails = 0
        if store:
            traj.t.append(t)
            traj.y.append(y.copy())

        fac, k_new = factor(err, k), k
        if np.isfinite(err_lo) and factor(err_lo, k - 1) > fac:
            fac, k_new = factor(err_lo, k - 1), k - 1
        if np.isfinite(err_hi) and factor(err_hi, k + 1) > fac:
            fac, k_new = factor(err_hi, k + 1), k + 1
        if k_new != k:
            const_h = 0
            at_order = 0
        else:
            at_order += 1
        k = k_new
        if fac >= GROW_MIN and const_h >= 1 and h < cfg.max_step:
            h = min(cfg.max_step, min(GROW_MAX, fac) * h)
            const_h = 0
        elif fac < 1.0:
            h *= max(0.5, fac)
            const_h = 0
        else:
            const_h += 1

        if stop is not None and stop(t, y):
            traj.terminated_by = Termination.STOP_PREDICATE
            break
        if last:
            traj.terminated_by = Termination.MAX_TIME
            break

    if not store and traj.t[-1] != t:
        traj.t.append(t)
        traj.y.append(y.copy())
    return traj
