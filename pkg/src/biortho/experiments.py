"""End-to-end runs of the three reference experiments.

Each runner solves the experiment's matrix with the flow and power methods,
compares every result with the QR oracle and with the expected values, and
returns an ExperimentReport whose checks carry the declared tolerances.
Eigenvalue ranks are given both by real part (the flow's ordering) and by
modulus (the power method's ordering).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import serialize
from .errors import SingularMatrixError
from .flow import flow_sweep, solve_flow
from .matrices import (
    E1_EIGENVALUES,
    E2_TARGETS,
    SWANSON_REFERENCE,
    AlphaSequence,
    SwansonParams,
    _sig_fig_match,
    e1_fixture,
    hessenberg,
    oscillator_levels,
    swanson,
    swanson_checkerboard,
)
from .oracle import SpectralData, qr_spectrum
from .power import full_spectrum, power_iterate, power_sweep, sample_gershgorin, shifted_inverse_power
from .structures import FlowResult, Mode, SolverConfig

E1_TOL = 1e-3
E3_TOL = 1e-6
E2_REL_TOL = 0.05
E2_TOLERANCES = (1e-10, 1e-12, 1e-14)
E2_READINGS = {
    "exp_minus_k_squared": ("exp_minus_k_squared",),
    # 1/(k^2)! is the primary reading; 1/(k!)^2 is the alternative.
    "inverse_factorial_k_squared": ("inverse_factorial_k_squared", "inverse_factorial_squared"),
}
DRIFT_REL = 1e-6


@dataclass
class ExperimentReport:
    experiment_id: str
    matrix_metadata: dict = field(default_factory=dict)
    records: list = field(default_factory=list)
    checks: list = field(default_factory=list)
    traces: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks)

    def check(self, name, passed, detail=""):
        self.checks.append({"name": name, "passed": bool(passed), "detail": detail})
        return bool(passed)

    def as_dict(self):
        return {
            "experiment_id": self.experiment_id,
            "matrix_metadata": self.matrix_metadata,
            "passed": self.passed,
            "checks": self.checks,
            "records": self.records,
        }

    def write(self, out_dir) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for name, trace in self.traces.items():
            serialize.write_trace(out / f"{self.experiment_id}_{name}.trace.jsonl", trace)
        return serialize.write_json(out / f"{self.experiment_id}_report.json", self.as_dict())


def _ranks(spec: SpectralData, lam):
    """1-based ranks of the oracle eigenvalue nearest lam, by real part and by modulus."""
    i = int(np.argmin(np.abs(spec.eigenvalues - lam)))
    by_mod = list(spec.by_modulus())
    return complex(spec.eigenvalues[i]), i + 1, by_mod.index(i) + 1


def _record(report, run, method, res, A, spec, expected=None, elapsed=None, deterministic=False, **extra):
    rec = {"run": run, "method": method, "status": res.status.value, "diagnostic": res.diagnostic}
    if isinstance(res, FlowResult):
        rec.update(steps=res.steps, final_time=res.final_time, chi=res.chi, max_pairing_drift=res.max_pairing_drift)
    else:
        rec["iterations"] = res.iterations
    if res.pair is not None:
        lam = complex(res.pair.lam)
        r_phi, r_psi = res.pair.residuals(A)
        o_lam, rank_re, rank_mod = _ranks(spec, lam)
        rec.update(
            **{"lambda": lam},
            residual_phi=r_phi,
            residual_psi=r_psi,
            oracle_lambda=o_lam,
            oracle_delta=abs(lam - o_lam),
            rank_real=rank_re,
            rank_modulus=rank_mod,
        )
        if expected is not None:
            rec["expected_lambda"] = complex(expected)
            rec["expected_delta"] = abs(lam - expected)
    if elapsed is not None and not deterministic:
        rec["seconds"] = elapsed
    rec.update(extra)
    report.records.append(rec)
    report.traces[run] = res.trace
    return rec


def _timed(fn, *args, **kwargs):
    t0 = time.perf_counter()
    out = fn(*args, **kwargs)
    return out, time.perf_counter() - t0


def _drift_check(report, results, label):
    worst = 0.0
    for res in results:
        if isinstance(res, FlowResult) and res.chi != 0:
            worst = max(worst, res.max_pairing_drift / abs(res.chi))
    return report.check(f"{label}: pairing conserved", worst <= DRIFT_REL, f"max |<x_psi, x_phi> - chi| / |chi| = {worst:.2e}")


def _nearest(values, target):
    values = list(values)
    if not values:
        return None, np.inf
    d = [abs(v - target) for v in values]
    i = int(np.argmin(d))
    return values[i], d[i]


def shift_search(A, targets, cfg: SolverConfig, tol, max_attempts=None):
    """Random Gershgorin shifts until every target eigenvalue has been hit.

    Each attempt runs an undeflated shifted inverse power iteration. Returns
    (results, attempts, hits) where hits maps target index to the attempt
    number that first reached it within ``tol``.
    """
    A = np.asarray(A, dtype=np.complex128)
    n = A.shape[0]
    max_attempts = 10 * n if max_attempts is None else max_attempts
    rng = np.random.default_rng(cfg.seed)
    results, hits = [], {}
    attempts = 0
    while len(hits) < len(targets) and attempts < max_attempts:
        attempts += 1
        q = sample_gershgorin(A, rng)[0]
        try:
            res = shifted_inverse_power(A, q, None, replace(cfg, seed=cfg.seed + attempts))
        except SingularMatrixError:
            continue
        results.append((q, res))
        if res.converged and res.pair is not None:
            for k, t in enumerate(targets):
                if k not in hits and abs(res.pair.lam - t) <= tol:
                    hits[k] = attempts
    return results, attempts, hits


def run_e1(seed: int = 0, deterministic: bool = False) -> ExperimentReport:
    """7x7 complex matrix: flow for the extreme real parts, power plus shifts for the rest."""
    _, _, A = e1_fixture()
    spec = qr_spectrum(A)
    expected = np.array(E1_EIGENVALUES)
    rep = ExperimentReport("e1", {"kind": "e1", "n": 7, "source": "reference R + iT"})
    cfg = SolverConfig(seed=seed)

    res, dt = _timed(solve_flow, A, cfg)
    rec = _record(rep, "flow_largest", "flow", res, A, spec, expected[0], dt, deterministic)
    ok = res.converged and abs(res.pair.lam - expected[0]) <= E1_TOL
    rep.check("flow largest real part = expected lambda_1", ok, f"lambda = {rec.get('lambda')}")
    rep.check("flow largest residual < 1e-8", res.converged and max(res.pair.residuals(A)) < 1e-8)
    if not deterministic:
        rep.check("flow largest desk runtime < 10 s", dt < 10.0, f"{dt:.2f} s")
    flows = [res]

    res = solve_flow(A, replace(cfg, mode=Mode.SMALLEST))
    rec = _record(rep, "flow_smallest", "flow", res, A, spec, expected[6])
    rep.check("flow smallest real part = expected lambda_7", res.converged and abs(res.pair.lam - expected[6]) <= E1_TOL, f"lambda = {rec.get('lambda')}")
    flows.append(res)
    _drift_check(rep, flows, "e1 flows")

    res = power_iterate(A, None, cfg)
    rec = _record(rep, "power_dominant", "power", res, A, spec, expected[1])
    rep.check("power dominant modulus = expected lambda_2", res.converged and abs(res.pair.lam - expected[1]) <= E1_TOL, f"lambda = {rec.get('lambda')}")

    targets = [expected[4], expected[6]]
    runs, attempts, hits = shift_search(A, targets, cfg, E1_TOL)
    for k, (q, r) in enumerate(runs):
        _record(rep, f"shift_{k + 1}", "inverse", r, A, spec, shift=complex(q))
    rep.check(
        "shifted inverse power reaches lambda_5 and lambda_7",
        len(hits) == 2,
        f"{attempts} random Gershgorin shifts; first hits at attempts {dict(sorted(hits.items()))}",
    )

    fs = full_spectrum(A, cfg)
    found = fs.eigenvalues
    worst = max(_nearest(found, p)[1] for p in expected)
    rep.records.append(
        {
            "run": "full_spectrum",
            "method": "power+deflation+shifts",
            "eigenvalues": list(found),
            "power_runs": fs.power_runs,
            "shift_attempts": fs.shift_attempts,
            "diagnostics": fs.diagnostics,
        }
    )
    rep.check("full spectrum matches all seven expected values", len(found) == 7 and worst <= E1_TOL, f"worst |delta| = {worst:.2e}")
    return rep


def _e2_matrix(kind: str, n: int = 15):
    D = hessenberg(AlphaSequence(kind), n)
    return D, {"kind": "hessenberg", "alpha": kind, "n": n, "alpha_start": AlphaSequence(kind).start}


def run_e2(seed: int = 0, deterministic: bool = False) -> ExperimentReport:
    """Hessenberg matrices D{alpha_k}, n = 15: top three eigenvalues in modulus.

    The power sweep is repeated with tightening tolerances. The scaled left
    residual of these extremely non-normal matrices cannot be driven to
    1e-14, so only the right residual is tested and the pairing floor is
    lifted. Each reading is compared with the expected values at 5%
    relative error; a reading counts only if all three agree.
    """
    rep = ExperimentReport("e2", {"readings": {k: list(v) for k, v in E2_READINGS.items()}})
    best = {}
    for target_kind, readings in E2_READINGS.items():
        targets = E2_TARGETS[target_kind]
        for kind in readings:
            D, meta = _e2_matrix(kind)
            rep.matrix_metadata[kind] = meta
            spec = qr_spectrum(D)
            top_oracle = [complex(spec.eigenvalues[i]) for i in spec.by_modulus()[:3]]
            found = []
            for tol in E2_TOLERANCES:
                cfg = SolverConfig(seed=seed, delta_tol=tol, pairing_floor=1e-300, check_left=False)
                found = []
                for k, res in enumerate(power_sweep(D, cfg, count=3)):
                    _record(rep, f"{kind}_tol{tol:.0e}_power{k + 1}", "power", res, D, spec, delta_tol=tol)
                    if res.converged and _nearest(found, res.pair.lam)[1] > 1e-6 * abs(res.pair.lam):
                        found.append(complex(res.pair.lam))
            for mode in (Mode.LARGEST, Mode.SMALLEST):
                res = solve_flow(D, SolverConfig(seed=seed, delta_tol=E2_TOLERANCES[0], mode=mode))
                _record(rep, f"{kind}_flow_{mode.value}", "flow", res, D, spec)
            rel = [abs(f - t) / abs(t) for f, t in zip(found, targets)]
            rel_mod = [abs(abs(o) - abs(t)) / abs(t) for o, t in zip(top_oracle, targets)]
            ok = len(found) == 3 and max(rel) <= E2_REL_TOL
            rep.records.append(
                {
                    "run": f"{kind}_summary",
                    "solver_top_three": found,
                    "oracle_top_three": top_oracle,
                    "expected": list(targets),
                    "relative_error": rel,
                    "oracle_modulus_relative_error": rel_mod,
                }
            )
            if target_kind not in best or ok:
                best[target_kind] = (kind, ok, found, rel, top_oracle)
    for target_kind, (kind, ok, found, rel, top_oracle) in best.items():
        fmt = lambda zs: "[" + ", ".join(f"{z.real:.4g}{z.imag:+.1g}j" for z in zs) + "]"
        detail = (
            f"reading {kind}: solver {fmt(found)}, oracle {fmt(top_oracle)}, "
            f"expected {list(E2_TARGETS[target_kind])}, relative errors {[round(r, 3) for r in rel]}"
        )
        rep.check(f"top three of D{{{target_kind}}} within 5% of expected", ok, detail)
    return rep


def run_e3(seed: int = 0, deterministic: bool = False, p: SwansonParams | None = None) -> ExperimentReport:
    """Truncated Swanson Hamiltonian: both methods recover the oscillator levels."""
    p = p or SwansonParams()
    H, meta = swanson(p)
    spec = qr_spectrum(H)
    levels = oscillator_levels(p.N)
    rep = ExperimentReport("e3", meta)
    cfg = SolverConfig(seed=seed)

    if (p.N, p.theta) == (SWANSON_REFERENCE.shape[0], 0.4):
        rep.check("matrix matches the reference one to 3 significant figures", _sig_fig_match(H, SWANSON_REFERENCE))
    rep.check("odd-parity entries vanish", swanson_checkerboard(H))
    rep.check("oracle spectrum is real", spec.is_real(E3_TOL))

    def spectrum_check(label, vals):
        vals = np.asarray(vals)
        worst = max(_nearest(vals, lv)[1] for lv in levels) if vals.size else np.inf
        imag = float(np.max(np.abs(vals.imag))) if vals.size else np.inf
        ok = vals.size == p.N and worst <= E3_TOL and imag < E3_TOL
        rep.check(f"{label} recovers the half-integer spectrum", ok, f"{vals.size} values, worst |delta| = {worst:.2e}, max |Im| = {imag:.2e}")

    flows = flow_sweep(H, cfg)
    for k, res in enumerate(flows):
        _record(rep, f"flow_sweep_{k + 1}", "flow", res, H, spec, levels[p.N - 1 - k])
    spectrum_check("flow sweep", [r.pair.lam for r in flows if r.converged])
    _drift_check(rep, flows, "e3 flows")

    fs = full_spectrum(H, cfg)
    rep.records.append(
        {"run": "full_spectrum", "method": "power+deflation+shifts", "eigenvalues": list(fs.eigenvalues), "diagnostics": fs.diagnostics}
    )
    spectrum_check("power sweep", fs.eigenvalues)

    runs, attempts, hits = shift_search(H, list(levels), cfg, E3_TOL)
    for k, (q, r) in enumerate(runs):
        _record(rep, f"shift_{k + 1}", "inverse", r, H, spec, shift=complex(q))
    hit_vals = [r.pair.lam for _, r in runs if r.converged and r.pair is not None]
    uniq = []
    for v in hit_vals:
        if _nearest(uniq, v)[1] > E3_TOL:
            uniq.append(v)
    spectrum_check(f"shifted inverse power ({attempts} shifts)", uniq)
    return rep


RUNNERS = {"e1": run_e1, "e2": run_e2, "e3": run_e3}
