"""Command-line front end: generate, solve, experiment, oracle, plot.

Exit codes: 0 converged or passed; 1 invalid input or failed acceptance
check; 2 no convergence (time, iteration or step-size limit); 3 breakdown,
dominance tie or pairing collapse; 4 file I/O failure. BIORTHO_SEED, when
set, overrides --seed.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import serialize
from .errors import BiorthoError, FormatError, SingularMatrixError
from .experiments import RUNNERS
from .flow import solve_flow
from .matrices import (
    AlphaKind,
    AlphaSequence,
    SwansonParams,
    e1_fixture,
    hessenberg,
    is_upper_hessenberg,
    random_complex,
    random_hermitian,
    swanson,
)
from .ode import IntegratorConfig
from .oracle import qr_spectrum
from .power import power_iterate, shifted_inverse_power
from .structures import Mode, SolverConfig, Status

EXIT_OK, EXIT_INVALID, EXIT_NO_CONVERGENCE, EXIT_BREAKDOWN, EXIT_IO = 0, 1, 2, 3, 4

STATUS_EXIT = {
    Status.CONVERGED: EXIT_OK,
    Status.MAX_TIME: EXIT_NO_CONVERGENCE,
    Status.MAX_ITER: EXIT_NO_CONVERGENCE,
    Status.STEP_UNDERFLOW: EXIT_NO_CONVERGENCE,
    Status.BREAKDOWN: EXIT_BREAKDOWN,
    Status.DOMINANCE_TIE: EXIT_BREAKDOWN,
    Status.PAIRING_COLLAPSE: EXIT_BREAKDOWN,
}

SEQUENCES = {
    "exp-k2": AlphaKind.EXP_MINUS_K_SQUARED,
    "fact-k2": AlphaKind.INVERSE_FACTORIAL_K_SQUARED,
    "fact-sq": AlphaKind.INVERSE_FACTORIAL_SQUARED,
    "geom": AlphaKind.GEOMETRIC_HALF,
}


def _seed(args) -> int:
    env = os.environ.get("BIORTHO_SEED")
    if env is not None and env.strip():
        try:
            return int(env)
        except ValueError as exc:
            raise FormatError(f"BIORTHO_SEED must be an integer, got {env!r}") from exc
    return args.seed


def _complex(text: str) -> complex:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("expected re,im")
    try:
        return complex(float(parts[0]), float(parts[1]))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _load(path):
    A, meta = serialize.load_matrix(path)
    if meta and meta.get("kind") == "hessenberg" and not is_upper_hessenberg(A):
        raise FormatError(f"{path}: metadata says Hessenberg but entries below the subdiagonal are nonzero")
    return A, meta


def cmd_generate(args) -> int:
    seed = _seed(args)
    kind = args.kind
    if kind == "e1":
        _, _, A = e1_fixture()
        meta = {"kind": "e1", "n": 7}
    elif kind == "swanson":
        A, meta = swanson(SwansonParams(args.n or 7, args.theta))
    elif kind == "hessenberg":
        seq = AlphaSequence(SEQUENCES[args.seq])
        n = args.n or 15
        A = hessenberg(seq, n)
        meta = {"kind": "hessenberg", "alpha": seq.kind.value, "alpha_start": seq.start, "n": n}
    elif kind == "random":
        n = args.n or 5
        A = random_complex(n, seed)
        meta = {"kind": "random", "n": n, "seed": seed}
    elif kind == "hermitian":
        n = args.n or 5
        A = random_hermitian(n, seed)
        meta = {"kind": "hermitian", "n": n, "seed": seed}
    elif kind == "rotation":
        A = np.array([[0.0, -1.0], [1.0, 0.0]], dtype=np.complex128)
        meta = {"kind": "rotation", "n": 2}
    else:
        n = args.n or 3
        A = np.eye(n, dtype=np.complex128)
        meta = {"kind": "identity", "n": n}
    path = serialize.save_matrix(args.out, A, meta)
    print(f"wrote {path} ({meta['kind']}, n = {A.shape[0]})")
    return EXIT_OK


def _solver_config(args) -> SolverConfig:
    integ = IntegratorConfig()
    if args.max_time is not None:
        integ = replace(integ, max_time=args.max_time)
    return SolverConfig(
        delta_tol=args.tol,
        max_iter=args.max_iter,
        seed=_seed(args),
        mode=Mode(args.mode),
        independent_pairs=args.independent_pairs,
        integrator=integ,
    )


def cmd_solve(args) -> int:
    A, _ = _load(args.matrix)
    cfg = _solver_config(args)
    found = [serialize.load_pair(p) for p in args.deflate]
    if args.method == "flow":
        res = solve_flow(A, cfg, found=found)
    elif args.method == "power":
        if cfg.mode is Mode.SMALLEST:
            raise FormatError("--mode smallest applies to the flow method only")
        res = power_iterate(A, None, cfg, found=found)
    else:
        if args.shift is None:
            raise FormatError("--method inverse requires --shift re,im")
        try:
            res = shifted_inverse_power(A, args.shift, None, cfg, found=found)
        except SingularMatrixError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_BREAKDOWN
    prefix = args.out_prefix or str(Path(args.matrix).with_suffix("")) + f".{args.method}"
    result = serialize.result_to_dict(res, A)
    serialize.write_json(prefix + ".result.json", result)
    trace = res.trace
    if res.pair is not None:
        # Close the trace with the reported pair, which is the best one seen.
        r_phi, r_psi = res.pair.residuals(A)
        last_x = trace.x[-1] if len(trace) else 0.0
        trace.append(last_x, res.pair.lam, r_phi, r_psi)
    serialize.write_trace(prefix + ".trace.jsonl", trace)
    lam = "none" if res.pair is None else f"{res.pair.lam.real:.10g}{res.pair.lam.imag:+.10g}j"
    print(f"{args.method}: status={res.status.value} lambda={lam}")
    if res.diagnostic:
        print(f"  {res.diagnostic}")
    return STATUS_EXIT[res.status]


def cmd_experiment(args) -> int:
    rep = RUNNERS[args.id](seed=_seed(args), deterministic=args.deterministic)
    path = rep.write(args.out)
    for c in rep.checks:
        print(f"{'PASS' if c['passed'] else 'FAIL'}  {c['name']}" + (f"  ({c['detail']})" if c["detail"] else ""))
    print(f"report: {path}")
    return EXIT_OK if rep.passed else EXIT_INVALID


def cmd_oracle(args) -> int:
    A, _ = _load(args.matrix)
    spec = qr_spectrum(A)
    out = args.out or str(Path(args.matrix).with_suffix("")) + ".spectrum.json"
    serialize.write_json(out, spec.as_dict())
    for i, lam in enumerate(spec.eigenvalues, 1):
        print(f"lambda_{i} = {lam.real:.10g}{lam.imag:+.10g}j")
    bad = [f for f in spec.flags if f.get("defective") or f.get("clustered")]
    if bad or not spec.converged:
        print(f"warning: {len(bad)} flagged pairs, converged={spec.converged}", file=sys.stderr)
    return EXIT_OK


def cmd_plot(args) -> int:
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        print("error: plotting needs matplotlib (pip install .[plot])", file=sys.stderr)
        return EXIT_INVALID
    recs = serialize.read_trace(args.trace)
    if not recs:
        raise FormatError(f"{args.trace}: empty trace")
    t = [r["t"] for r in recs]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(t, [r["lambda_re"] for r in recs], label="Re lambda")
    ax.plot(t, [r["lambda_im"] for r in recs], label="Im lambda")
    ax.set_xlabel("t")
    ax.legend()
    fig.tight_layout()
    out = args.out or str(Path(args.trace).with_suffix("")) + ".svg"
    fig.savefig(out, format="svg")
    plt.close(fig)
    print(f"wrote {out}")
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with 1 so that 2 keeps meaning non-convergence."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _join_shift(argv):
    """Let '--shift -1.3,1.3' through; argparse would read the value as an option."""
    out = list(argv)
    for i, tok in enumerate(out[:-1]):
        if tok == "--shift":
            out[i : i + 2] = [f"--shift={out[i + 1]}"]
            break
    return out


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="biortho", description="Biorthogonal eigensolvers for non-Hermitian matrices")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a test matrix")
    g.add_argument("kind", choices=["e1", "swanson", "hessenberg", "random", "hermitian", "rotation", "identity"])
    g.add_argument("--out", required=True)
    g.add_argument("--n", type=int)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--theta", type=float, default=0.4)
    g.add_argument("--seq", choices=sorted(SEQUENCES), default="exp-k2")
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="run one solver on a matrix file")
    s.add_argument("matrix")
    s.add_argument("--method", choices=["flow", "power", "inverse"], default="flow")
    s.add_argument("--tol", type=float, default=1e-8)
    s.add_argument("--max-iter", type=int, default=100_000)
    s.add_argument("--max-time", type=float)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--mode", choices=[m.value for m in Mode], default="largest")
    s.add_argument("--shift", type=_complex)
    s.add_argument("--deflate", action="append", default=[], metavar="RESULT")
    s.add_argument("--independent-pairs", action="store_true")
    s.add_argument("--out-prefix")
    s.set_defaults(func=cmd_solve)

    e = sub.add_parser("experiment", help="run a reference experiment end to end")
    e.add_argument("id", choices=sorted(RUNNERS))
    e.add_argument("--out", default="results")
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--deterministic", action="store_true", help="omit timings so reports are byte-identical")
    e.set_defaults(func=cmd_experiment)

    o = sub.add_parser("oracle", help="full spectrum by Hessenberg QR")
    o.add_argument("matrix")
    o.add_argument("--out")
    o.set_defaults(func=cmd_oracle)

    pl = sub.add_parser("plot", help="SVG of lambda(t) from a trace file")
    pl.add_argument("trace")
    pl.add_argument("--out")
    pl.set_defaults(func=cmd_plot)
    return p


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    args = build_parser().parse_args(_join_shift(argv))
    try:
        return args.func(args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (BiorthoError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
