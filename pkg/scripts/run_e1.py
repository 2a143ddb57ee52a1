"""Run experiment E1 end to end and write its report and traces."""

import argparse
import sys

from biortho.experiments import run_e1


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--deterministic", action="store_true")
    args = ap.parse_args()
    rep = run_e1(seed=args.seed, deterministic=args.deterministic)
    path = rep.write(args.out)
    for c in rep.checks:
        print(f"{'PASS' if c['passed'] else 'FAIL'}  {c['name']}  {c['detail']}")
    print(f"report: {path}")
    return 0 if rep.passed else 1


if __name__ == "__main__":
    sys.exit(main())
