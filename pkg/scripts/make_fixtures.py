"""Regenerate the JSON matrix fixtures shipped in src/biortho/data."""

import argparse
from pathlib import Path

from biortho import serialize
from biortho.matrices import AlphaSequence, SwansonParams, e1_fixture, hessenberg, swanson

DEFAULT_OUT = Path(__file__).resolve().parent.parent / "src" / "biortho" / "data"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=DEFAULT_OUT)
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    _, _, A = e1_fixture()
    serialize.save_matrix(args.out / "e1.json", A, {"kind": "e1", "n": 7})

    H, meta = swanson(SwansonParams(7, 0.4))
    serialize.save_matrix(args.out / "swanson_n7_theta0.4.json", H, meta)

    for tag, kind in (("exp_k2", "exp_minus_k_squared"), ("fact_k2", "inverse_factorial_k_squared")):
        seq = AlphaSequence(kind)
        D = hessenberg(seq, 15)
        meta = {"kind": "hessenberg", "alpha": kind, "alpha_start": seq.start, "n": 15}
        serialize.save_matrix(args.out / f"hessenberg_{tag}_n15.json", D, meta)

    for p in sorted(args.out.glob("*.json")):
        print(p)


if __name__ == "__main__":
    main()
