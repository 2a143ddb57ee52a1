"""JSON schema for matrices, vectors, results and traces.

Matrices are {"n": n, "re": [[...]], "im": [[...]]} and vectors
{"re": [...], "im": [...]}. Floats are written with 17 significant digits so
every value round-trips exactly. Generation metadata for a matrix file
``name.json`` lives in the sibling ``name.meta.json``.
"""

from __future__ import annotations

import enum
import json
import math
from pathlib import Path

import numpy as np

from .errors import FormatError
from .structures import BiorthoPair, ConvergenceTrace, FlowResult, PowerResult


def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        raise FormatError(f"cannot serialize non-finite value {x!r}")
    s = "%.17g" % x
    # Keep a float marker so readers do not turn 1.0 into an int.
    if not any(c in s for c in ".eEn"):
        s += ".0"
    return s


def _encode(obj, indent, level) -> str:
    pad = "" if indent is None else "\n" + " " * (indent * (level + 1))
    end = "" if indent is None else "\n" + " " * (indent * level)
    sep = ", " if indent is None else ","
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, enum.Enum):
        return _encode(obj.value, indent, level)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return _encode({"re": obj.real, "im": obj.imag}, indent, level)
    if isinstance(obj, np.ndarray):
        return _encode(obj.tolist(), indent, level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{" + sep.join(items) + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        # Rows of numbers stay on one line.
        if all(isinstance(v, (int, float, np.number)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(_encode(v, None, 0) for v in obj) + "]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[" + sep.join(items) + end + "]"
    raise FormatError(f"cannot serialize object of type {type(obj).__name__}")


def dumps(obj, indent: int | None = 2) -> str:
    """JSON text with 17-significant-digit floats; complex numbers become {re, im}."""
    return _encode(obj, indent, 0)


def write_json(path, obj, indent: int | None = 2) -> Path:
    path = Path(path)
    path.write_text(dumps(obj, indent) + "\n")
    return path


def read_json(path):
    path = Path(path)
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from exc


def matrix_to_dict(A) -> dict:
    A = np.asarray(A, dtype=np.complex128)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise FormatError(f"expected a square matrix, got shape {A.shape}")
    return {"n": A.shape[0], "re": A.real.tolist(), "im": A.imag.tolist()}


def matrix_from_dict(d) -> np.ndarray:
    try:
        n = int(d["n"])
        re = np.array(d["re"], dtype=float)
        im = np.array(d.get("im", np.zeros((n, n))), dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed matrix object: {exc}") from exc
    if re.shape != (n, n) or im.shape != (n, n):
        raise FormatError(f"matrix parts have shapes {re.shape}, {im.shape}; expected ({n}, {n})")
    A = re + 1j * im
    if not np.all(np.isfinite(A)):
        raise FormatError("matrix contains non-finite entries")
    return A


def vector_to_dict(x) -> dict:
    x = np.asarray(x, dtype=np.complex128)
    return {"re": x.real.tolist(), "im": x.imag.tolist()}


def vector_from_dict(d) -> np.ndarray:
    try:
        re = np.array(d["re"], dtype=float)
        im = np.array(d.get("im", np.zeros_like(re)), dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed vector object: {exc}") from exc
    if re.ndim != 1 or re.shape != im.shape:
        raise FormatError("vector parts must be 1-D and of equal length")
    return re + 1j * im


def meta_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".meta.json")


def save_matrix(path, A, meta: dict | None = None) -> Path:
    path = write_json(path, matrix_to_dict(A))
    if meta is not None:
        write_json(meta_path(path), meta)
    return path


def load_matrix(path):
    """(A, meta) where meta is None when no sibling metadata file exists."""
    A = matrix_from_dict(read_json(path))
    mp = meta_path(path)
    return A, (read_json(mp) if mp.exists() else None)


def fixture_path(name: str) -> Path:
    """Path of a matrix fixture shipped with the package (e.g. "e1.json")."""
    path = Path(__file__).resolve().parent / "data" / name
    if not path.exists():
        raise FileNotFoundError(f"no fixture named {name!r}")
    return path


def complex_to_dict(z) -> dict:
    z = complex(z)
    return {"re": z.real, "im": z.imag}


def pair_to_dict(pair: BiorthoPair, A=None) -> dict:
    out = {"lambda": complex_to_dict(pair.lam), "phi": vector_to_dict(pair.phi), "psi": vector_to_dict(pair.psi)}
    if A is not None:
        r_phi, r_psi = pair.residuals(A)
        out["residual_phi"] = r_phi
        out["residual_psi"] = r_psi
    out["pairing"] = complex_to_dict(pair.pairing())
    return out


def pair_from_dict(d) -> BiorthoPair:
    try:
        lam = complex(d["lambda"]["re"], d["lambda"]["im"])
        return BiorthoPair(lam, vector_from_dict(d["phi"]), vector_from_dict(d["psi"]))
    except (KeyError, TypeError) as exc:
        raise FormatError(f"malformed pair object: {exc}") from exc


def result_to_dict(res, A=None) -> dict:
    """Summary of a FlowResult or PowerResult (the trace is written separately)."""
    out = {"status": res.status.value, "converged": res.converged, "diagnostic": res.diagnostic}
    if isinstance(res, FlowResult):
        out.update(
            method="flow",
            chi=complex_to_dict(res.chi),
            max_pairing_drift=res.max_pairing_drift,
            final_time=res.final_time,
            steps=res.steps,
        )
    elif isinstance(res, PowerResult):
        out.update(iterations=res.iterations)
    out["pair"] = None if res.pair is None else pair_to_dict(res.pair, A)
    return out


def load_pair(path) -> BiorthoPair:
    """Pair stored in a result file (or a bare pair object)."""
    d = read_json(path)
    if "pair" in d:
        if d["pair"] is None:
            raise FormatError(f"{path}: result holds no eigenpair")
        d = d["pair"]
    return pair_from_dict(d)


def write_trace(path, trace: ConvergenceTrace) -> Path:
    path = Path(path)
    with path.open("w") as fh:
        for rec in trace.records():
            fh.write(dumps(rec, indent=None) + "\n")
    return path


def read_trace(path) -> list:
    out = []
    with Path(path).open() as fh:
        for line in fh:
            if line.strip():
                out.append(json.loads(line))
    return out
