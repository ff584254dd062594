"""JSON solution documents.

Floats are written with 17 significant digits so every value round-trips
exactly. JSON has no infinities, so non-finite numbers are written as the
strings ``"inf"``, ``"-inf"`` and ``"nan"``; :func:`read_solution` maps them
back.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

SCHEMA_VERSION = 1


class SolutionIOError(OSError):
    pass


def _encode(value, out: list[str]) -> None:
    if isinstance(value, (bool, np.bool_)):
        out.append("true" if value else "false")
    elif value is None:
        out.append("null")
    elif isinstance(value, (int, np.integer)):
        out.append(str(int(value)))
    elif isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isfinite(v):
            text = format(v, ".17g")
            # keep floats floats when read back ("0" would decode as an int)
            out.append(text if any(ch in text for ch in ".e") else text + ".0")
        else:
            out.append('"nan"' if math.isnan(v) else ('"inf"' if v > 0 else '"-inf"'))
    elif isinstance(value, str):
        out.append(json.dumps(value))
    elif isinstance(value, dict):
        out.append("{")
        for i, (k, v) in enumerate(value.items()):
            if i:
                out.append(", ")
            out.append(json.dumps(str(k)) + ": ")
            _encode(v, out)
        out.append("}")
    elif isinstance(value, (list, tuple, np.ndarray)):
        out.append("[")
        for i, v in enumerate(value):
            if i:
                out.append(", ")
            _encode(v, out)
        out.append("]")
    else:
        raise TypeError(f"cannot serialize {type(value).__name__}")


def dumps(document) -> str:
    out: list[str] = []
    _encode(document, out)
    return "".join(out)


def _decode_nonfinite(obj):
    if isinstance(obj, dict):
        return {k: _decode_nonfinite(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_decode_nonfinite(v) for v in obj]
    if obj in ("inf", "-inf", "nan"):
        return float(obj)
    return obj


def solution_document(result, include_arrays: bool = False, maximize: bool = False) -> dict:
    """Plain-dict view of a ``SolveResult``.

    With ``maximize`` the objective values are negated back to the sense of
    the original model; the arrays are untouched.
    """
    sign = -1.0 if maximize else 1.0
    res = result.residuals
    doc = {
        "schema_version": SCHEMA_VERSION,
        "status": result.status.value,
        "sense": "maximize" if maximize else "minimize",
        "source": result.source,
    }
    if res is not None:
        doc["primal_objective"] = sign * res.primal_objective
        doc["dual_objective"] = sign * res.dual_objective
        doc["residuals"] = {
            "primal_inf_norm": res.primal_inf_norm,
            "dual_inf_norm": res.dual_inf_norm,
            "abs_gap": res.abs_gap,
            "rel_gap": res.rel_gap,
        }
    s = result.stats
    doc["statistics"] = {
        "iterations": s.iterations,
        "main_iterations": s.main_iterations,
        "polish_iterations": s.polish_iterations,
        "restarts": s.restarts,
        "step_retries": s.step_retries,
        "polish_attempts": s.polish_attempts,
        "wall_time": s.wall_time,
        "phase_times": dict(s.phase_times),
    }
    if result.certificate is not None:
        doc["certificate"] = result.certificate.quality()
        if include_arrays:
            doc["certificate"]["ray"] = result.certificate.ray
    if include_arrays:
        doc["x"] = result.x
        doc["y"] = result.y
        doc["r"] = result.r
    return doc


def write_solution(result, destination, include_arrays: bool = False,
                   maximize: bool = False) -> None:
    """Write the JSON document to a path or to an open text stream."""
    text = dumps(solution_document(result, include_arrays, maximize)) + "\n"
    if hasattr(destination, "write"):
        destination.write(text)
        return
    path = Path(destination)
    try:
        path.write_text(text)
    except OSError as exc:
        raise SolutionIOError(f"cannot write solution to {path}: {exc.strerror or exc}") from exc


def read_solution(source) -> dict:
    if hasattr(source, "read"):
        text = source.read()
    else:
        path = Path(source)
        try:
            text = path.read_text()
        except OSError as exc:
            raise SolutionIOError(f"cannot read solution from {path}: {exc.strerror or exc}") from exc
    return _decode_nonfinite(json.loads(text))
