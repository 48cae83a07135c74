"""Deterministic report emission.

Every float is rounded to 12 significant digits, values below ``1e-12`` in
magnitude become zero and negative zero is normalized, so reports are
byte-stable for a fixed scenario and seed.
"""
from __future__ import annotations

import json
import math

import numpy as np

SIG_DIGITS = 12
SNAP_TO_ZERO = 1e-12


def fmt_float(x) -> float:
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"non-finite value {x!r} in report")
    if abs(x) < SNAP_TO_ZERO:
        return 0.0
    v = float(f"{x:.{SIG_DIGITS}g}")
    return 0.0 if v == 0.0 else v


def clean(value):
    """Convert numpy data into JSON-ready values with rounded floats.

    Complex scalars become ``[re, im]``; arrays become nested lists.
    """
    if isinstance(value, dict):
        return {str(k): clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [clean(v) for v in value]
    if isinstance(value, np.ndarray):
        return clean(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (complex, np.complexfloating)):
        return [fmt_float(value.real), fmt_float(value.imag)]
    if isinstance(value, (float, np.floating)):
        return fmt_float(value)
    return value


def complex_matrix(m):
    """Row-major ``[re, im]`` nested lists."""
    return clean(np.asarray(m, dtype=np.complex128))


def _dump(value, depth):
    pad = "  " * (depth + 1)
    end = "  " * depth
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = [f"{pad}{json.dumps(k)}: {_dump(v, depth + 1)}" for k, v in value.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(value, list):
        # scalar lists and [re, im] rows stay on one line
        if all(not isinstance(v, (dict, list)) for v in value) or all(
            isinstance(v, list) and all(not isinstance(t, (dict, list)) for t in v) for v in value
        ):
            return json.dumps(value, separators=(", ", ": "))
        return "[\n" + ",\n".join(pad + _dump(v, depth + 1) for v in value) + "\n" + end + "]"
    return json.dumps(value)


def to_json(report: dict) -> str:
    """Indented JSON with innermost lists kept on one line."""
    return _dump(clean(report), 0) + "\n"


def _flatten(prefix, value, out):
    if isinstance(value, dict):
        for k, v in value.items():
            _flatten(f"{prefix}.{k}" if prefix else str(k), v, out)
    elif isinstance(value, list):
        if not value:
            out.append((prefix, "[]"))
        for i, v in enumerate(value):
            _flatten(f"{prefix}[{i}]", v, out)
    else:
        out.append((prefix, json.dumps(value)))


def to_tsv(report: dict) -> str:
    """One ``path<TAB>value`` line per leaf."""
    rows = []
    _flatten("", clean(report), rows)
    return "".join(f"{path}\t{value}\n" for path, value in rows)


def render(report: dict, fmt="json") -> str:
    if fmt == "json":
        return to_json(report)
    if fmt == "tsv":
        return to_tsv(report)
    raise ValueError(f"unknown report format {fmt!r}")
