"""JSON emission with fixed 17-significant-digit floats.

``json.dumps`` renders floats with ``repr`` (shortest round-trip form); reports
here use ``%.17g`` so the rendered width is stable across values while still
round-tripping bit-exactly.
"""

from __future__ import annotations

import json
import math

import numpy as np


def fmt_float(x):
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"cannot serialize non-finite float {x!r}")
    s = "%.17g" % x
    if "e" not in s and "." not in s:
        s += ".0"
    return s


def _is_flat(obj):
    return isinstance(obj, (list, tuple)) and all(
        not isinstance(x, (list, tuple, dict)) or (isinstance(x, (list, tuple)) and _is_flat(x) and len(x) <= 2)
        for x in obj
    )


def _encode(obj, indent, level):
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    pad = "\n" + " " * (indent * (level + 1)) if indent else ""
    end = "\n" + " " * (indent * level) if indent else ""
    sep = "," if indent else ", "
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{" + sep.join(items) + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if _is_flat(obj):
            return "[" + ", ".join(_encode(x, 0, 0) for x in obj) + "]"
        items = [f"{pad}{_encode(x, indent, level + 1)}" for x in obj]
        return "[" + sep.join(items) + end + "]"
    raise TypeError(f"cannot serialize object of type {type(obj).__name__}")


def dumps(obj, indent=2):
    """Serialize ``obj`` to a JSON string; output is deterministic for equal inputs."""
    return _encode(obj, indent, 0)


def complex_matrix_to_json(m):
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def complex_matrix_from_json(data, where="matrix"):
    try:
        arr = np.asarray(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ValueError(f"{where}: expected nested [re, im] pairs ({exc})") from None
    if arr.ndim != 3 or arr.shape[2] != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{where}: expected an n x n array of [re, im] pairs, got shape {arr.shape}")
    return arr[..., 0] + 1j * arr[..., 1]
