"""Deterministic text serialization: every float printed with 17 significant digits."""

from __future__ import annotations

import json
import math


def fmt17(x: float) -> str:
    """Render a float with 17 significant digits (round-trip exact)."""
    return "%.17g" % float(x)


def dumps17(obj, indent: int = 2) -> str:
    """JSON text with floats at 17 significant digits.

    The standard json module prints shortest-roundtrip floats, so this walks
    the structure itself. Non-finite floats map to null. Dict key order is
    preserved (callers construct dicts deterministically).
    """
    out: list[str] = []
    _write(obj, out, indent, 0)
    out.append("\n")
    return "".join(out)


def _write(obj, out: list, indent: int, level: int) -> None:
    pad = " " * (indent * level)
    pad_in = " " * (indent * (level + 1))
    if obj is None:
        out.append("null")
    elif isinstance(obj, bool):
        out.append("true" if obj else "false")
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        out.append(fmt17(obj) if math.isfinite(obj) else "null")
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        for i, (k, v) in enumerate(obj.items()):
            out.append(pad_in + json.dumps(str(k)) + ": ")
            _write(v, out, indent, level + 1)
            out.append(",\n" if i < len(obj) - 1 else "\n")
        out.append(pad + "}")
    elif isinstance(obj, (list, tuple)):
        seq = list(obj)
        if not seq:
            out.append("[]")
            return
        out.append("[\n")
        for i, v in enumerate(seq):
            out.append(pad_in)
            _write(v, out, indent, level + 1)
            out.append(",\n" if i < len(seq) - 1 else "\n")
        out.append(pad + "]")
    else:
        raise TypeError(f"unserializable type {type(obj).__name__}")
