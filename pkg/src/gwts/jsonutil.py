"""JSON emission with 17-significant-digit floats.

The stdlib json module always writes floats with repr(); the output contracts
here pin 17 significant digits (enough to round-trip IEEE-754 doubles), so
this is a tiny recursive emitter for plain dict/list/str/num/bool/None trees.
"""

from __future__ import annotations

import json
import math


def format_float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    return f"{x:.17g}"


def dumps(obj, indent: int = 0, _level: int = 0) -> str:
    """Serialize obj to JSON text; floats carry 17 significant digits."""
    pad = "\n" + " " * (indent * (_level + 1)) if indent else ""
    end_pad = "\n" + " " * (indent * _level) if indent else ""
    sep = "," if not indent else ","
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return format_float(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [
            f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}"
            for k, v in obj.items()
        ]
        return "{" + sep.join(items) + end_pad + "}"
    if isinstance(obj, (list, tuple)):
        if not len(obj):
            return "[]"
        items = [f"{pad}{dumps(v, indent, _level + 1)}" for v in obj]
        return "[" + sep.join(items) + end_pad + "]"
    # numpy scalars and arrays
    if hasattr(obj, "item") and not hasattr(obj, "__len__"):
        return dumps(obj.item(), indent, _level)
    if hasattr(obj, "tolist"):
        return dumps(obj.tolist(), indent, _level)
    raise TypeError(f"cannot serialize {type(obj)!r}")
