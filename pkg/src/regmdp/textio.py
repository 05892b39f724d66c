"""JSON output with every float written at 17 significant digits.

The stdlib encoder always uses ``repr`` for floats, so nested structures are
rendered here by hand. Output is deterministic: dict keys keep insertion order.
"""

import json
import math

import numpy as np


def format_float(x: float) -> str:
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"cannot serialize non-finite number {x!r}")
    s = format(x, ".17g")
    if "e" not in s and "." not in s:
        s += ".0"
    return s


def _render(obj, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_render(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        # leaf rows of numbers stay on one line so tables read as tables
        if all(isinstance(v, (int, float, bool, np.integer, np.floating, np.bool_)) for v in obj):
            return "[" + ", ".join(_render(v, indent, level + 1) for v in obj) + "]"
        items = [pad + _render(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    return _render(obj, indent, 0) + "\n"


def dump(obj, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(dumps(obj))
