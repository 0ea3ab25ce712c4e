"""Canonical JSON serialization: sorted keys, %.17g floats, one trailing newline.

Output bytes are identical across runs for identical inputs, which is what
the CLI's determinism contract rides on.
"""

from __future__ import annotations

import json
import math


def _float_repr(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        raise ValueError("non-finite floats cannot be serialized canonically")
    s = "%.17g" % x
    return s


def _render(obj) -> str:
    if obj is None or obj is True or obj is False:
        return json.dumps(obj)
    if isinstance(obj, float):
        return _float_repr(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=True)
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_render(v) for v in obj) + "]"
    if isinstance(obj, dict):
        items = sorted(obj.items(), key=lambda kv: kv[0])
        body = ", ".join(f"{json.dumps(str(k))}: {_render(v)}" for k, v in items)
        return "{" + body + "}"
    raise TypeError(f"cannot serialize {type(obj).__name__} canonically")


def canonical_json(obj) -> str:
    return _render(obj) + "\n"
