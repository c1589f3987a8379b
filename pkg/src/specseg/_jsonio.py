"""Deterministic JSON emission with 17-significant-digit floats.

The standard encoder uses shortest-roundtrip float repr; reports instead pin
every float to %.17g so files are bitwise stable across Python versions.
"""

import json
import math

from .errors import InputError


def dumps(obj, indent=0):
    parts = []
    _emit(obj, parts, indent, 0)
    return "".join(parts)


def _emit(obj, parts, indent, level):
    pad = " " * (indent * (level + 1)) if indent else ""
    end_pad = " " * (indent * level) if indent else ""
    nl = "\n" if indent else ""
    sep = "," + nl
    if obj is None or isinstance(obj, bool):
        parts.append({None: "null", True: "true", False: "false"}[obj])
    elif isinstance(obj, int):
        parts.append(str(obj))
    elif isinstance(obj, float):
        if not math.isfinite(obj):
            raise InputError(f"cannot serialise non-finite float {obj!r}")
        parts.append(format(obj, ".17g"))
    elif isinstance(obj, str):
        parts.append(json.dumps(obj))
    elif isinstance(obj, (list, tuple)):
        if not obj:
            parts.append("[]")
            return
        parts.append("[" + nl)
        for i, item in enumerate(obj):
            parts.append(pad)
            _emit(item, parts, indent, level + 1)
            parts.append(sep if i < len(obj) - 1 else nl)
        parts.append(end_pad + "]")
    elif isinstance(obj, dict):
        if not obj:
            parts.append("{}")
            return
        parts.append("{" + nl)
        items = list(obj.items())
        for i, (key, val) in enumerate(items):
            if not isinstance(key, str):
                raise InputError(f"JSON object keys must be strings, got {key!r}")
            parts.append(pad + json.dumps(key) + ": ")
            _emit(val, parts, indent, level + 1)
            parts.append(sep if i < len(items) - 1 else nl)
        parts.append(end_pad + "}")
    else:
        raise InputError(f"cannot serialise object of type {type(obj).__name__}")


def dump(obj, path, indent=2):
    text = dumps(obj, indent=indent)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text + "\n")


def load(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)
