"""Artifact writers: atomic files, 17-significant-digit numbers, CSV/JSON layouts."""
from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path

TRACE_HEADER = "k,loop,t_since,metric,channel,received,stage_cost"
CURVE_HEADER = "beta,rate,relevance_or_distortion"


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def atomic_write(path, text: str) -> None:
    """Write via a temp file in the target directory, then rename over ``path``."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def to_json(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON text with every float written to 17 significant digits; NaN/inf become null."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if obj is None or isinstance(obj, bool):
        return {None: "null", True: "true", False: "false"}[obj]
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return fmt(obj) if math.isfinite(obj) else "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{to_json(str(k))}: {to_json(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(v is None or isinstance(v, (int, float)) for v in obj):
            return "[" + ", ".join(to_json(v) for v in obj) + "]"
        items = [pad + to_json(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if hasattr(obj, "item"):  # numpy scalar
        return to_json(obj.item(), indent, _level)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def trace_csv(trace) -> str:
    lines = [TRACE_HEADER]
    for k, i, t, metric, ch, rx, cost in trace.records():
        lines.append(f"{k},{i},{t},{fmt(metric)},{'' if ch is None else ch},{int(rx)},{fmt(cost)}")
    return "\n".join(lines) + "\n"


def curve_csv(rows) -> str:
    lines = [CURVE_HEADER]
    lines.extend(f"{fmt(b)},{fmt(r)},{fmt(v)}" for b, r, v in rows)
    return "\n".join(lines) + "\n"
