"""Deterministic file output: CSV/JSON writers with atomic replace.

All writers go through a temp-then-rename so an exception never leaves a
partial file, and all floats are serialized with shortest round-trip repr so
reruns of identical data are byte-identical.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .fields import Field

__all__ = [
    "atomic_write_text",
    "fmt",
    "write_json",
    "write_field_csv",
    "write_counts_csv",
    "write_events_csv",
    "write_rows_csv",
]


def fmt(x) -> str:
    """Shortest round-trip decimal for floats; plain str otherwise."""
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return str(x)


def atomic_write_text(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise
    return path


def write_json(path, obj) -> Path:
    return atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def write_rows_csv(path, header: str, rows) -> Path:
    lines = [header]
    lines.extend(",".join(fmt(cell) for cell in row) for row in rows)
    return atomic_write_text(path, "\n".join(lines) + "\n")


def write_field_csv(path, field: Field) -> Path:
    rows = (
        (t, x, field.values[k, i])
        for k, t in enumerate(field.t_grid)
        for i, x in enumerate(field.x_grid)
    )
    return write_rows_csv(path, "t,x,value", rows)


def write_counts_csv(path, times, counts) -> Path:
    return write_rows_csv(path, "t,N", zip(times, counts))


def write_events_csv(path, events) -> Path:
    return write_rows_csv(path, "time,survivor,killed", events)
