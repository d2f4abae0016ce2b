"""Deterministic trajectory/diagnostics writers.

CSV floats carry 17 significant digits and JSON uses Python's shortest
round-trip float repr, so identical states serialize to identical bytes.
Files are written to a temporary sibling and renamed into place.
"""

from __future__ import annotations

import json
import os
import tempfile

from .errors import OutputError


def _fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def _atomic_write(path: str, text: str):
    directory = os.path.dirname(os.path.abspath(path))
    try:
        os.makedirs(directory, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    except OSError as exc:
        raise OutputError(f"cannot write '{path}': {exc}") from exc


def write_csv(path: str, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(x) for x in row))
    _atomic_write(path, "\n".join(lines) + "\n")


def write_json(path: str, payload: dict):
    _atomic_write(path, json.dumps(payload, sort_keys=True, indent=2) + "\n")
