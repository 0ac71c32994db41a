"""Deterministic CSV emission: 15 significant digits, dot decimals, LF
endings, atomic replace so failed runs never leave partial files."""
from __future__ import annotations

import os
import tempfile


def format_value(v) -> str:
    if isinstance(v, float):
        return f"{v:.15g}"
    return str(v)


def render_csv(header: str, rows) -> str:
    lines = [header]
    lines.extend(",".join(format_value(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def write_csv_atomic(path: str, header: str, rows) -> None:
    """Write the whole table to a temp file, then rename into place."""
    text = render_csv(header, rows)
    directory = os.path.dirname(os.path.abspath(path)) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
