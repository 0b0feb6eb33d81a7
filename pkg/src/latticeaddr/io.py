"""Deterministic CSV output shared by every exporter."""

from __future__ import annotations

import io
import os
from typing import Iterable, Sequence

import numpy as np


def fmt(value) -> str:
    """Locale-free text with 15 significant digits; integers and strings pass through."""
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    v = float(value)
    if np.isnan(v):
        return "nan"
    out = f"{v:.15g}"
    return "0" if out == "-0" else out


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(fmt(v) for v in row) + "\n")
    return buf.getvalue()


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> str:
    """Write rows to ``path`` (``\\n`` line endings) and return the text."""
    text = csv_text(header, rows)
    if path is not None:
        with open(os.fspath(path), "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text


def read_csv(path) -> tuple[list[str], np.ndarray]:
    with open(os.fspath(path), encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
    data = np.genfromtxt(os.fspath(path), delimiter=",", skip_header=1, dtype=float, ndmin=2)
    return header, data
