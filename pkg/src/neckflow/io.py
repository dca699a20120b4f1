"""Columnar text emitters.  Every file is self-describing: comment header
lines first, then a column-name row with units, then rows at 17
significant digits (so numeric round trips are bit-faithful)."""

from __future__ import annotations

import os

import numpy as np


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.17g}"


def write_columns(path, columns: dict, comments: list[str] | None = None) -> None:
    """Write named columns as TSV; keys may carry units like 'r[length]'."""
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    names = list(columns)
    arrays = [np.atleast_1d(columns[k]) for k in names]
    length = len(arrays[0])
    if any(len(a) != length for a in arrays):
        raise ValueError("all columns must have equal length")
    with open(path, "w") as fh:
        for line in comments or []:
            fh.write(f"# {line}\n")
        fh.write("\t".join(names) + "\n")
        for row in range(length):
            fh.write("\t".join(_fmt(a[row]) for a in arrays) + "\n")


def read_columns(path) -> dict:
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    body = [ln for ln in lines if not ln.startswith("#")]
    names = body[0].split("\t")
    data = np.array([ln.split("\t") for ln in body[1:]], dtype=float)
    return {name: data[:, j] for j, name in enumerate(names)}


def write_keyvalues(path, pairs: dict, comments: list[str] | None = None) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w") as fh:
        for line in comments or []:
            fh.write(f"# {line}\n")
        for key, val in pairs.items():
            if isinstance(val, float):
                fh.write(f"{key} = {val:.17g}\n")
            else:
                fh.write(f"{key} = {val}\n")


def read_keyvalues(path) -> dict:
    out = {}
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line and "=" in line:
                key, val = line.split("=", 1)
                out[key.strip()] = val.strip()
    return out
