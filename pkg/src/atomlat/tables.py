"""Result persistence: comma-separated numeric tables with '#'-headed
key=value metadata lines, and flat key=value summary files.

Floats are written with 17 significant digits so identical runs produce
byte-identical files.
"""

from __future__ import annotations

import os

import numpy as np

__all__ = ["format_float", "write_table", "read_table", "write_summary", "TableFormatError"]


class TableFormatError(ValueError):
    """File does not follow the table format."""


def format_float(x: float) -> str:
    return f"{float(x):.16e}"


def write_table(path: str, columns: list[str], rows, meta: dict) -> None:
    """Write rows (iterable of float sequences) with metadata header lines.

    Metadata is emitted in insertion order; values are stringified, so put
    hashes and parameters in as strings/numbers only.
    """
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    if rows.size and rows.shape[1] != len(columns):
        raise TableFormatError(f"{len(columns)} columns declared, rows have {rows.shape[1]}")
    lines = [f"# {key}={value}" for key, value in meta.items()]
    lines.append("# columns: " + ",".join(columns))
    for row in rows:
        lines.append(",".join(format_float(v) for v in row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_table(path: str) -> tuple[dict, list[str], np.ndarray]:
    meta: dict[str, str] = {}
    columns: list[str] = []
    data: list[list[float]] = []
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("columns:"):
                    columns = [c.strip() for c in body[len("columns:"):].split(",")]
                elif "=" in body:
                    key, _, value = body.partition("=")
                    meta[key.strip()] = value.strip()
                continue
            data.append([float(v) for v in line.split(",")])
    if not columns:
        raise TableFormatError(f"{path}: no '# columns:' header line")
    arr = np.asarray(data, dtype=float).reshape(-1, len(columns))
    return meta, columns, arr


def write_summary(path: str, values: dict) -> None:
    lines = []
    for key, value in values.items():
        if isinstance(value, float):
            value = format_float(value)
        lines.append(f"{key}={value}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def output_path(out_dir: str, prefix: str, name: str) -> str:
    os.makedirs(out_dir, exist_ok=True)
    return os.path.join(out_dir, f"{prefix}_{name}")
