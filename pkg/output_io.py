# output_io.py
"""Atomic CSV/JSON writers: each file is written to <path>.tmp and moved into place."""

import json
import math
import os
from typing import Iterable, List, Sequence

import numpy as np
from pydantic import BaseModel

from errors import UsageError


def format_float(x: float) -> str:
    """17 significant digits, enough to round-trip a double."""
    if isinstance(x, int):
        return str(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return "%.17g" % x


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, float):
        return format_float(v)
    if hasattr(v, "value"):  # enums
        return str(v.value)
    return str(v)


def _replace(path: str, text: str) -> None:
    folder = os.path.dirname(os.path.abspath(path))
    os.makedirs(folder, exist_ok=True)
    tmp = path + ".tmp"
    # newline="" keeps LF line endings on every platform
    with open(tmp, "w", encoding="utf-8", newline="") as f:
        f.write(text)
    os.replace(tmp, path)


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_cell(v) for v in row))
    return "\n".join(lines) + "\n"


def write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    _replace(path, csv_text(header, rows))


def _plain(obj):
    if isinstance(obj, BaseModel):
        return _plain(obj.model_dump(mode="python"))
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if hasattr(obj, "tolist"):
        return _plain(obj.tolist())
    if hasattr(obj, "value") and not isinstance(obj, (int, float, str)):
        return obj.value
    return obj


def _finite_floats(obj):
    # finite floats keep the shortest round-trip repr
    if isinstance(obj, float):
        if math.isfinite(obj):
            return obj
        return format_float(obj)
    if isinstance(obj, dict):
        return {k: _finite_floats(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_finite_floats(v) for v in obj]
    return obj


def json_text(record) -> str:
    """One top-level object; non-finite floats become the strings 'inf', '-inf', 'nan'."""
    return json.dumps(_finite_floats(_plain(record)), indent=2, sort_keys=False) + "\n"


def write_json(path: str, record) -> None:
    _replace(path, json_text(record))


def read_json(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def read_symbols(path: str, byte_alphabet: bool = False) -> List[int]:
    """
    Symbol stream from a file: '0'/'1' characters, or raw bytes with byte_alphabet.

    A single trailing newline is tolerated; anything else is a usage error.
    """
    with open(path, "rb") as f:
        data = f.read()
    if data.endswith(b"\n"):
        data = data[:-1]
    if byte_alphabet:
        return list(data)
    bad = set(data) - {ord("0"), ord("1")}
    if bad:
        raise UsageError(f"{path}: expected only 0/1 symbols, found {sorted(chr(b) for b in bad)[:5]}")
    return [b - ord("0") for b in data]
