"""Tensor files: a JSON document ``{"dims": [...], "convention": ..., "data": [...]}``.

``convention`` is ``"alphabetic"`` (lexicographic multi-index order, the
default) or ``"col-major-matrix"`` (column stacking, order-2 only). Floats are
written with ``repr`` precision, so a write/read round trip is bit exact.
Order-2 tensors may also be given as CSV, one matrix row per line.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from pathlib import Path

import numpy as np

from .hypermatrix import Hypermatrix

CONVENTIONS = ("alphabetic", "col-major-matrix")


class TensorFileError(ValueError):
    pass


def parse_tensor(obj) -> Hypermatrix:
    if not isinstance(obj, dict):
        raise TensorFileError("tensor file must hold a JSON object")
    if "dims" not in obj:
        raise TensorFileError("missing field 'dims'")
    dims = obj["dims"]
    if not isinstance(dims, list) or not all(
        isinstance(n, int) and not isinstance(n, bool) and n >= 1 for n in dims
    ):
        raise TensorFileError("field 'dims' must be a list of positive integers")
    convention = obj.get("convention", "alphabetic")
    if convention not in CONVENTIONS:
        raise TensorFileError(f"field 'convention' must be one of {CONVENTIONS}, got {convention!r}")
    if convention == "col-major-matrix" and len(dims) != 2:
        raise TensorFileError("field 'convention': col-major-matrix needs exactly two dims")
    if "data" not in obj:
        raise TensorFileError("missing field 'data'")
    data = obj["data"]
    if not isinstance(data, list) or not all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in data
    ):
        raise TensorFileError("field 'data' must be a list of numbers")
    if not all(math.isfinite(v) for v in data):
        raise TensorFileError("field 'data' contains non-finite values")
    expected = math.prod(dims)
    if len(data) != expected:
        raise TensorFileError(f"field 'data' has {len(data)} values, dims {dims} need {expected}")
    arr = np.array(data, dtype=float)
    if convention == "col-major-matrix":
        arr = arr.reshape(dims, order="F").ravel()
    return Hypermatrix(dims, arr)


def _read_csv(text: str) -> Hypermatrix:
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if not rows:
        raise TensorFileError("CSV file has no rows")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise TensorFileError("CSV rows have unequal lengths")
    try:
        arr = np.array([[float(c) for c in r] for r in rows])
    except ValueError as exc:
        raise TensorFileError(f"CSV entry is not a number: {exc}") from None
    if not np.all(np.isfinite(arr)):
        raise TensorFileError("CSV contains non-finite values")
    return Hypermatrix.from_array(arr)


def read_tensor(path) -> Hypermatrix:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise TensorFileError(f"cannot read {path}: {exc.strerror}") from None
    if path.suffix.lower() == ".csv":
        return _read_csv(text)
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TensorFileError(f"{path} is not valid JSON: {exc.msg} (line {exc.lineno})") from None
    return parse_tensor(obj)


def tensor_to_obj(H: Hypermatrix, convention: str = "alphabetic") -> dict:
    if convention not in CONVENTIONS:
        raise ValueError(f"unknown convention {convention!r}")
    data = H.data
    if convention == "col-major-matrix":
        if H.order != 2:
            raise ValueError("col-major-matrix needs an order-2 tensor")
        data = data.reshape(H.dims).ravel(order="F")
    return {"dims": list(H.dims), "convention": convention, "data": [float(v) for v in data]}


def write_tensor(path, H: Hypermatrix, convention: str = "alphabetic") -> None:
    Path(path).write_text(json.dumps(tensor_to_obj(H, convention)) + "\n")


def digest(H: Hypermatrix) -> str:
    """SHA-256 over the dims and the little-endian float64 data."""
    h = hashlib.sha256()
    h.update(json.dumps(list(H.dims)).encode())
    h.update(H.data.astype("<f8").tobytes())
    return h.hexdigest()
