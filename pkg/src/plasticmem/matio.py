"""JSON serialization for dense float64 matrices.

The wire format is ``{"name": str, "rows": int, "cols": int, "data": [...]}``
with ``data`` flat in row-major order.  Vectors are stored as ``rows x 1``
is never assumed; callers pass 2-D arrays (reshape 1-D vectors to ``(n, 1)``
or ``(1, n)`` as appropriate for their context).
"""

from __future__ import annotations

import json

import numpy as np

from .errors import InvalidArgumentError


def matrix_to_dict(name: str, mat: np.ndarray) -> dict:
    mat = np.asarray(mat, dtype=np.float64)
    if mat.ndim == 1:
        mat = mat.reshape(1, -1)
    if mat.ndim != 2:
        raise InvalidArgumentError(f"matrix {name!r} must be 1-D or 2-D, got ndim={mat.ndim}")
    if not np.all(np.isfinite(mat)):
        raise InvalidArgumentError(f"matrix {name!r} contains non-finite entries")
    return {
        "name": name,
        "rows": int(mat.shape[0]),
        "cols": int(mat.shape[1]),
        "data": [float(x) for x in mat.ravel()],
    }


def matrix_from_dict(doc: dict) -> tuple[str, np.ndarray]:
    try:
        name = doc["name"]
        rows, cols = int(doc["rows"]), int(doc["cols"])
        data = doc["data"]
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidArgumentError(f"malformed matrix document: {exc}") from exc
    if rows < 1 or cols < 1:
        raise InvalidArgumentError(f"matrix {name!r} has non-positive shape {rows}x{cols}")
    if len(data) != rows * cols:
        raise InvalidArgumentError(
            f"matrix {name!r}: data length {len(data)} != {rows}x{cols}"
        )
    mat = np.asarray(data, dtype=np.float64).reshape(rows, cols)
    if not np.all(np.isfinite(mat)):
        raise InvalidArgumentError(f"matrix {name!r} contains non-finite entries")
    return name, mat


def save_matrix(path, name: str, mat: np.ndarray) -> None:
    with open(path, "w") as fh:
        json.dump(matrix_to_dict(name, mat), fh, sort_keys=True)


def load_matrix(path) -> tuple[str, np.ndarray]:
    with open(path) as fh:
        return matrix_from_dict(json.load(fh))


def check_finite(arr: np.ndarray, what: str) -> np.ndarray:
    """Validate an input array: float64, finite. Returns the coerced array."""
    arr = np.asarray(arr, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        bad = int(np.sum(~np.isfinite(arr)))
        raise InvalidArgumentError(f"{what} contains {bad} non-finite entries")
    return arr
