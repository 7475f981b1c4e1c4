"""Dataset file formats: headerless CSV (one data point per line) and the
"VRPC" little-endian binary layout."""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import DatasetFormatError
from .matrix import DataMatrix

MAGIC = b"VRPC"
FORMATS = ("csv", "f64le")


def load_dataset(path, fmt: str) -> DataMatrix:
    """Read a dataset; the max squared column norm is cached on load.

    csv:   one data point per line, d comma-separated decimal values,
           no header.
    f64le: magic "VRPC", u32-LE d, u32-LE n, then n*d little-endian
           float64 values, column after column.
    """
    if fmt not in FORMATS:
        raise DatasetFormatError(f"unknown format {fmt!r}; expected one of {FORMATS}")
    path = Path(path)
    if fmt == "csv":
        return _load_csv(path)
    return _load_binary(path)


def save_dataset(X: DataMatrix, path, fmt: str) -> None:
    if fmt not in FORMATS:
        raise DatasetFormatError(f"unknown format {fmt!r}; expected one of {FORMATS}")
    path = Path(path)
    if fmt == "csv":
        with path.open("w", encoding="ascii") as fh:
            for i in range(X.n):
                fh.write(",".join(repr(float(v)) for v in X.data[:, i]))
                fh.write("\n")
        return
    with path.open("wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", X.d, X.n))
        # column after column == Fortran order of the d x n store
        fh.write(np.asfortranarray(X.data).tobytes(order="F"))


def _load_csv(path: Path) -> DataMatrix:
    rows = []
    width = None
    with path.open("r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if width is None:
                width = len(parts)
            elif len(parts) != width:
                raise DatasetFormatError(
                    f"{path}: line {lineno}: expected {width} values, "
                    f"got {len(parts)}")
            try:
                row = [float(tok) for tok in parts]
            except ValueError as exc:
                raise DatasetFormatError(
                    f"{path}: line {lineno}: {exc}") from exc
            if not all(np.isfinite(row)):
                raise DatasetFormatError(
                    f"{path}: line {lineno}: non-finite value")
            rows.append(row)
    if not rows:
        raise DatasetFormatError(f"{path}: empty dataset")
    return DataMatrix(np.asarray(rows, dtype=np.float64).T)


def _load_binary(path: Path) -> DataMatrix:
    blob = path.read_bytes()
    if len(blob) < 12:
        raise DatasetFormatError(
            f"{path}: truncated header at offset {len(blob)} (need 12 bytes)")
    if blob[:4] != MAGIC:
        raise DatasetFormatError(
            f"{path}: bad magic {blob[:4]!r} at offset 0 (expected {MAGIC!r})")
    d, n = struct.unpack("<II", blob[4:12])
    expected = 12 + 8 * d * n
    if len(blob) != expected:
        raise DatasetFormatError(
            f"{path}: payload ends at offset {len(blob)}, expected {expected} "
            f"for d={d}, n={n}")
    values = np.frombuffer(blob, dtype="<f8", count=d * n, offset=12)
    if not np.isfinite(values).all():
        bad = int(np.flatnonzero(~np.isfinite(values))[0])
        raise DatasetFormatError(
            f"{path}: non-finite value at offset {12 + 8 * bad}")
    return DataMatrix(values.reshape((d, n), order="F"))
