"""CSV readers and writers.

Sample CSVs have one sample per row and one feature per column, an
optional header line and an optional trailing integer label column.  They
are transposed on load so the returned data matrix has samples as columns.
"""

import contextlib
import csv
import hashlib
import io
from typing import NamedTuple, Optional

import numpy as np

from repsel.errors import DataError


class SampleTable(NamedTuple):
    data: np.ndarray  # (m, n), columns are samples
    labels: Optional[np.ndarray]
    header: Optional[list]
    sha256: str


def _is_number(tok):
    try:
        float(tok)
    except ValueError:
        return False
    return True


def read_rows(path):
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror or exc}") from exc
    digest = hashlib.sha256(raw).hexdigest()
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise DataError(f"{path} is not UTF-8 text") from exc
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    header = None
    if rows and not all(_is_number(c) for c in rows[0]):
        header, rows = rows[0], rows[1:]
    if not rows:
        raise DataError(f"{path} contains no data rows")
    width = len(rows[0])
    for k, r in enumerate(rows):
        if len(r) != width:
            raise DataError(f"{path}: row {k} has {len(r)} fields, expected {width}")
    try:
        arr = np.array([[float(c) for c in r] for r in rows], dtype=np.float64)
    except ValueError as exc:
        raise DataError(f"{path}: non-numeric value ({exc})") from exc
    return arr, header, digest


def read_samples(path, labels: bool = False) -> SampleTable:
    arr, header, digest = read_rows(path)
    y = None
    if labels:
        if arr.shape[1] < 2:
            raise DataError("label column requested but the file has a single column")
        y_raw = arr[:, -1]
        if not np.all(np.isfinite(y_raw)) or np.any(y_raw != np.round(y_raw)):
            raise DataError("label column must contain integers")
        y = y_raw.astype(np.int64)
        arr = arr[:, :-1]
    if not np.all(np.isfinite(arr)):
        raise DataError(f"{path} contains NaN or Inf")
    return SampleTable(np.ascontiguousarray(arr.T), y, header, digest)


def read_kernel(path):
    arr, _, digest = read_rows(path)
    if arr.shape[0] != arr.shape[1]:
        raise DataError(f"precomputed kernel must be square, got {arr.shape}")
    return arr, digest


def _fmt(x):
    return repr(float(x))


def _open_out(target):
    """Open a path for writing, or pass an already open text stream through."""
    if hasattr(target, "write"):
        return contextlib.nullcontext(target)
    return open(target, "w", newline="")


def write_matrix(target, M):
    with _open_out(target) as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in np.asarray(M):
            w.writerow([_fmt(x) for x in row])


def write_samples(target, D, labels=None):
    """Write a column-sample matrix as rows, with header and optional label column."""
    D = np.asarray(D)
    m = D.shape[0]
    header = [f"x{i}" for i in range(m)] + (["label"] if labels is not None else [])
    with _open_out(target) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for j in range(D.shape[1]):
            row = [_fmt(x) for x in D[:, j]]
            if labels is not None:
                row.append(str(int(labels[j])))
            w.writerow(row)
