"""Plain-text serialization for columns, masks, bases, traces, and labels.

Floats are written with 17 significant digits so every finite double
survives a write/read cycle bit for bit.  Non-finite trace fields (the NaN
angle of a run without ground truth, the NaN residual of a skipped draw)
are written as empty cells and read back as NaN.
"""

from __future__ import annotations

import math
import os

import numpy as np

from .geometry import ObservedVector, Subspace
from .recovery import RunTrace, TraceRecord

# One double, shortest text that round-trips exactly.
_FLOAT_FMT = "{:.17g}"

_TRACE_HEADER = "iter,col,eta,mu,level,residual,angle,skipped"


def _fmt(x: float) -> str:
    return _FLOAT_FMT.format(float(x))


def _fmt_or_empty(x: float) -> str:
    return "" if not math.isfinite(x) else _FLOAT_FMT.format(float(x))


def write_triplets(path, columns) -> None:
    """Observed entries as ``col row value`` lines, 0-based indices.

    Columns appear in list order, rows ascending inside each column.
    Columns with no observed entries contribute no lines; their ids are
    still recovered on read from the ids of later columns.
    """
    with open(path, "w") as fh:
        for col in columns:
            cid = col.column_id
            for i, v in zip(col.indices, col.values):
                fh.write(f"{cid} {int(i)} {_fmt(v)}\n")


def read_triplets(path, m: int | None = None) -> list[ObservedVector]:
    """Inverse of ``write_triplets``.

    Returns one ``ObservedVector`` per column id from 0 to the largest id
    seen (or ``m - 1`` when ``m`` is given); ids with no entries come back
    as empty columns.  Entries may appear in any order in the file.
    """
    by_col: dict[int, list[tuple[int, float]]] = {}
    max_col = -1
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ValueError(
                    f"{path}:{lineno}: expected 'col row value', got {line!r}"
                )
            try:
                c, r, v = int(parts[0]), int(parts[1]), float(parts[2])
            except ValueError:
                raise ValueError(
                    f"{path}:{lineno}: expected 'col row value', got {line!r}"
                ) from None
            if c < 0 or r < 0:
                raise ValueError(f"{path}:{lineno}: negative index")
            by_col.setdefault(c, []).append((r, v))
            max_col = max(max_col, c)
    count = max_col + 1 if m is None else m
    if max_col >= count:
        raise ValueError(
            f"{path}: column id {max_col} outside expected count {count}"
        )
    columns = []
    for cid in range(count):
        entries = sorted(by_col.get(cid, []))
        rows = np.array([r for r, _ in entries], dtype=np.intp)
        vals = np.array([v for _, v in entries], dtype=np.float64)
        columns.append(ObservedVector(column_id=cid, indices=rows, values=vals))
    return columns


def write_mask(path, columns) -> None:
    """Observation pattern as ``col row`` lines, 0-based."""
    with open(path, "w") as fh:
        for col in columns:
            for i in col.indices:
                fh.write(f"{col.column_id} {int(i)}\n")


def read_mask(path, m: int | None = None) -> list[np.ndarray]:
    """Inverse of ``write_mask``: one sorted index array per column id."""
    by_col: dict[int, list[int]] = {}
    max_col = -1
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(
                    f"{path}:{lineno}: expected 'col row', got {line!r}"
                )
            c, r = int(parts[0]), int(parts[1])
            if c < 0 or r < 0:
                raise ValueError(f"{path}:{lineno}: negative index")
            by_col.setdefault(c, []).append(r)
            max_col = max(max_col, c)
    count = max_col + 1 if m is None else m
    return [
        np.array(sorted(by_col.get(cid, [])), dtype=np.intp)
        for cid in range(count)
    ]


def write_dense(path, X) -> None:
    """Dense matrix, one comma-separated row per line."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"expected a 2-d array, got shape {X.shape}")
    with open(path, "w") as fh:
        for row in X:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def read_dense(path) -> np.ndarray:
    X = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    return X


def write_basis(path, U: Subspace) -> None:
    """Orthonormal basis as an n x d comma-separated matrix."""
    write_dense(path, U.basis)


def read_basis(path) -> Subspace:
    return Subspace(read_dense(path))


def basis_paths(prefix, k: int) -> list[str]:
    """File names for a bank of ``k`` bases: ``{prefix}_00.csv`` on up."""
    root, ext = os.path.splitext(str(prefix))
    if ext == "":
        ext = ".csv"
    return [f"{root}_{i:02d}{ext}" for i in range(k)]


def write_bases(prefix, subspaces) -> list[str]:
    paths = basis_paths(prefix, len(subspaces))
    for path, U in zip(paths, subspaces):
        write_basis(path, U)
    return paths


def read_bases(prefix, k: int) -> list[Subspace]:
    return [read_basis(path) for path in basis_paths(prefix, k)]


def write_trace(path, trace: RunTrace) -> None:
    """Iteration log as CSV under a fixed header; empty cells mark NaN."""
    with open(path, "w") as fh:
        fh.write(_TRACE_HEADER + "\n")
        for r in trace.records:
            fh.write(
                f"{r.iteration},{r.column_id},{_fmt(r.eta)},{_fmt(r.mu)},"
                f"{r.level},{_fmt_or_empty(r.residual_norm)},"
                f"{_fmt_or_empty(r.angle)},{int(r.skipped)}\n"
            )


def read_trace(path) -> RunTrace:
    """Inverse of ``write_trace``; finite fields come back bit-identical."""
    trace = RunTrace()
    with open(path) as fh:
        header = fh.readline().strip()
        if header != _TRACE_HEADER:
            raise ValueError(
                f"{path}: unexpected trace header {header!r}"
            )
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 8:
                raise ValueError(f"{path}:{lineno}: expected 8 fields")
            trace.append(
                TraceRecord(
                    iteration=int(parts[0]),
                    column_id=int(parts[1]),
                    eta=float(parts[2]),
                    mu=float(parts[3]),
                    level=int(parts[4]),
                    residual_norm=float(parts[5]) if parts[5] else math.nan,
                    angle=float(parts[6]) if parts[6] else math.nan,
                    skipped=bool(int(parts[7])),
                )
            )
    return trace


def write_labels(path, labels) -> None:
    """Integer labels, one per line; line number is the column id."""
    labels = np.asarray(labels)
    with open(path, "w") as fh:
        for v in labels:
            fh.write(f"{int(v)}\n")


def read_labels(path) -> np.ndarray:
    out = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(int(line))
    return np.array(out, dtype=np.intp)
