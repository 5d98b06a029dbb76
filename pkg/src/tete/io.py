"""Plain-text file formats.

Triplet files
    UTF-8 CSV, one ``i,j,k`` triplet per line (0-based indices), optionally
    followed by a weight column. An optional first line ``# objects=N`` fixes
    the number of objects; any other line starting with ``#`` is a comment.
Data files
    UTF-8 CSV, one object per row with ``D`` real columns, plus a final
    integer label column when read with ``labeled=True``.
Embedding and trace files
    UTF-8 CSV written with 17 significant digits so values round-trip
    exactly. Writers accept a configuration dict that is echoed as a
    ``# config=`` comment line.
"""

import json
import re

import numpy as np

from tete.core import WeightedTripletSet
from tete.triplets import LabeledDataset, TripletSet

_OBJECTS_HEADER = re.compile(r"#\s*objects\s*=\s*(\d+)\s*$")


class FileFormatError(ValueError):
    """A file that exists but does not follow its format."""

    def __init__(self, path, line, message):
        self.path = str(path)
        self.line = line
        super().__init__(f"{path}:{line}: {message}")


def _fmt(x):
    return f"{x:.17g}"


def _config_line(config):
    if config is None:
        return ""
    return "# config=" + json.dumps(config, sort_keys=True, default=str) + "\n"


def _read_rows(path):
    """Yield ``(line_number, fields)`` for data lines; header/comments are skipped."""
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            yield lineno, [f.strip() for f in stripped.split(",")]


def read_config(path):
    """The configuration echoed in a file written by this module, or ``None``."""
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("# config="):
                return json.loads(line[len("# config="):])
            if not line.startswith("#"):
                return None
    return None


def load_weighted_triplets(path):
    """Read a triplet file; files without a weight column get unit weights."""
    declared = None
    with open(path, encoding="utf-8") as fh:
        first = fh.readline().strip()
    match = _OBJECTS_HEADER.match(first)
    if match:
        declared = int(match.group(1))

    rows, weights = [], []
    width = None
    for lineno, fields in _read_rows(path):
        if len(fields) not in (3, 4):
            raise FileFormatError(path, lineno, f"expected 3 or 4 fields, got {len(fields)}")
        if width is None:
            width = len(fields)
        elif len(fields) != width:
            raise FileFormatError(path, lineno, "mixed weighted and unweighted rows")
        try:
            triplet = [int(f) for f in fields[:3]]
        except ValueError:
            raise FileFormatError(path, lineno, "indices must be integers") from None
        if min(triplet) < 0:
            raise FileFormatError(path, lineno, "indices must be non-negative")
        if declared is not None and max(triplet) >= declared:
            raise FileFormatError(
                path, lineno, f"index {max(triplet)} out of range for {declared} objects"
            )
        if len(set(triplet)) < 3:
            raise FileFormatError(path, lineno, f"degenerate triplet {tuple(triplet)}")
        rows.append(triplet)
        if width == 4:
            try:
                w = float(fields[3])
            except ValueError:
                raise FileFormatError(path, lineno, "weight must be a real number") from None
            if not (np.isfinite(w) and w >= 0):
                raise FileFormatError(path, lineno, "weight must be finite and non-negative")
            weights.append(w)

    arr = np.asarray(rows, dtype=np.int64).reshape(-1, 3)
    n = declared if declared is not None else (int(arr.max()) + 1 if len(arr) else 0)
    ts = TripletSet(arr, n)
    return WeightedTripletSet(ts, weights if width == 4 else None)


def load_triplets(path):
    """Read a triplet file into a :class:`TripletSet` (any weight column is ignored)."""
    return load_weighted_triplets(path).base


def save_triplets(path, triplets, config=None):
    """Write a :class:`TripletSet` or :class:`WeightedTripletSet`."""
    weighted = isinstance(triplets, WeightedTripletSet)
    base = triplets.base if weighted else triplets
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# objects={base.num_objects}\n")
        fh.write(_config_line(config))
        if weighted:
            for (i, j, k), w in zip(base.triplets.tolist(), triplets.weights.tolist()):
                fh.write(f"{i},{j},{k},{_fmt(w)}\n")
        else:
            for i, j, k in base.triplets.tolist():
                fh.write(f"{i},{j},{k}\n")


def load_data(path, labeled=False):
    """Read a data file into a :class:`LabeledDataset`."""
    rows, labels = [], []
    width = None
    for lineno, fields in _read_rows(path):
        if width is None:
            width = len(fields)
            if width < (2 if labeled else 1):
                raise FileFormatError(path, lineno, "too few columns")
        elif len(fields) != width:
            raise FileFormatError(path, lineno, f"expected {width} fields, got {len(fields)}")
        values = fields[:-1] if labeled else fields
        try:
            rows.append([float(f) for f in values])
        except ValueError:
            raise FileFormatError(path, lineno, "non-numeric value") from None
        if not all(np.isfinite(rows[-1])):
            raise FileFormatError(path, lineno, "non-finite value")
        if labeled:
            try:
                labels.append(int(fields[-1]))
            except ValueError:
                raise FileFormatError(path, lineno, "label must be an integer") from None
    if width is None:
        raise FileFormatError(path, 0, "no data rows")
    return LabeledDataset(np.asarray(rows), np.asarray(labels) if labeled else None)


def save_data(path, ds):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r, row in enumerate(ds.data.tolist()):
            line = ",".join(_fmt(x) for x in row)
            if ds.labels is not None:
                line += f",{int(ds.labels[r])}"
            fh.write(line + "\n")


def save_embedding(path, y, config=None):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_config_line(config))
        for row in np.asarray(y, dtype=np.float64).tolist():
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def load_embedding(path):
    rows = []
    width = None
    for lineno, fields in _read_rows(path):
        if width is None:
            width = len(fields)
        elif len(fields) != width:
            raise FileFormatError(path, lineno, f"expected {width} fields, got {len(fields)}")
        try:
            rows.append([float(f) for f in fields])
        except ValueError:
            raise FileFormatError(path, lineno, "non-numeric value") from None
    if width is None:
        raise FileFormatError(path, 0, "empty embedding file")
    y = np.asarray(rows)
    if not np.all(np.isfinite(y)):
        raise FileFormatError(path, 0, "embedding contains non-finite values")
    return y


def save_trace(path, trace, config=None):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_config_line(config))
        fh.write("iteration,objective\n")
        for it, value in enumerate(np.asarray(trace).tolist()):
            fh.write(f"{it},{_fmt(value)}\n")


def load_trace(path):
    values = []
    for lineno, fields in _read_rows(path):
        if fields == ["iteration", "objective"]:
            continue
        values.append(float(fields[1]))
    return np.asarray(values)
