"""Two-view data container, column standardization, and CSV input/output.

A data set is a pair of matrices observed on the same samples: ``x1`` is
n x p1 and ``x2`` is n x p2. Fits operate on the column-concatenated n x
(p1+p2) matrix; the split point ``p1`` is the only extra bookkeeping.

CSV format: UTF-8, comma-separated numeric values, optional single header
row, optional leading id column. Values are written with 17 significant
digits so that read(write(M)) == M exactly.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import ParseError


@dataclass
class MultiViewData:
    """Two feature matrices over the same n samples (n >= 2)."""

    x1: np.ndarray
    x2: np.ndarray
    sample_ids: list | None = None
    feature_names1: list | None = None
    feature_names2: list | None = None

    def __post_init__(self):
        self.x1 = np.atleast_2d(np.asarray(self.x1, dtype=float))
        self.x2 = np.atleast_2d(np.asarray(self.x2, dtype=float))
        if self.x1.ndim != 2 or self.x2.ndim != 2:
            raise ValueError("views must be 2-d matrices")
        if self.x1.shape[0] != self.x2.shape[0]:
            raise ValueError(
                f"views disagree on sample count: {self.x1.shape[0]} vs {self.x2.shape[0]}")
        if self.x1.shape[0] < 2:
            raise ValueError("need at least 2 samples")
        if self.x1.shape[1] < 1 or self.x2.shape[1] < 1:
            raise ValueError("each view needs at least one feature")
        for name, x in (("x1", self.x1), ("x2", self.x2)):
            if not np.all(np.isfinite(x)):
                raise ValueError(f"{name} contains non-finite entries")
        if self.sample_ids is not None and len(self.sample_ids) != self.x1.shape[0]:
            raise ValueError("sample_ids length does not match sample count")
        if self.feature_names1 is not None and len(self.feature_names1) != self.x1.shape[1]:
            raise ValueError("feature_names1 length does not match x1 width")
        if self.feature_names2 is not None and len(self.feature_names2) != self.x2.shape[1]:
            raise ValueError("feature_names2 length does not match x2 width")

    @property
    def n(self):
        return self.x1.shape[0]

    @property
    def p1(self):
        return self.x1.shape[1]

    @property
    def p2(self):
        return self.x2.shape[1]

    @property
    def p(self):
        return self.p1 + self.p2


def concat(data):
    """Column-concatenate the two views into one n x (p1+p2) matrix."""
    return np.hstack([data.x1, data.x2])


def split(matrix, p1):
    """Split a concatenated matrix (or vector) back into its two views."""
    matrix = np.asarray(matrix)
    if not 1 <= p1 < matrix.shape[-1]:
        raise ValueError("p1 must leave at least one column in each view")
    return matrix[..., :p1], matrix[..., p1:]


@dataclass
class StandardizationRecord:
    """Per-column means/scales applied to a data set; supports exact inversion.

    Constant columns keep scale 1 and are marked in ``constant_mask``.
    """

    means: np.ndarray
    scales: np.ndarray
    scaled: bool
    constant_mask: np.ndarray = field(default=None)

    def apply(self, matrix):
        """Apply the recorded transform to new rows (same column layout)."""
        return (np.asarray(matrix, dtype=float) - self.means) / self.scales

    def invert(self, matrix):
        """Undo the transform: ``invert(apply(M)) == M`` up to roundoff."""
        return np.asarray(matrix, dtype=float) * self.scales + self.means


def standardize(data, scale=False):
    """Center each column of both views; optionally divide by the sample sd.

    Standard deviations use the n-1 divisor. Columns with zero variance are
    centered, left unscaled, and flagged in the returned record. Returns
    ``(standardized_data, record)`` where the record's column order is the
    concatenated one (view 1 then view 2).
    """
    x = concat(data)
    means = x.mean(axis=0)
    scales = np.ones(x.shape[1])
    constant = np.zeros(x.shape[1], dtype=bool)
    if scale:
        sd = x.std(axis=0, ddof=1)
        constant = sd == 0
        scales = np.where(constant, 1.0, sd)
    xs = (x - means) / scales
    x1, x2 = split(xs, data.p1)
    out = MultiViewData(x1, x2, sample_ids=data.sample_ids,
                        feature_names1=data.feature_names1,
                        feature_names2=data.feature_names2)
    record = StandardizationRecord(means=means, scales=scales, scaled=bool(scale),
                                   constant_mask=constant)
    return out, record


@dataclass
class CsvView:
    """A parsed CSV matrix with optional header names and row ids."""

    values: np.ndarray
    feature_names: list | None = None
    sample_ids: list | None = None


def read_csv_view(path, has_header=False, id_column=False):
    """Read one view from CSV. Errors carry 1-based row/column positions."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if r]  # drop completely blank lines
    if not rows:
        raise ParseError(f"{path}: empty file")

    feature_names = None
    sample_ids = [] if id_column else None
    start = 0
    if has_header:
        header = rows[0]
        feature_names = [h.strip() for h in (header[1:] if id_column else header)]
        start = 1
    body = rows[start:]
    if not body:
        raise ParseError(f"{path}: no data rows")

    width = len(body[0])
    values = []
    for i, row in enumerate(body):
        rownum = start + i + 1
        if len(row) != width:
            raise ParseError(
                f"{path}: row {rownum}: expected {width} fields, got {len(row)}",
                row=rownum)
        cells = row
        if id_column:
            sample_ids.append(cells[0].strip())
            cells = cells[1:]
        parsed = []
        for j, cell in enumerate(cells):
            try:
                parsed.append(float(cell))
            except ValueError:
                colnum = j + 2 if id_column else j + 1
                raise ParseError(
                    f"{path}: row {rownum}, column {colnum}: "
                    f"non-numeric value {cell.strip()!r}",
                    row=rownum, col=colnum) from None
        values.append(parsed)
    mat = np.array(values, dtype=float)
    if mat.shape[1] == 0:
        raise ParseError(f"{path}: no numeric columns")
    if feature_names is not None and len(feature_names) != mat.shape[1]:
        raise ParseError(f"{path}: header width {len(feature_names)} does not "
                         f"match data width {mat.shape[1]}", row=1)
    return CsvView(values=mat, feature_names=feature_names, sample_ids=sample_ids)


def format_float(x):
    """17-significant-digit decimal form; round-trips any float exactly."""
    return f"{x:.17g}"


def write_csv(path, values, feature_names=None, sample_ids=None):
    """Write a matrix as CSV with 17-significant-digit values."""
    values = np.atleast_2d(np.asarray(values, dtype=float))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        if feature_names is not None:
            head = list(feature_names)
            if sample_ids is not None:
                head = ["id"] + head
            fh.write(",".join(head) + "\n")
        for i, row in enumerate(values):
            cells = [format_float(v) for v in row]
            if sample_ids is not None:
                cells = [str(sample_ids[i])] + cells
            fh.write(",".join(cells) + "\n")
