"""Point clouds on the unit torus [0, 1)^n and their CSV form."""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, DomainError, ParseError

__all__ = [
    "PointCloud", "as_points", "wrap", "read_cloud_csv", "write_cloud_csv",
    "read_columns_csv", "write_columns_csv", "fmt",
]


def fmt(value) -> str:
    """Shortest round-trip text form of a float."""
    return repr(float(value))


def wrap(x):
    """Map coordinates into [0, 1)."""
    y = np.mod(x, 1.0)
    # mod can return exactly 1.0 for tiny negative inputs
    return np.where(y >= 1.0, 0.0, y)


@dataclass(frozen=True)
class PointCloud:
    """Ordered points in [0, 1)^n, optionally labelled by surface component."""

    points: np.ndarray
    labels: np.ndarray | None = field(default=None)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2:
            raise DomainError("points must have shape (N, n)")
        pts = pts.copy()
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        if self.labels is not None:
            lab = np.asarray(self.labels, dtype=np.int64).copy()
            if lab.shape != (pts.shape[0],):
                raise DomainError("labels must have one entry per point")
            lab.setflags(write=False)
            object.__setattr__(self, "labels", lab)

    @classmethod
    def empty(cls, dims: int, labelled: bool = False) -> "PointCloud":
        return cls(np.zeros((0, dims)), np.zeros(0, dtype=np.int64) if labelled else None)

    @property
    def dims(self) -> int:
        return self.points.shape[1]

    def __len__(self):
        return self.points.shape[0]

    def component(self, label: int) -> "PointCloud":
        if self.labels is None:
            raise DomainError("cloud carries no component labels")
        mask = self.labels == label
        return PointCloud(self.points[mask], self.labels[mask])

    @staticmethod
    def concat(clouds) -> "PointCloud":
        clouds = list(clouds)
        pts = np.concatenate([c.points for c in clouds], axis=0)
        if all(c.labels is not None for c in clouds):
            return PointCloud(pts, np.concatenate([c.labels for c in clouds]))
        return PointCloud(pts)


def as_points(x, dims: int | None = None) -> np.ndarray:
    """Coerce a PointCloud, a single point or an (N, n) array to an (N, n) array."""
    if isinstance(x, PointCloud):
        pts = x.points
    else:
        pts = np.asarray(x, dtype=float)
        if pts.ndim == 1:
            pts = pts[None, :]
    if dims is not None and pts.shape[1] != dims:
        raise DimensionMismatch(f"points have dimension {pts.shape[1]}, expected {dims}")
    return pts


def write_cloud_csv(cloud: PointCloud, path_or_buf):
    n = cloud.dims
    header = [f"x{i + 1}" for i in range(n)]
    if cloud.labels is not None:
        header.append("component")
    own = isinstance(path_or_buf, (str, bytes)) or hasattr(path_or_buf, "__fspath__")
    fh = open(path_or_buf, "w", newline="") if own else path_or_buf
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i, row in enumerate(cloud.points):
            out = [fmt(v) for v in row]
            if cloud.labels is not None:
                out.append(str(int(cloud.labels[i])))
            w.writerow(out)
    finally:
        if own:
            fh.close()


def read_cloud_csv(path_or_text, *, text: bool = False) -> PointCloud:
    """Read a cloud CSV with columns x1..xn and an optional ``component``.

    Malformed rows raise ParseError naming the offending line.
    """
    if text:
        fh = io.StringIO(path_or_text)
    else:
        fh = open(path_or_text, newline="")
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("line 1: empty cloud file, expected a header") from None
        header = [h.strip() for h in header]
        xcols = [i for i, h in enumerate(header) if h.startswith("x")]
        if not xcols:
            raise ParseError("line 1: header has no x1..xn columns")
        lcol = header.index("component") if "component" in header else None
        pts, labs = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ParseError(f"line {lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                vals = [float(row[i]) for i in xcols]
                pts.append(vals)
                if lcol is not None:
                    labs.append(int(row[lcol]))
            except ValueError as exc:
                raise ParseError(f"line {lineno}: {exc}") from None
            if not np.all(np.isfinite(vals)):
                raise ParseError(f"line {lineno}: non-finite coordinate")
    arr = np.array(pts, dtype=float).reshape(-1, len(xcols))
    return PointCloud(arr, np.array(labs, dtype=np.int64) if lcol is not None else None)


def _numbered(header, prefix):
    pat = re.compile(re.escape(prefix) + r"(\d+)$")
    found = [(int(m.group(1)), i) for i, h in enumerate(header) if (m := pat.match(h))]
    return [i for _, i in sorted(found)]


def read_columns_csv(path_or_text, prefixes=("x", "y"), *, text: bool = False):
    """Read numbered column groups (x1..xn, y1..ym, ...) as float arrays.

    Returns one (rows, k) array per prefix; a group may be empty.
    """
    fh = io.StringIO(path_or_text) if text else open(path_or_text, newline="")
    with fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError("line 1: empty file, expected a header") from None
        groups = [_numbered(header, p) for p in prefixes]
        rows = [[] for _ in prefixes]
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ParseError(f"line {lineno}: expected {len(header)} fields, got {len(row)}")
            for g, cols in enumerate(groups):
                try:
                    vals = [float(row[i]) for i in cols]
                except ValueError as exc:
                    raise ParseError(f"line {lineno}: {exc}") from None
                if not np.all(np.isfinite(vals)):
                    raise ParseError(f"line {lineno}: non-finite value")
                rows[g].append(vals)
    return [np.array(r, dtype=float).reshape(-1, len(c)) for r, c in zip(rows, groups)]


def write_columns_csv(path_or_buf, columns: dict):
    """Write named 2-D float blocks side by side; block ``"x"`` of width 3
    becomes columns x1, x2, x3."""
    header, blocks = [], []
    for name, block in columns.items():
        block = np.asarray(block, dtype=float)
        if block.ndim == 1:
            block = block[:, None]
        header += [f"{name}{i + 1}" for i in range(block.shape[1])]
        blocks.append(block)
    data = np.hstack(blocks) if blocks else np.zeros((0, 0))
    own = isinstance(path_or_buf, (str, bytes)) or hasattr(path_or_buf, "__fspath__")
    fh = open(path_or_buf, "w", newline="") if own else path_or_buf
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in data:
            w.writerow([fmt(v) for v in row])
    finally:
        if own:
            fh.close()
