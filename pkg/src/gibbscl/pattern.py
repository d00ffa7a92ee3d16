"""Rectangular windows, planar point patterns and range-limited neighbor queries."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _kernels


class GeometryError(ValueError):
    """Raised for invalid windows, erosions or point patterns."""


@dataclass(frozen=True)
class ObservationWindow:
    """Closed rectangle ``[xmin, xmax] x [ymin, ymax]``."""

    xmin: float
    xmax: float
    ymin: float
    ymax: float

    def __post_init__(self):
        vals = (self.xmin, self.xmax, self.ymin, self.ymax)
        if not all(math.isfinite(v) for v in vals):
            raise GeometryError(f"non-finite window bounds {vals}")
        if not (self.xmin < self.xmax and self.ymin < self.ymax):
            raise GeometryError(f"degenerate window {vals}")

    @property
    def width(self) -> float:
        return self.xmax - self.xmin

    @property
    def height(self) -> float:
        return self.ymax - self.ymin

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        return (self.xmin, self.xmax, self.ymin, self.ymax)

    def contains(self, points) -> np.ndarray:
        """Boolean mask of points lying in the closed rectangle."""
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        return (
            (pts[:, 0] >= self.xmin)
            & (pts[:, 0] <= self.xmax)
            & (pts[:, 1] >= self.ymin)
            & (pts[:, 1] <= self.ymax)
        )


@dataclass(frozen=True)
class ErodedDomain(ObservationWindow):
    """Window shrunk by ``erosion_radius`` on every side (minus sampling).

    Width and height are taken from the parent window so that
    ``area == (W.width - 2r) * (W.height - 2r)`` holds without rounding drift.
    """

    erosion_radius: float = 0.0
    parent: ObservationWindow | None = None

    @property
    def width(self) -> float:
        if self.parent is None:
            return self.xmax - self.xmin
        return self.parent.width - 2 * self.erosion_radius

    @property
    def height(self) -> float:
        if self.parent is None:
            return self.ymax - self.ymin
        return self.parent.height - 2 * self.erosion_radius


def erode_window(window: ObservationWindow, r: float) -> ErodedDomain:
    """Return ``window`` eroded by ``r``.

    Raises
    ------
    GeometryError
        If ``r < 0`` or the eroded rectangle would be empty.
    """
    if r < 0:
        raise GeometryError(f"erosion radius must be >= 0, got {r}")
    if 2 * r >= window.width or 2 * r >= window.height:
        raise GeometryError(
            f"erosion by {r} leaves no interior in window {window.bounds}"
        )
    return ErodedDomain(
        window.xmin + r, window.xmax - r, window.ymin + r, window.ymax - r, float(r), window
    )


class PointPattern:
    """Finite set of distinct points inside an observation window.

    Parameters
    ----------
    points : array_like, shape (n, 2)
    window : ObservationWindow
    check : bool
        Validate containment and distinctness. Internal callers that
        construct patterns from already validated data pass ``False``.
    """

    __slots__ = ("points", "window")

    def __init__(self, points, window: ObservationWindow, check: bool = True):
        pts = np.ascontiguousarray(np.asarray(points, dtype=float).reshape(-1, 2))
        if check:
            if not np.all(np.isfinite(pts)):
                raise GeometryError("non-finite coordinates in pattern")
            if not np.all(window.contains(pts)):
                raise GeometryError("pattern has points outside its window")
            if len(pts) > 1 and len(np.unique(pts, axis=0)) != len(pts):
                raise GeometryError("pattern has duplicated points")
        pts.setflags(write=False)
        self.points = pts
        self.window = window

    def __len__(self) -> int:
        return len(self.points)

    def __repr__(self) -> str:
        return f"PointPattern(n={len(self)}, window={self.window.bounds})"

    @property
    def x(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.points[:, 1]

    @classmethod
    def from_csv(cls, path, window: ObservationWindow) -> "PointPattern":
        """Read a ``x,y`` CSV file."""
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = [h.strip() for h in next(reader)]
            if header != ["x", "y"]:
                raise GeometryError(f"{path}: expected header 'x,y', got {header}")
            rows = [(float(a), float(b)) for a, b in reader]
        return cls(np.array(rows, dtype=float).reshape(-1, 2), window)

    def to_csv(self, path) -> None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "y"])
            for x, y in self.points:
                w.writerow([repr(float(x)), repr(float(y))])


def restrict_pattern(pattern: PointPattern, domain: ObservationWindow) -> PointPattern:
    """Keep the points of ``pattern`` lying in the closed rectangle ``domain``."""
    keep = domain.contains(pattern.points)
    return PointPattern(pattern.points[keep], domain, check=False)


class BucketIndex:
    """Uniform grid of square cells over a window, for range-limited queries.

    Cells have side ``cell`` (normally the query range) so every query scans
    at most a 3x3 block. The index is static; rebuild it when points change.
    """

    def __init__(self, points, window: ObservationWindow, cell: float):
        if cell <= 0:
            raise GeometryError("cell size must be positive")
        pts = np.ascontiguousarray(np.asarray(points, dtype=float).reshape(-1, 2))
        self.points = pts
        self.cell = float(cell)
        self.x0 = window.xmin
        self.y0 = window.ymin
        # cap the cell count so tiny ranges on big windows stay cheap
        self.nx = int(min(max(1, math.ceil(window.width / cell)), 4096))
        self.ny = int(min(max(1, math.ceil(window.height / cell)), 4096))
        self.cell = max(self.cell, window.width / self.nx, window.height / self.ny)
        self.starts, self.order = _kernels.build_cells(
            pts[:, 0].copy(), pts[:, 1].copy(), self.x0, self.y0, self.cell, self.nx, self.ny
        )

    @property
    def geometry(self):
        return (self.x0, self.y0, self.cell, self.nx, self.ny)

    def count(self, queries, r: float, exclude=None) -> np.ndarray:
        """Number of indexed points within distance ``r`` of each query.

        ``exclude`` holds, per query, the index of one indexed point to skip
        (``-1`` for none).
        """
        if r > self.cell:
            raise GeometryError(f"query range {r} exceeds cell size {self.cell}")
        q = np.asarray(queries, dtype=float).reshape(-1, 2)
        if exclude is None:
            exclude = np.full(len(q), -1, dtype=np.int64)
        exclude = np.asarray(exclude, dtype=np.int64)
        return _kernels.count_neighbors(
            q[:, 0].copy(), q[:, 1].copy(), exclude,
            self.points[:, 0].copy(), self.points[:, 1].copy(),
            self.starts, self.order, *self.geometry, float(r),
        )


def neighbor_count(u, pattern: PointPattern, r: float, exclude=None) -> int:
    """Number of points ``v`` of ``pattern`` with ``|v - u| <= r`` and ``v != exclude``."""
    if r <= 0:
        raise GeometryError(f"range must be positive, got {r}")
    if len(pattern) == 0:
        return 0
    u = np.asarray(u, dtype=float).reshape(1, 2)
    skip = -1
    if exclude is not None:
        hit = np.flatnonzero(np.all(pattern.points == np.asarray(exclude, float), axis=1))
        if len(hit):
            skip = int(hit[0])
    index = BucketIndex(pattern.points, pattern.window, r)
    return int(index.count(u, r, np.array([skip]))[0])
