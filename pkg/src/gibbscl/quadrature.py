"""Berman-Turner quadrature, logistic dummy points and design matrices."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .covariates import CovariateStack
from .model import InteractionSpec, _data_tau, interaction_stats
from .pattern import BucketIndex, ErodedDomain, GeometryError, ObservationWindow, PointPattern


class QuadratureError(ValueError):
    """Raised for invalid quadrature requests."""


@dataclass(frozen=True)
class QuadratureScheme:
    """Quadrature points with weights, responses and data flags.

    Attributes
    ----------
    points : (N, 2) array
    weights : (N,) array
        Berman-Turner: counting weights summing to ``|D|``. Logistic: ``1/delta``
        for dummies and 0 for data (used only for integrals over dummies).
    responses : (N,) array
        Berman-Turner: ``1/nu`` for data, 0 for dummies. Logistic: 1 for data.
    is_data : (N,) bool array
    data_index : (N,) int array
        Row in the parent pattern for data points, -1 for dummies.
    domain : ObservationWindow
    kind : {"berman_turner", "logistic"}
    delta : (N,) array or None
        Dummy intensity per point (logistic only).
    """

    points: np.ndarray
    weights: np.ndarray
    responses: np.ndarray
    is_data: np.ndarray
    data_index: np.ndarray
    domain: ObservationWindow
    kind: str = "berman_turner"
    delta: np.ndarray | None = None
    extra: dict = field(default_factory=dict, compare=False)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def n_data(self) -> int:
        return int(self.is_data.sum())

    @property
    def area(self) -> float:
        return self.domain.area


def default_nd(n_points: int, factor: float) -> int:
    """Grid side with ``nd**2`` close to ``factor * n``, rounded up."""
    return max(1, int(math.ceil(math.sqrt(factor * max(n_points, 1)))))


def _data_in(pattern: PointPattern, domain: ObservationWindow):
    idx = np.flatnonzero(domain.contains(pattern.points))
    return pattern.points[idx], idx


def berman_turner_scheme(pattern: PointPattern, domain: ObservationWindow,
                         nd: int) -> QuadratureScheme:
    """Data points in ``domain`` plus an ``nd`` x ``nd`` grid of tile centres.

    Every point in a tile gets weight ``tile_area / (points in tile)``. Tiles
    are half-open ``[lo, hi)`` except the last row and column, which also take
    the upper edge.
    """
    if nd < 1:
        raise QuadratureError("nd must be >= 1")
    if not domain.area > 0:
        raise QuadratureError("empty domain")
    dx = domain.width / nd
    dy = domain.height / nd
    gx = domain.xmin + (np.arange(nd) + 0.5) * dx
    gy = domain.ymin + (np.arange(nd) + 0.5) * dy
    mx, my = np.meshgrid(gx, gy)
    dummies = np.column_stack([mx.ravel(), my.ravel()])
    data, idx = _data_in(pattern, domain)
    pts = np.vstack([data, dummies])
    ix = np.clip(np.floor((pts[:, 0] - domain.xmin) / dx).astype(np.int64), 0, nd - 1)
    iy = np.clip(np.floor((pts[:, 1] - domain.ymin) / dy).astype(np.int64), 0, nd - 1)
    tile = iy * nd + ix
    counts = np.bincount(tile, minlength=nd * nd)
    weights = (dx * dy) / counts[tile]
    nd_data = len(data)
    is_data = np.zeros(len(pts), dtype=bool)
    is_data[:nd_data] = True
    responses = np.where(is_data, 1.0 / weights, 0.0)
    data_index = np.full(len(pts), -1, dtype=np.int64)
    data_index[:nd_data] = idx
    return QuadratureScheme(pts, weights, responses, is_data, data_index, domain, "berman_turner")


def logistic_dummies(domain: ObservationWindow, delta: float, seed) -> PointPattern:
    """Homogeneous Poisson(``delta``) pattern on ``domain``."""
    if not delta > 0:
        raise QuadratureError(f"dummy intensity must be positive, got {delta}")
    rng = np.random.default_rng(seed)
    n = rng.poisson(delta * domain.area)
    pts = np.column_stack([
        domain.xmin + rng.random(n) * domain.width,
        domain.ymin + rng.random(n) * domain.height,
    ])
    return PointPattern(pts, domain, check=False)


def logistic_scheme(pattern: PointPattern, domain: ObservationWindow,
                    delta: float | None = None, seed=0,
                    dummies: PointPattern | None = None) -> QuadratureScheme:
    """Data points in ``domain`` plus Poisson(``delta``) dummies.

    The default ``delta`` is ``4 n / |D|`` with ``n`` the data count in ``domain``.
    """
    data, idx = _data_in(pattern, domain)
    if delta is None:
        delta = 4.0 * max(len(data), 1) / domain.area
    if dummies is None:
        dummies = logistic_dummies(domain, delta, seed)
    pts = np.vstack([data, dummies.points])
    n = len(data)
    is_data = np.zeros(len(pts), dtype=bool)
    is_data[:n] = True
    deltas = np.full(len(pts), float(delta))
    weights = np.where(is_data, 0.0, 1.0 / deltas)
    data_index = np.full(len(pts), -1, dtype=np.int64)
    data_index[:n] = idx
    return QuadratureScheme(pts, weights, is_data.astype(float), is_data, data_index,
                            domain, "logistic", deltas)


@dataclass(frozen=True)
class DesignMatrix:
    """Rows ``t(u_i, x minus u_i)`` at data points and ``t(u_i, x)`` at dummies.

    Column layout: interaction block, intercept, covariates. ``matrix`` is
    Fortran-ordered for column sweeps.
    """

    matrix: np.ndarray
    names: tuple[str, ...]
    n_interaction: int

    @property
    def p(self) -> int:
        return self.matrix.shape[1]

    @property
    def penalizable(self) -> np.ndarray:
        """True for covariate columns (not interaction, not intercept)."""
        mask = np.ones(self.p, dtype=bool)
        mask[: self.n_interaction + 1] = False
        return mask


def pattern_index(spec: InteractionSpec, pattern: PointPattern, extra=None) -> BucketIndex:
    """Bucket index over the pattern with cell = interaction range."""
    window = pattern.window
    if extra is not None and len(extra):
        e = np.asarray(extra, float)
        window = ObservationWindow(min(window.xmin, e[:, 0].min()), max(window.xmax, e[:, 0].max()),
                                   min(window.ymin, e[:, 1].min()), max(window.ymax, e[:, 1].max()))
    return BucketIndex(pattern.points, window, spec.range)


def build_design(spec: InteractionSpec, scheme: QuadratureScheme, pattern: PointPattern,
                 covariates: CovariateStack | None) -> DesignMatrix:
    """Sufficient statistics at every quadrature point."""
    n = len(scheme)
    q = len(covariates) if covariates is not None else 0
    cols = []
    names = []
    if spec.n_interaction:
        if len(pattern):
            index = pattern_index(spec, pattern, scheme.points)
            tau = _data_tau(spec, pattern.points, index) if spec.kind == "geyer" else None
            s = interaction_stats(spec, scheme.points, pattern, scheme.data_index, index, tau)
        else:
            s = np.zeros((n, 1))
        cols.append(s)
        names.append("psi")
    cols.append(np.ones((n, 1)))
    names.append("intercept")
    if q:
        cols.append(covariates.values_at(scheme.points))
        names.extend(covariates.names)
    mat = np.asfortranarray(np.hstack(cols))
    return DesignMatrix(mat, tuple(names), spec.n_interaction)


__all__ = [
    "QuadratureScheme", "QuadratureError", "DesignMatrix", "berman_turner_scheme",
    "logistic_dummies", "logistic_scheme", "build_design", "default_nd", "GeometryError",
    "ErodedDomain",
]
