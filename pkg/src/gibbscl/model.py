"""Log-linear Papangelou conditional intensities with Strauss and Geyer interactions.

The sufficient statistic at a location is ``t(u, x) = (s(u, x), 1, z(u))``:
the interaction block first, then a constant intercept channel, then the
covariates in stack order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .covariates import CovariateStack
from .pattern import BucketIndex, ObservationWindow, PointPattern

KINDS = {"poisson": _kernels.POISSON, "strauss": _kernels.STRAUSS, "geyer": _kernels.GEYER}


class ModelError(ValueError):
    """Raised for invalid interaction specifications or parameters."""


@dataclass(frozen=True)
class InteractionSpec:
    """Interaction family: ``poisson``, ``strauss`` (range R) or ``geyer`` (range R, saturation)."""

    kind: str = "poisson"
    range: float = 0.0
    saturation: float = 1.0

    def __post_init__(self):
        kind = self.kind.lower()
        object.__setattr__(self, "kind", kind)
        if kind not in KINDS:
            raise ModelError(f"unknown interaction {self.kind!r}")
        if kind != "poisson" and not self.range > 0:
            raise ModelError(f"{kind} interaction needs range > 0")
        if kind == "geyer":
            sat = float(self.saturation)
            if sat < 1 or sat != math.floor(sat):
                raise ModelError(f"Geyer saturation must be an integer >= 1, got {sat}")

    @classmethod
    def poisson(cls):
        return cls("poisson")

    @classmethod
    def strauss(cls, r: float):
        return cls("strauss", float(r))

    @classmethod
    def geyer(cls, r: float, saturation: float = 1.0):
        return cls("geyer", float(r), float(saturation))

    @property
    def code(self) -> int:
        return KINDS[self.kind]

    @property
    def n_interaction(self) -> int:
        """Length l of the interaction parameter block."""
        return 0 if self.kind == "poisson" else 1

    @property
    def effective_range(self) -> float:
        """Range beyond which inserting a point leaves s(u, x) unchanged."""
        if self.kind == "poisson":
            return 0.0
        return 2.0 * self.range if self.kind == "geyer" else self.range


@dataclass(frozen=True)
class ThetaVector:
    """theta = (psi, beta); ``beta[0]`` is the intercept."""

    psi: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        psi = np.atleast_1d(np.asarray(self.psi, dtype=float))
        beta = np.atleast_1d(np.asarray(self.beta, dtype=float))
        if not (np.all(np.isfinite(psi)) and np.all(np.isfinite(beta))):
            raise ModelError("theta has non-finite entries")
        object.__setattr__(self, "psi", psi)
        object.__setattr__(self, "beta", beta)

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate([self.psi, self.beta])

    @classmethod
    def from_vector(cls, theta, n_interaction: int) -> "ThetaVector":
        theta = np.asarray(theta, dtype=float)
        return cls(theta[:n_interaction], theta[n_interaction:])

    def check(self, spec: InteractionSpec, covariates: CovariateStack | None) -> None:
        if len(self.psi) != spec.n_interaction:
            raise ModelError(f"psi has length {len(self.psi)}, {spec.kind} needs {spec.n_interaction}")
        q = 1 + (len(covariates) if covariates is not None else 0)
        if len(self.beta) != q:
            raise ModelError(f"beta has length {len(self.beta)}, expected {q} (intercept + covariates)")


def _as_theta(theta, spec) -> np.ndarray:
    if isinstance(theta, ThetaVector):
        return theta.vector
    return np.asarray(theta, dtype=float)


def _data_tau(spec: InteractionSpec, pattern_pts: np.ndarray, index: BucketIndex) -> np.ndarray:
    n = len(pattern_pts)
    return index.count(pattern_pts, spec.range, np.arange(n, dtype=np.int64))


def interaction_stats(spec: InteractionSpec, queries, pattern: PointPattern,
                      exclude=None, index: BucketIndex | None = None,
                      tau: np.ndarray | None = None) -> np.ndarray:
    """Vectorized s(u, x) for many locations, shape (m, l).

    ``exclude[i]`` is the pattern index of query i when the query is itself a
    data point (evaluated against the pattern minus that point), else -1.
    """
    q = np.asarray(queries, dtype=float).reshape(-1, 2)
    if spec.kind == "poisson":
        return np.zeros((len(q), 0))
    if exclude is None:
        exclude = np.full(len(q), -1, dtype=np.int64)
    exclude = np.asarray(exclude, dtype=np.int64)
    if len(pattern) == 0:
        return np.zeros((len(q), 1))
    if index is None:
        index = BucketIndex(pattern.points, _cover(pattern.window, q), spec.range)
    if spec.kind == "strauss":
        return index.count(q, spec.range, exclude).astype(float)[:, None]
    if tau is None:
        tau = _data_tau(spec, pattern.points, index)
    pts = index.points
    out = _kernels.geyer_stats(
        q[:, 0].copy(), q[:, 1].copy(), exclude, pts[:, 0].copy(), pts[:, 1].copy(),
        tau, index.starts, index.order, *index.geometry, spec.range, float(spec.saturation),
    )
    return out[:, None]


def _cover(window: ObservationWindow, q: np.ndarray) -> ObservationWindow:
    if len(q) == 0:
        return window
    return ObservationWindow(
        min(window.xmin, q[:, 0].min()), max(window.xmax, q[:, 0].max()),
        min(window.ymin, q[:, 1].min()), max(window.ymax, q[:, 1].max()),
    )


def interaction_statistic(spec: InteractionSpec, u, pattern: PointPattern) -> np.ndarray:
    """s(u, x) for a location not in the pattern; empty for Poisson."""
    return interaction_stats(spec, np.asarray(u, float).reshape(1, 2), pattern)[0]


def sufficient_stats(spec: InteractionSpec, u, pattern: PointPattern,
                     covariates: CovariateStack | None) -> np.ndarray:
    """t(u, x) = (s(u, x), 1, z(u))."""
    u = np.asarray(u, float).reshape(1, 2)
    s = interaction_stats(spec, u, pattern)[0]
    z = covariates.values_at(u)[0] if covariates is not None else np.zeros(0)
    return np.concatenate([s, [1.0], z])


def papangelou(spec: InteractionSpec, theta, u, pattern: PointPattern,
               covariates: CovariateStack | None) -> float:
    """lambda_theta(u, x) = exp(theta^T t(u, x)); overflow gives +inf."""
    t = sufficient_stats(spec, u, pattern, covariates)
    with np.errstate(over="ignore"):
        return float(np.exp(t @ _as_theta(theta, spec)))


def _with_point(pattern: PointPattern, v) -> PointPattern:
    pts = np.vstack([pattern.points, np.asarray(v, float).reshape(1, 2)])
    return PointPattern(pts, _cover(pattern.window, pts), check=False)


def papangelou_pair(spec: InteractionSpec, theta, u, v, pattern: PointPattern,
                    covariates: CovariateStack | None) -> float:
    """Second-order intensity lambda(u, x + v) * lambda(v, x)."""
    return (papangelou(spec, theta, u, _with_point(pattern, v), covariates)
            * papangelou(spec, theta, v, pattern, covariates))


def stat_increment(spec: InteractionSpec, u, v, pattern: PointPattern,
                   covariates: CovariateStack | None) -> np.ndarray:
    """t(u, x + v) - t(u, x); the covariate block is identically zero."""
    q = 1 + (len(covariates) if covariates is not None else 0)
    out = np.zeros(spec.n_interaction + q)
    if spec.kind == "poisson":
        return out
    u = np.asarray(u, float)
    v = np.asarray(v, float)
    if np.hypot(*(u - v)) > spec.effective_range:
        return out
    s_plus = interaction_statistic(spec, u, _with_point(pattern, v))
    s = interaction_statistic(spec, u, pattern)
    out[: spec.n_interaction] = s_plus - s
    return out


def geyer_total(pattern_pts: np.ndarray, r: float, saturation: float) -> float:
    """Brute-force S(x) = sum_u min(sat, #R-neighbors of u); used as a test oracle."""
    pts = np.asarray(pattern_pts, float).reshape(-1, 2)
    if len(pts) == 0:
        return 0.0
    d = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1))
    tau = (d <= r).sum(1) - 1
    return float(np.minimum(saturation, tau).sum())
