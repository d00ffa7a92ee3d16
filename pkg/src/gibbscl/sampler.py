"""Birth/death Metropolis-Hastings simulation and GNZ residual diagnostics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .covariates import CovariateGrid, CovariateStack, constant_grid
from .model import InteractionSpec, ModelError, ThetaVector
from .pattern import ObservationWindow, PointPattern


@dataclass(frozen=True)
class MhConfig:
    """Chain settings.

    ``n_steps=None`` picks ``100_000 + 200 * expected Poisson count``;
    ``n_steps`` always includes burn-in.
    """

    n_steps: int | None = None
    p_birth: float = 0.5
    seed: int = 0
    burn_in_included: bool = True

    def __post_init__(self):
        if self.n_steps is not None and self.n_steps < 1:
            raise ModelError("n_steps must be >= 1")
        if not 0.0 < self.p_birth < 1.0:
            raise ModelError("p_birth must lie in (0, 1)")


def _trend_grid(theta: ThetaVector, window: ObservationWindow,
                covariates: CovariateStack | None) -> CovariateGrid:
    if covariates is None or len(covariates) == 0:
        return constant_grid(window, theta.beta[0], "trend")
    ext = covariates.extent
    tol = 1e-9 * max(window.width, window.height)
    if (ext.xmin > window.xmin + tol or ext.xmax < window.xmax - tol
            or ext.ymin > window.ymin + tol or ext.ymax < window.ymax - tol):
        raise ModelError(f"covariates {ext.bounds} do not cover window {window.bounds}")
    return covariates.linear_image(theta.beta[1:], theta.beta[0])


def expected_poisson_count(theta: ThetaVector, window: ObservationWindow,
                           covariates: CovariateStack | None) -> float:
    """Integral of exp(beta^T z) over ``window`` (the Poisson part of the model)."""
    grid = _trend_grid(theta, window, covariates)
    # exact integral of the piecewise-constant image: pixel values times overlap areas
    xe = grid.x0 + np.arange(grid.ncols + 1) * grid.cellsize
    ye = grid.y0 + np.arange(grid.nrows + 1) * grid.cellsize
    ox = np.clip(np.minimum(xe[1:], window.xmax) - np.maximum(xe[:-1], window.xmin), 0.0, None)
    oy = np.clip(np.minimum(ye[1:], window.ymax) - np.maximum(ye[:-1], window.ymin), 0.0, None)
    vals = np.exp(np.minimum(grid.values, 700.0))
    return float(oy @ vals @ ox)


def simulate_pattern(spec: InteractionSpec, theta, window: ObservationWindow,
                     covariates: CovariateStack | None = None,
                     config: MhConfig = MhConfig()) -> PointPattern:
    """Simulate a Gibbs pattern on ``window`` with a free boundary, starting empty.

    Strauss models with ``gamma > 1`` are rejected since their density is not
    integrable.
    """
    if not isinstance(theta, ThetaVector):
        theta = ThetaVector.from_vector(theta, spec.n_interaction)
    theta.check(spec, covariates)
    if spec.kind == "strauss" and theta.psi[0] > 0:
        raise ModelError("Strauss interaction requires gamma <= 1")
    trend = _trend_grid(theta, window, covariates)
    n_steps = config.n_steps
    if n_steps is None:
        mu = expected_poisson_count(theta, window, covariates)
        n_steps = int(100_000 + 200 * min(mu, 1e6))
    rng = np.random.default_rng(config.seed)
    uniforms = rng.random((n_steps, 4))
    psi = float(theta.psi[0]) if spec.n_interaction else 0.0
    xs, ys = _kernels.mh_chain(
        spec.code, psi, float(spec.range), float(spec.saturation),
        np.ascontiguousarray(trend.values), trend.x0, trend.y0, trend.cellsize,
        window.xmin, window.xmax, window.ymin, window.ymax,
        float(config.p_birth), uniforms,
    )
    return PointPattern(np.column_stack([xs, ys]), window, check=False)


@dataclass(frozen=True)
class GnzResidual:
    """Monte Carlo mean and standard error of GNZ residuals, one entry per test coordinate."""

    mean: np.ndarray
    se: np.ndarray
    values: np.ndarray


def gnz_residual(spec: InteractionSpec, theta, patterns, domain: ObservationWindow,
                 covariates: CovariateStack | None, h=None, nd: int = 64) -> GnzResidual:
    """Residual sum_{u in x cap D} h(u, x minus u) - integral_D h(u, x) lambda(u, x) du.

    ``h`` receives the design rows ``t(u, .)`` (shape (m, p)) and returns an
    (m, k) array; the default ``h = t`` gives the pseudo-likelihood score.
    The integral uses a Berman-Turner scheme with an ``nd`` x ``nd`` grid.
    """
    from .objective import CompositeProblem
    from .quadrature import berman_turner_scheme, build_design

    patterns = list(patterns)
    if len(patterns) < 2:
        raise ValueError("need at least two patterns")
    theta_vec = theta.vector if isinstance(theta, ThetaVector) else np.asarray(theta, float)
    rows = []
    for pat in patterns:
        scheme = berman_turner_scheme(pat, domain, nd)
        design = build_design(spec, scheme, pat, covariates)
        prob = CompositeProblem(design.matrix, scheme)
        lam = np.exp(prob.linear_predictor(theta_vec))
        hv = design.matrix if h is None else np.asarray(h(design.matrix), float).reshape(len(lam), -1)
        data = scheme.is_data
        rows.append(hv[data].sum(0) - (scheme.weights * lam) @ hv)
    vals = np.array(rows)
    return GnzResidual(vals.mean(0), vals.std(0, ddof=1) / np.sqrt(len(vals)), vals)
