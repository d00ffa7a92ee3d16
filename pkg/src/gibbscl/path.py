"""Regularization paths: lambda grids, IRLS with coordinate descent, warm starts."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels
from .objective import CompositeProblem, DegenerateWeightError, DivergenceError
from .penalties import PenaltyError, PenaltySpec, adaptive_weights, penalty_derivative, weighted_penalty

RIDGE_ANCHOR = 1e3
PILOT_RATIO = 1e-4
# coordinate descent runs tighter than the outer IRLS loop so that inner
# stalls do not masquerade as outer convergence
INNER_TOL_RATIO = 1e-2


@dataclass(frozen=True)
class PathConfig:
    n_lambda: int = 100
    lambda_min_ratio: float = 1e-4
    outer_max: int = 100
    inner_max: int = 1000
    tol: float = 1e-7

    def __post_init__(self):
        if self.n_lambda < 1:
            raise ValueError("n_lambda must be >= 1")
        if not 0.0 < self.lambda_min_ratio < 1.0:
            raise ValueError("lambda_min_ratio must lie in (0, 1)")


@dataclass
class PathEntry:
    """One fit on the path; ``df`` and the criteria are filled in by selection code."""

    lam: float
    theta: np.ndarray
    converged: bool
    objective: float = math.nan
    n_outer: int = 0
    kkt: float = math.nan
    df: float = math.nan
    cbic: float = math.nan
    ceric: float = math.nan
    message: str = ""

    @property
    def nonzero(self) -> int:
        return int(np.count_nonzero(self.theta))


@dataclass
class RegularizationPath:
    entries: list[PathEntry]
    names: tuple[str, ...]
    penalty: PenaltySpec | None = None
    n_points: int = 0
    area: float = math.nan
    extra: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([e.lam for e in self.entries])

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([e.theta for e in self.entries])

    def to_csv(self, path) -> None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["lambda", "converged", "df", "cbic", "ceric", *self.names])
            for e in self.entries:
                w.writerow([repr(e.lam), int(e.converged), repr(e.df), repr(e.cbic),
                            repr(e.ceric), *(repr(float(v)) for v in e.theta)])

    @classmethod
    def from_csv(cls, path) -> "RegularizationPath":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header[:5] != ["lambda", "converged", "df", "cbic", "ceric"]:
                raise ValueError(f"{path}: not a path file")
            entries = []
            for row in reader:
                vals = [float(v) for v in row]
                entries.append(PathEntry(vals[0], np.array(vals[5:]), bool(vals[1]),
                                         df=vals[2], cbic=vals[3], ceric=vals[4]))
        return cls(entries, tuple(header[5:]))


def penalty_arrays(penalty: PenaltySpec, p: int, penalized: np.ndarray):
    """Per-coordinate kernel arguments; unpenalized coordinates get c = 0."""
    w = np.ones(p) if penalty.weights is None else np.asarray(penalty.weights, float)
    if len(w) != p:
        raise PenaltyError(f"{len(w)} penalty weights for {p} coefficients")
    cs = np.where(penalized, w, 0.0)
    kinds = np.full(p, penalty.code, dtype=np.int64)
    lams = np.full(p, float(penalty.lam))
    shapes = np.full(p, float(penalty.shape))
    mixes = np.full(p, float(penalty.mix))
    return kinds, lams, shapes, mixes, cs


def _weights(penalty: PenaltySpec, p: int, penalized: np.ndarray) -> np.ndarray:
    return penalty_arrays(penalty, p, penalized)[4]


def objective_q(problem: CompositeProblem, penalty: PenaltySpec, penalized, theta) -> float:
    """Normalized penalized objective CL/|D| - sum_j c_j p_lam(|theta_j|)."""
    try:
        cl = problem.value(theta)
    except DivergenceError:
        return -math.inf
    spec = penalty.with_weights(_weights(penalty, problem.p, penalized))
    return cl / problem.area - weighted_penalty(spec, theta)


def fit_unpenalized(problem: CompositeProblem, free, theta0=None, tol: float = 1e-12,
                    max_iter: int = 200) -> np.ndarray:
    """Damped Newton over the ``free`` coordinates, the rest held fixed."""
    free = np.asarray(free, bool)
    theta = np.zeros(problem.p) if theta0 is None else np.array(theta0, float)
    if not free.any():
        return theta
    ev = problem.evaluate(theta)
    for _ in range(max_iter):
        g = ev.gradient[free]
        h = -ev.hessian[np.ix_(free, free)]
        try:
            step = np.linalg.solve(h, g)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(h, g, rcond=None)[0]
        t = 1.0
        while True:
            cand = theta.copy()
            cand[free] += t * step
            try:
                new = problem.evaluate(cand)
            except DivergenceError:
                new = None
            if new is not None and new.value >= ev.value - 1e-12 * abs(ev.value):
                break
            t *= 0.5
            if t < 1e-10:
                return theta
        theta, ev = cand, new
        if np.max(np.abs(t * step)) < tol:
            break
    return theta


def lambda_max(problem: CompositeProblem, penalty: PenaltySpec, penalized) -> tuple[float, np.ndarray]:
    """Smallest lambda at which every penalized coefficient is zero.

    Returns the value and the null fit (unpenalized coordinates optimized).
    Ridge never zeroes coefficients, so it returns ``1e3`` times the lasso value.
    """
    penalized = np.asarray(penalized, bool)
    w = _weights(penalty, problem.p, penalized)
    active = penalized & (w > 0)
    if not active.any():
        raise PenaltyError("no penalized coordinate has a positive weight")
    theta0 = fit_unpenalized(problem, ~penalized)
    g = problem.evaluate(theta0, hessian=False).gradient
    ratio = np.abs(g[active]) / (problem.area * w[active] * penalty.l1_fraction)
    lmax = float(ratio.max())
    if penalty.kind == "l2":
        lmax *= RIDGE_ANCHOR
    return lmax, theta0


def kkt_residual(problem: CompositeProblem, penalty: PenaltySpec, penalized, theta) -> float:
    """Largest violation of the stationarity conditions of the normalized problem."""
    g = problem.evaluate(theta, hessian=False).gradient / problem.area
    w = _weights(penalty, problem.p, np.asarray(penalized, bool))
    worst = 0.0
    for gj, th, c in zip(g, theta, w):
        if c == 0.0:
            r = abs(gj)
        elif penalty.kind == "elastic_net":
            if th != 0.0:
                r = abs(gj - penalty.lam * (c * penalty.mix * np.sign(th) + (1 - penalty.mix) * th))
            else:
                r = max(0.0, abs(gj) - c * penalty.lam * penalty.mix)
        elif th != 0.0:
            r = abs(gj - c * penalty_derivative(penalty, abs(th)) * np.sign(th))
        else:
            slope = penalty.lam if penalty.kind != "l2" else 0.0
            r = max(0.0, abs(gj) - c * slope)
        worst = max(worst, r)
    return float(worst)


def fit_single_lambda(problem: CompositeProblem, penalty: PenaltySpec, penalized,
                      theta_init=None, config: PathConfig = PathConfig()) -> PathEntry:
    """IRLS outer loop with coordinate descent on the normalized surrogate.

    Each outer step is backtracked so the penalized objective never decreases.
    Divergence and non-convergence are reported on the entry, not raised.
    """
    penalized = np.asarray(penalized, bool)
    p = problem.p
    theta = np.zeros(p) if theta_init is None else np.array(theta_init, float)
    kinds, lams, shapes, mixes, cs = penalty_arrays(penalty, p, penalized)
    scale = 1.0 / problem.area
    q_old = objective_q(problem, penalty, penalized, theta)
    if not math.isfinite(q_old):
        theta = np.zeros(p)
        q_old = objective_q(problem, penalty, penalized, theta)
    converged = False
    message = ""
    it = 0
    for it in range(1, config.outer_max + 1):
        try:
            w, ystar = problem.surrogate(theta)
        except (DivergenceError, DegenerateWeightError) as exc:
            message = f"lambda={penalty.lam:.6g}: {exc}"
            break
        new, _, _ = _kernels.cd_weighted_ls(
            problem.design, w, ystar, theta.copy(), kinds, lams, shapes, mixes, cs,
            scale, INNER_TOL_RATIO * config.tol, config.inner_max,
        )
        step = new - theta
        t = 1.0
        while True:
            cand = theta + t * step
            q_new = objective_q(problem, penalty, penalized, cand)
            if q_new >= q_old - 1e-13 * max(1.0, abs(q_old)):
                break
            t *= 0.5
            if t < 1e-8:
                cand, q_new = theta, q_old
                break
        change = float(np.max(np.abs(cand - theta))) if p else 0.0
        theta, q_old = cand, q_new
        if change < config.tol:
            converged = True
            break
    if not converged and not message:
        message = f"lambda={penalty.lam:.6g}: no convergence in {config.outer_max} outer steps"
    try:
        obj = problem.value(theta)
        kkt = kkt_residual(problem, penalty, penalized, theta)
    except DivergenceError as exc:
        obj, kkt, converged = -math.inf, math.inf, False
        message = f"lambda={penalty.lam:.6g}: {exc}"
    return PathEntry(float(penalty.lam), theta, converged, obj, it, kkt, message=message)


def lambda_grid(lmax: float, config: PathConfig) -> np.ndarray:
    if config.n_lambda == 1:
        return np.array([lmax])
    return np.exp(np.linspace(math.log(lmax), math.log(lmax * config.lambda_min_ratio), config.n_lambda))


def adaptive_penalty(problem: CompositeProblem, penalty: PenaltySpec, penalized,
                     config: PathConfig = PathConfig()) -> PenaltySpec:
    """Attach weights 1/|pilot| from a light ridge fit at 1e-4 of the ridge lambda_max."""
    penalized = np.asarray(penalized, bool)
    ridge = PenaltySpec("l2", weights=penalized.astype(float))
    lmax, theta0 = lambda_max(problem, ridge, penalized)
    pilot = fit_single_lambda(problem, ridge.at(PILOT_RATIO * lmax), penalized, theta0, config)
    return penalty.with_weights(adaptive_weights(pilot.theta, penalized))


def fit_path(problem: CompositeProblem, penalty: PenaltySpec, penalized,
             config: PathConfig = PathConfig(), names=None, lambdas=None) -> RegularizationPath:
    """Warm-started fits over a decreasing log-spaced lambda grid."""
    penalized = np.asarray(penalized, bool)
    if penalty.weights is None:
        penalty = penalty.with_weights(penalized.astype(float))
    lmax, theta = lambda_max(problem, penalty, penalized)
    grid = lambda_grid(lmax, config) if lambdas is None else np.sort(np.asarray(lambdas, float))[::-1]
    entries = []
    for k, lam in enumerate(grid):
        if k == 0 and lambdas is None and penalty.kind != "l2":
            # the null fit is exact at lambda_max
            obj = problem.value(theta)
            kkt = kkt_residual(problem, penalty.at(lam), penalized, theta)
            entries.append(PathEntry(float(lam), theta.copy(), True, obj, 0, kkt))
            continue
        entry = fit_single_lambda(problem, penalty.at(lam), penalized, theta, config)
        entries.append(entry)
        if np.all(np.isfinite(entry.theta)) and math.isfinite(entry.objective):
            theta = entry.theta
    n_points = problem.scheme.n_data
    return RegularizationPath(entries, tuple(names) if names else tuple(f"theta{j}" for j in range(problem.p)),
                              penalty, n_points, problem.area)


__all__ = [
    "PathConfig", "PathEntry", "RegularizationPath", "lambda_max", "fit_single_lambda",
    "fit_path", "fit_unpenalized", "adaptive_penalty", "lambda_grid", "kkt_residual",
    "objective_q",
]
