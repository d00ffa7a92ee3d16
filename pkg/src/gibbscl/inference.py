"""Sensitivity and score-variance matrices, bootstrap covariance, df and criteria."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from . import _kernels
from .model import InteractionSpec, _data_tau
from .objective import CompositeProblem, DivergenceError
from .pattern import BucketIndex, ObservationWindow, PointPattern
from .path import PathEntry, RegularizationPath, fit_unpenalized
from .quadrature import pattern_index

PAIR_BUDGET = 50_000_000
JITTER = 1e-8


class PairBudgetError(RuntimeError):
    """Raised when the range-limited pair enumeration exceeds its budget."""


class CriterionError(ValueError):
    """Raised for undefined criterion values or empty selections."""


@dataclass(frozen=True)
class FitCovariance:
    H: np.ndarray
    V: np.ndarray
    Sigma: np.ndarray
    method: str = "analytic"


def sensitivity_matrix(theta, problem: CompositeProblem, cols=None) -> np.ndarray:
    """H = minus the objective Hessian at ``theta``, on the coordinates ``cols``."""
    cols = np.arange(problem.p) if cols is None else np.asarray(cols)
    t = problem.design[:, cols]
    eta = problem.linear_predictor(theta)
    if problem.kind == "pseudo":
        w = problem.scheme.weights * np.exp(eta)
    else:
        mu = 0.5 * (1.0 + np.tanh(0.5 * (eta - np.log(problem.scheme.delta))))
        w = mu * (1.0 - mu)
    return (t.T * w) @ t


@dataclass(frozen=True)
class PairStructure:
    """Node pairs within the effective range with their statistic second differences.

    Pseudo-likelihood uses every quadrature point as a node with weight nu and
    keeps the diagonal; the logistic objective uses the dummy points with
    weight ``1/delta`` and drops the diagonal.
    """

    nodes: np.ndarray
    node_weights: np.ndarray
    rows: np.ndarray
    cols: np.ndarray
    deltas: np.ndarray
    n_interaction: int
    kind: str

    @property
    def n_pairs(self) -> int:
        return len(self.rows)


def pair_structure(spec: InteractionSpec, problem: CompositeProblem, pattern: PointPattern,
                   budget: int = PAIR_BUDGET) -> PairStructure:
    """Enumerate the pair list once per pattern; reuse it along a path."""
    scheme = problem.scheme
    logistic = problem.kind == "logistic"
    nodes = np.flatnonzero(~scheme.is_data) if logistic else np.arange(len(scheme))
    weights = (1.0 / scheme.delta[nodes]) if logistic else scheme.weights[nodes]
    empty = np.empty(0, np.int64)
    if spec.kind == "poisson" or len(nodes) == 0:
        return PairStructure(nodes, weights, empty, empty, np.empty(0), spec.n_interaction, problem.kind)
    q = scheme.points[nodes]
    qdata = np.full(len(nodes), -1, np.int64) if logistic else scheme.data_index[nodes].copy()
    reach = spec.effective_range
    qidx = BucketIndex(q, _bbox(q), reach)
    if len(pattern):
        pidx = pattern_index(spec, pattern, q)
        tau = _data_tau(spec, pattern.points, pidx)
        px, py = pidx.points[:, 0].copy(), pidx.points[:, 1].copy()
        starts, order, geom = pidx.starts, pidx.order, pidx.geometry
    else:
        tau = np.zeros(0, np.int64)
        px = py = np.zeros(0)
        starts, order = np.zeros(2, np.int64), empty
        geom = (q[:, 0].min(), q[:, 1].min(), spec.range, 1, 1)
    rows, cols, deltas, total = _kernels.pair_deltas(
        spec.code, q[:, 0].copy(), q[:, 1].copy(), qdata, qidx.starts, qidx.order, *qidx.geometry,
        px, py, tau, starts, order, *geom, float(spec.range), float(spec.saturation),
        float(reach), not logistic, int(budget),
    )
    if total > budget:
        raise PairBudgetError(
            f"{total} node pairs exceed the budget of {budget}; use bootstrap_covariance instead"
        )
    return PairStructure(nodes, weights, rows, cols, deltas, spec.n_interaction, problem.kind)


def _bbox(q: np.ndarray) -> ObservationWindow:
    x0, y0 = q.min(0)
    x1, y1 = q.max(0)
    return ObservationWindow(x0, max(x1, x0 + 1e-9), y0, max(y1, y0 + 1e-9))


def _base_matrix(theta, problem: CompositeProblem, cols: np.ndarray) -> np.ndarray:
    if problem.kind == "pseudo":
        # same arithmetic as H so that a Poisson V equals H bit for bit
        return sensitivity_matrix(theta, problem, cols)
    t = problem.design[:, cols]
    lam = problem.intensity(theta)
    s = problem.scheme
    w = np.where(s.is_data, 0.0, lam / (lam + s.delta))
    return (t.T * w) @ t


def score_variance(theta, problem: CompositeProblem, pairs: PairStructure,
                   cols=None) -> np.ndarray:
    """V = A + B on the coordinates ``cols`` (default all).

    A is the single-point term (equal to H for the pseudo-likelihood); B is the
    double quadrature sum over ``pairs``. For a Poisson model B is exactly zero.
    """
    theta = np.asarray(theta, float)
    cols = np.arange(problem.p) if cols is None else np.asarray(cols)
    a_mat = _base_matrix(theta, problem, cols)
    if pairs.n_pairs == 0:
        return a_mat
    psi = theta[: pairs.n_interaction]
    s_pos = np.flatnonzero(cols == 0)
    t = problem.design[pairs.nodes][:, cols]
    lam = problem.intensity(theta)[pairs.nodes]
    om = pairs.node_weights
    r, c, d = pairs.rows, pairs.cols, pairs.deltas
    e = np.exp(np.minimum(psi[0] * d, 700.0))
    lr, lc = lam[r], lam[c]
    lam2 = lr * lc * e
    base = om[r] * om[c]
    if problem.kind == "pseudo":
        wmat = base * (lr * lc - lam2)
        vec_w = None
        scalar = float(np.sum(base * lam2 * d * d))
    else:
        delta = problem.scheme.delta[pairs.nodes]
        dr, dc = delta[r], delta[c]
        phr, phc = dr / (dr + lr), dc / (dc + lc)
        phr_p, phc_p = dr / (dr + lr * e), dc / (dc + lc * e)
        a_rc, a_cr = phr_p - phr, phc_p - phc
        b_rc, b_cr = phr_p * d, phc_p * d
        wmat = base * ((lr * lc - lam2) * phr * phc + lam2 * a_rc * a_cr)
        vec_w = base * lam2 * a_rc * b_cr
        scalar = float(np.sum(base * lam2 * b_rc * b_cr))
    m = len(pairs.nodes)
    w_sp = sparse.csr_matrix((wmat, (r, c)), shape=(m, m))
    b_mat = t.T @ (w_sp @ t)
    if len(s_pos):
        k = s_pos[0]
        if vec_w is not None:
            g1 = t.T @ np.bincount(r, weights=vec_w, minlength=m)
            b_mat[:, k] += g1
            b_mat[k, :] += g1
        b_mat[k, k] += scalar
    b_mat = 0.5 * (b_mat + b_mat.T)
    return a_mat + b_mat


def _solve_sym(h: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    a = h.shape[0]
    try:
        if np.linalg.cond(h) < 1e12:
            return np.linalg.solve(h, rhs)
    except np.linalg.LinAlgError:
        pass
    jitter = JITTER * np.trace(h) / a
    return np.linalg.solve(h + jitter * np.eye(a), rhs)


def sandwich(H: np.ndarray, V: np.ndarray) -> np.ndarray:
    """Sigma = H^-1 V H^-1 (with jitter when H is singular)."""
    hv = _solve_sym(H, V)
    return _solve_sym(H, hv.T).T


def effective_df(theta, H: np.ndarray, Sigma: np.ndarray | None = None,
                 V: np.ndarray | None = None) -> float:
    """trace(H_a Sigma_a) on the block ``a`` of nonzero coefficients.

    Pass either the full-size ``Sigma`` or ``V`` (then ``Sigma_a`` is the
    sandwich of the restricted blocks). When ``V_a`` equals ``H_a`` the trace
    is the block size.
    """
    theta = theta.theta if isinstance(theta, PathEntry) else np.asarray(theta, float)
    act = np.flatnonzero(theta != 0.0)
    if len(act) == 0:
        return 0.0
    h = H[np.ix_(act, act)] if H.shape[0] == len(theta) else H
    if Sigma is not None:
        s = Sigma[np.ix_(act, act)] if Sigma.shape[0] == len(theta) else Sigma
        return float(np.trace(h @ s))
    if V is None:
        raise ValueError("effective_df needs Sigma or V")
    v = V[np.ix_(act, act)] if V.shape[0] == len(theta) else V
    if np.array_equal(v, h):
        return float(len(act))
    return float(np.trace(_solve_sym(h, v)))


def criterion_value(kind: str, cl: float, df: float, n_points: int,
                    area: float | None = None, lam: float | None = None) -> float:
    """cBIC = -2 CL + log(n) d; cERIC = -2 CL + log(n / (|D| lam)) d."""
    if n_points < 1:
        raise CriterionError("criteria need at least one observed point")
    if kind == "cbic":
        return -2.0 * cl + math.log(n_points) * df
    if kind == "ceric":
        if lam is None or not lam > 0 or area is None:
            raise CriterionError("cERIC is undefined at lambda = 0")
        return -2.0 * cl + math.log(n_points / (area * lam)) * df
    raise CriterionError(f"unknown criterion {kind!r}")


def annotate_path(path: RegularizationPath, problem: CompositeProblem,
                  pairs: PairStructure | None = None, sigma: np.ndarray | None = None) -> RegularizationPath:
    """Fill df, cBIC and cERIC for every finite entry.

    Uses the analytic sandwich from ``pairs`` unless a fixed ``sigma`` is given.
    """
    n = problem.scheme.n_data
    for e in path.entries:
        if not (np.all(np.isfinite(e.theta)) and math.isfinite(e.objective)):
            continue
        act = np.flatnonzero(e.theta != 0.0)
        try:
            if len(act) == 0:
                df = 0.0
            elif sigma is not None:
                h = sensitivity_matrix(e.theta, problem)
                df = effective_df(e.theta, h, Sigma=sigma)
            else:
                h = sensitivity_matrix(e.theta, problem, act)
                v = score_variance(e.theta, problem, pairs, act) if pairs is not None else h
                df = effective_df(e.theta, h, V=v)
        except DivergenceError:
            continue
        e.df = df
        if n >= 1:
            e.cbic = criterion_value("cbic", e.objective, df, n)
            e.ceric = (criterion_value("ceric", e.objective, df, n, problem.area, e.lam)
                       if e.lam > 0 else math.nan)
    return path


def select_model(path: RegularizationPath, kind: str) -> PathEntry:
    """Converged entry minimizing the criterion; ties go to the larger lambda."""
    best = None
    for e in sorted(path.entries, key=lambda e: -e.lam):
        val = getattr(e, kind)
        if not e.converged or not math.isfinite(val):
            continue
        if best is None or val < getattr(best, kind):
            best = e
    if best is None:
        raise CriterionError("no converged entry with a finite criterion")
    return best


def bootstrap_covariance(spec: InteractionSpec, theta, window: ObservationWindow,
                         covariates, make_problem, support=None, m: int = 100,
                         seed: int = 0, mh=None) -> np.ndarray:
    """Empirical covariance (ddof 1) of unpenalized refits on patterns simulated at ``theta``.

    ``make_problem(pattern)`` builds the objective for one simulated pattern;
    coefficients outside ``support`` stay at zero. Replicates whose refit
    diverges are dropped; more than 10% dropped is an error.
    """
    from .sampler import MhConfig, simulate_pattern

    if m < 2:
        raise ValueError("bootstrap needs m >= 2")
    theta = np.asarray(theta, float)
    support = theta != 0.0 if support is None else np.asarray(support, bool)
    mh = mh or MhConfig()
    fits = []
    dropped = 0
    for k in range(m):
        pat = simulate_pattern(spec, theta, window, covariates,
                               MhConfig(mh.n_steps, mh.p_birth, seed + k))
        try:
            prob = make_problem(pat)
            start = np.where(support, theta, 0.0)
            est = fit_unpenalized(prob, support, start)
            prob.value(est)
        except (DivergenceError, np.linalg.LinAlgError, ValueError):
            dropped += 1
            continue
        fits.append(est)
    if dropped > 0.1 * m:
        raise RuntimeError(f"{dropped} of {m} bootstrap refits failed")
    return np.cov(np.array(fits), rowvar=False, ddof=1)
