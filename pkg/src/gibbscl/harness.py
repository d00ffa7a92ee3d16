"""Simulation scenarios: covariates, calibration, replicate loop and metrics."""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .covariates import (
    CovariateGrid, CovariateStack, product_covariates, read_grid, standardize,
    synthesize_correlated_noise,
)
from .inference import (
    annotate_path, bootstrap_covariance, pair_structure, select_model,
)
from .model import InteractionSpec, ThetaVector
from .objective import CompositeProblem
from .path import PathConfig, adaptive_penalty, fit_path, fit_single_lambda
from .pattern import ObservationWindow, erode_window
from .penalties import PenaltySpec
from .quadrature import berman_turner_scheme, build_design, default_nd, logistic_scheme
from .sampler import MhConfig, expected_poisson_count, simulate_pattern

WINDOWS = {
    "W1": (0.0, 250.0, 0.0, 125.0),
    "W2": (0.0, 500.0, 0.0, 250.0),
    "W3": (0.0, 1000.0, 0.0, 500.0),
}
N_SOIL = 13


class ScenarioError(RuntimeError):
    """Raised when too many replicates fail."""


@dataclass(frozen=True)
class ScenarioConfig:
    """One simulation study cell.

    ``window`` is a name from ``WINDOWS`` or explicit bounds. ``n_covariates``
    counts covariates excluding the intercept; ``None`` means 2 for scenario 0
    and ``floor(3 |W|^(1/4))`` otherwise. ``nd`` fixes the dummy budget (grid
    side for ``ppl``; ``nd**2`` expected dummies for ``plcl``); otherwise
    ``nd**2`` is about ``nd_factor * n``, with ``nd_factor`` defaulting to 256
    for Strauss and 4 for Geyer.
    """

    scenario: int = 0
    window: str | tuple = "W1"
    interaction: str = "strauss"
    range: float = 9.25
    saturation: float = 1.0
    gamma: float = 0.5
    beta: tuple = (2.0, 0.75)
    target_count: float = 500.0
    n_covariates: int | None = None
    replications: int = 100
    estimator: str = "ppl"
    nd: int | None = None
    nd_factor: float | None = None
    penalty: str = "l1"
    adaptive: bool = False
    lambda_mix: float = 0.5
    scad_gamma: float = 3.7
    mcp_gamma: float = 3.0
    criterion: str = "ceric"
    variance: str = "analytic"
    bootstrap_m: int = 100
    n_lambda: int = 100
    lambda_min_ratio: float = 1e-4
    mh_steps: int | None = None
    seed: int = 1
    covariate_seed: int = 2024
    grids_dir: str | None = None
    write_paths: bool = False

    def __post_init__(self):
        if self.scenario not in (0, 1, 2):
            raise ValueError("scenario must be 0, 1 or 2")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.estimator not in ("ppl", "plcl"):
            raise ValueError("estimator must be 'ppl' or 'plcl'")
        if self.criterion not in ("cbic", "ceric"):
            raise ValueError("criterion must be 'cbic' or 'ceric'")
        if self.variance not in ("analytic", "bootstrap"):
            raise ValueError("variance must be 'analytic' or 'bootstrap'")

    @property
    def observation_window(self) -> ObservationWindow:
        b = WINDOWS[self.window] if isinstance(self.window, str) else tuple(self.window)
        return ObservationWindow(*map(float, b))

    @property
    def model(self) -> InteractionSpec:
        if self.interaction == "poisson":
            return InteractionSpec.poisson()
        if self.interaction == "strauss":
            return InteractionSpec.strauss(self.range)
        return InteractionSpec.geyer(self.range, self.saturation)

    @property
    def covariate_count(self) -> int:
        if self.n_covariates is not None:
            return int(self.n_covariates)
        if self.scenario == 0:
            return len(self.beta)
        return int(math.floor(3.0 * self.observation_window.area ** 0.25))

    @property
    def dummy_factor(self) -> float:
        if self.nd_factor is not None:
            return float(self.nd_factor)
        return 4.0 if self.interaction == "geyer" else 256.0


@dataclass
class MetricsReport:
    """Prediction and selection summaries over the covariate coefficients."""

    bias: float
    sd: float
    rmse: float
    tpr: float
    fpr: float
    estimates: np.ndarray = field(repr=False)

    def as_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if k != "estimates"}


def compute_metrics(estimates, truth, true_support=None, noise_support=None) -> MetricsReport:
    """Bias, SD, RMSE over coefficients plus TPR/FPR (percent) averaged over replicates.

    Selected means nonzero. ``true_support`` defaults to the nonzero truth and
    ``noise_support`` to the rest.
    """
    est = np.atleast_2d(np.asarray(estimates, float))
    truth = np.asarray(truth, float)
    m = est.shape[0]
    if m < 2:
        raise ValueError("at least two replicates are needed for SD")
    mean = est.mean(0)
    bias = float(np.sqrt(np.sum((mean - truth) ** 2)))
    sd = float(np.sqrt(np.sum(est.var(0, ddof=1))))
    rmse = float(np.sqrt(np.sum(np.mean((est - truth) ** 2, axis=0))))
    idx = np.arange(len(truth))
    true_support = idx[truth != 0] if true_support is None else np.asarray(true_support, int)
    if noise_support is None:
        noise_support = np.setdiff1d(idx, true_support)
    noise_support = np.asarray(noise_support, int)
    sel = est != 0.0
    tpr = float(100.0 * sel[:, true_support].mean()) if len(true_support) else math.nan
    fpr = float(100.0 * sel[:, noise_support].mean()) if len(noise_support) else math.nan
    return MetricsReport(bias, sd, rmse, tpr, fpr, est)


# ---------------------------------------------------------------------------
# covariates


def bundled_true_covariates(grids_dir=None) -> list[CovariateGrid]:
    """Standardized elevation and slope grids (bundled unless ``grids_dir`` is given)."""
    names = ("elevation.asc", "slope.asc")
    if grids_dir is not None:
        return [standardize(read_grid(Path(grids_dir) / n)) for n in names]
    base = resources.files("gibbscl") / "data"
    out = []
    for n in names:
        with resources.as_file(base / n) as p:
            out.append(standardize(read_grid(p)))
    return out


def soil_grids(template: CovariateGrid, seed: int, n: int = N_SOIL) -> list[CovariateGrid]:
    """Synthetic coarse 50 x 25 nutrient maps sharing a latent factor, on ``template`` pixels."""
    from scipy.ndimage import gaussian_filter

    rng = np.random.default_rng(seed)
    shared = gaussian_filter(rng.standard_normal((25, 50)), 2.0, mode="reflect")
    rows = np.minimum((np.arange(template.nrows) * 25) // template.nrows, 24)
    cols = np.minimum((np.arange(template.ncols) * 50) // template.ncols, 49)
    out = []
    for k in range(n):
        own = gaussian_filter(rng.standard_normal((25, 50)), 1.5, mode="reflect")
        load = rng.uniform(-1.0, 1.0)
        coarse = load * shared / shared.std() + own / own.std()
        fine = coarse[np.ix_(rows, cols)]
        g = CovariateGrid(fine, template.x0, template.y0, template.cellsize, f"soil{k + 1}")
        out.append(standardize(g))
    return out


def scenario_covariates(config: ScenarioConfig) -> CovariateStack:
    """Covariate stack for the scenario, stretched over the observation window."""
    true = bundled_true_covariates(config.grids_dir)
    p = config.covariate_count
    if config.scenario == 0 or p <= len(true):
        stack = CovariateStack(tuple(true[:p]))
    elif config.scenario == 1:
        stack = synthesize_correlated_noise(p, true, config.covariate_seed)
    else:
        extra = p - len(true)
        soil = soil_grids(true[0], config.covariate_seed, min(N_SOIL, extra))
        prods = product_covariates(soil, extra - len(soil)) if extra > len(soil) else []
        stack = CovariateStack(tuple(true + soil + prods))
    return stack.rescaled(config.observation_window)


def calibrate_intercept(beta, covariates: CovariateStack, window: ObservationWindow,
                        target: float) -> float:
    """beta0 with exp(beta0) * integral_W exp(beta^T z) du = target."""
    coefs = np.zeros(len(covariates))
    coefs[: len(beta)] = beta
    theta = ThetaVector(np.zeros(0), np.concatenate([[0.0], coefs]))
    mass = expected_poisson_count(theta, window, covariates)
    return float(math.log(target / mass))


def true_theta(config: ScenarioConfig, covariates: CovariateStack) -> ThetaVector:
    window = config.observation_window
    beta = np.zeros(len(covariates))
    beta[: len(config.beta)] = config.beta
    b0 = calibrate_intercept(config.beta, covariates, window, config.target_count)
    spec = config.model
    psi = np.full(spec.n_interaction, math.log(config.gamma))
    return ThetaVector(psi, np.concatenate([[b0], beta]))


# ---------------------------------------------------------------------------
# one replicate


def make_problem(config: ScenarioConfig, pattern, covariates: CovariateStack, seed: int):
    """Quadrature, design and objective for one pattern under the config's estimator."""
    spec = config.model
    domain = erode_window(config.observation_window, spec.effective_range)
    n = int(domain.contains(pattern.points).sum())
    if config.estimator == "ppl":
        nd = config.nd if config.nd is not None else default_nd(n, config.dummy_factor)
        scheme = berman_turner_scheme(pattern, domain, nd)
    else:
        n_dummy = config.nd ** 2 if config.nd is not None else config.dummy_factor * max(n, 1)
        scheme = logistic_scheme(pattern, domain, n_dummy / domain.area, seed=seed)
    design = build_design(spec, scheme, pattern, covariates)
    return CompositeProblem(design.matrix, scheme), design


def penalty_for(config: ScenarioConfig) -> PenaltySpec:
    return PenaltySpec(config.penalty, 0.0, config.lambda_mix, config.scad_gamma, config.mcp_gamma)


def run_replicate(config: ScenarioConfig, covariates: CovariateStack, theta: ThetaVector,
                  index: int) -> dict:
    """Simulate, fit and select for replicate ``index``; returns a flat record."""
    seed = config.seed + index
    spec = config.model
    window = config.observation_window
    pattern = simulate_pattern(spec, theta, window, covariates, MhConfig(config.mh_steps, 0.5, seed))
    problem, design = make_problem(config, pattern, covariates, seed)
    penalized = design.penalizable
    rec = {"rep": index, "seed": seed, "n_window": len(pattern), "n_domain": problem.scheme.n_data}
    cfg = PathConfig(config.n_lambda, config.lambda_min_ratio)
    if config.scenario == 0:
        entry = fit_single_lambda(problem, penalty_for(config), np.zeros(design.p, bool), None, cfg)
        rec.update(lam=0.0, df=math.nan, criterion=math.nan)
        path = None
    else:
        pen = penalty_for(config)
        if config.adaptive:
            pen = adaptive_penalty(problem, pen, penalized, cfg)
        path = fit_path(problem, pen, penalized, cfg, design.names)
        if config.variance == "bootstrap":
            full = fit_single_lambda(problem, pen.at(0.0), penalized, path.entries[-1].theta, cfg)
            sigma = bootstrap_covariance(
                spec, full.theta, window, covariates,
                lambda pat: make_problem(config, pat, covariates, seed)[0],
                m=config.bootstrap_m, seed=10_000 * (seed + 1), mh=MhConfig(config.mh_steps),
            )
            annotate_path(path, problem, sigma=sigma)
        else:
            annotate_path(path, problem, pair_structure(spec, problem, pattern))
        entry = select_model(path, config.criterion)
        rec.update(lam=entry.lam, df=entry.df, criterion=getattr(entry, config.criterion))
    rec["converged"] = bool(entry.converged)
    for name, v in zip(design.names, entry.theta):
        rec[name] = float(v)
    rec["_path"] = path
    return rec


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    report: MetricsReport
    records: list
    failures: list
    theta: ThetaVector
    names: tuple
    summary: dict = field(default_factory=dict)


def run_scenario(config: ScenarioConfig, out_dir=None, progress=None) -> ScenarioResult:
    """Run every replicate, aggregate metrics over covariate coefficients, write CSVs."""
    covariates = scenario_covariates(config)
    theta = true_theta(config, covariates)
    spec = config.model
    names = tuple((["psi"] if spec.n_interaction else []) + ["intercept"] + covariates.names)
    records, failures = [], []
    for k in range(config.replications):
        try:
            rec = run_replicate(config, covariates, theta, k)
        except Exception as exc:  # a failed replicate is recorded, not fatal
            failures.append({"rep": k, "seed": config.seed + k, "error": f"{type(exc).__name__}: {exc}"})
        else:
            records.append(rec)
        if progress is not None:
            progress(k + 1, config.replications)
    if len(failures) > 0.1 * config.replications:
        raise ScenarioError(f"{len(failures)} of {config.replications} replicates failed: {failures[:3]}")
    cov_names = covariates.names
    est = np.array([[r[n] for n in cov_names] for r in records])
    truth = theta.beta[1:]
    report = compute_metrics(est, truth, np.arange(len(config.beta)),
                             np.arange(len(config.beta), len(truth)))
    summary = report.as_dict()
    summary.update(
        replications=config.replications,
        failed=len(failures),
        mean_n=float(np.mean([r["n_window"] for r in records])),
        intercept=float(theta.beta[0]),
    )
    if spec.n_interaction:
        psis = np.array([r["psi"] for r in records])
        summary.update(psi_true=float(theta.psi[0]), psi_mean=float(psis.mean()),
                       psi_sd=float(psis.std(ddof=1)) if len(psis) > 1 else math.nan)
    result = ScenarioResult(config, report, records, failures, theta, names, summary)
    if out_dir is not None:
        write_outputs(result, out_dir)
    return result


def write_outputs(result: ScenarioResult, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "summary.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["metric", "value"])
        for k, v in result.summary.items():
            w.writerow([k, repr(v) if isinstance(v, float) else v])
    cols = ["rep", "seed", "n_window", "n_domain", "lam", "df", "criterion", "converged", *result.names]
    with open(out / "replicates.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols + ["error"])
        for r in result.records:
            w.writerow([repr(r[c]) if isinstance(r[c], float) else r[c] for c in cols] + [""])
        for f in result.failures:
            w.writerow([f["rep"], f["seed"]] + [""] * (len(cols) - 2) + [f["error"]])
    if result.config.write_paths:
        for r in result.records:
            if r["_path"] is not None:
                r["_path"].to_csv(out / f"path_{r['rep']}.csv")
