"""Simulation and penalized composite-likelihood fitting of Gibbs point processes."""

from .covariates import CovariateGrid, CovariateStack, read_grid, standardize, write_grid
from .harness import ScenarioConfig, compute_metrics, run_scenario
from .inference import (
    annotate_path, bootstrap_covariance, criterion_value, effective_df, pair_structure,
    score_variance, select_model, sensitivity_matrix,
)
from .model import InteractionSpec, ThetaVector, papangelou, sufficient_stats
from .objective import CompositeProblem, lcl_eval, lpl_eval
from .path import PathConfig, RegularizationPath, fit_path, fit_single_lambda, lambda_max
from .pattern import ObservationWindow, PointPattern, erode_window
from .penalties import PenaltySpec, coordinate_update
from .quadrature import berman_turner_scheme, build_design, logistic_scheme
from .sampler import MhConfig, simulate_pattern

__version__ = "0.1.0"
