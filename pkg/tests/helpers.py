"""Small synthetic problems shared by the test modules."""

import math

import numpy as np

from gibbscl.covariates import CovariateGrid, CovariateStack
from gibbscl.model import InteractionSpec
from gibbscl.objective import CompositeProblem
from gibbscl.pattern import ObservationWindow, erode_window
from gibbscl.quadrature import berman_turner_scheme, build_design, logistic_scheme
from gibbscl.sampler import MhConfig, simulate_pattern

WINDOW = ObservationWindow(0, 100, 0, 50)


def smooth_stack(q, seed, window=WINDOW, cell=2.5):
    rng = np.random.default_rng(seed)
    nx, ny = int(window.width / cell), int(window.height / cell)
    xs = (np.arange(nx) + 0.5) / nx
    ys = (np.arange(ny) + 0.5) / ny
    grids = []
    for k in range(q):
        a, b, c = rng.uniform(1, 4, 3)
        v = np.sin(a * xs[None, :] * math.pi + c) * np.cos(b * ys[:, None] * math.pi)
        v = (v - v.mean()) / v.std()
        grids.append(CovariateGrid(v, window.xmin, window.ymin, cell, f"z{k + 1}"))
    return CovariateStack(tuple(grids))


def strauss_problem(kind="pseudo", seed=0, q=3, n_target=150, gamma=0.5, r=4.0, nd=30, delta=None):
    """Simulate a Strauss pattern with ``q`` smooth covariates and build its objective."""
    spec = InteractionSpec.strauss(r)
    cov = smooth_stack(q, seed + 100)
    beta = np.zeros(q)
    beta[: min(2, q)] = [0.8, -0.5][: min(2, q)]
    theta = np.concatenate([[math.log(gamma), math.log(n_target / WINDOW.area)], beta])
    pat = simulate_pattern(spec, theta, WINDOW, cov, MhConfig(40_000, 0.5, seed))
    domain = erode_window(WINDOW, spec.effective_range)
    if kind == "pseudo":
        scheme = berman_turner_scheme(pat, domain, nd)
    else:
        d = delta if delta is not None else 4 * len(pat) / domain.area
        scheme = logistic_scheme(pat, domain, d, seed=seed)
    design = build_design(spec, scheme, pat, cov)
    return CompositeProblem(design.matrix, scheme), design, pat, theta, spec, cov
