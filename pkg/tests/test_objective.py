import math

import numpy as np
import pytest

from gibbscl.model import InteractionSpec
from gibbscl.objective import (
    CompositeProblem, DegenerateWeightError, DivergenceError, irls_surrogate, lcl_eval, lpl_eval,
)
from gibbscl.pattern import ObservationWindow, PointPattern, erode_window
from gibbscl.quadrature import berman_turner_scheme, build_design
from gibbscl.sampler import MhConfig, gnz_residual, simulate_pattern

from helpers import WINDOW, smooth_stack, strauss_problem


def central_diff(f, theta, h=1e-5):
    g = np.empty_like(theta)
    for j in range(len(theta)):
        e = np.zeros_like(theta)
        e[j] = h
        g[j] = (f(theta + e) - f(theta - e)) / (2 * h)
    return g


def random_instance(rng):
    n_data, n_dummy, p = rng.integers(5, 40), rng.integers(20, 200), rng.integers(1, 6)
    data = rng.normal(size=(n_data, p))
    dummy = rng.normal(size=(n_dummy, p))
    theta = rng.normal(scale=0.5, size=p)
    return data, dummy, theta


@pytest.fixture(scope="module")
def pseudo():
    return strauss_problem("pseudo", seed=1)


@pytest.fixture(scope="module")
def logistic():
    return strauss_problem("logistic", seed=1)


def test_lpl_at_zero(pseudo):
    prob = pseudo[0]
    assert prob.value(np.zeros(prob.p)) == pytest.approx(-prob.area, rel=1e-12)


def test_lcl_at_zero():
    data, dummy = np.ones((7, 2)), np.ones((13, 2))
    assert lcl_eval(np.zeros(2), data, dummy, 1.0).value == pytest.approx(20 * math.log(0.5), rel=1e-14)


def test_lcl_separated_limit():
    data, dummy = np.ones((5, 1)), -np.ones((9, 1))
    v = lcl_eval(np.array([40.0]), data, dummy, 1.0).value
    assert -1e-15 < v < 0 or v == 0.0
    assert lcl_eval(np.array([20.0]), data, dummy, 1.0).value < 0


def test_gradients_match_finite_differences(rng):
    for _ in range(50):
        data, dummy, theta = random_instance(rng)
        delta = rng.uniform(0.2, 5.0)
        g = lcl_eval(theta, data, dummy, delta).gradient
        fd = central_diff(lambda t: lcl_eval(t, data, dummy, delta).value, theta)
        assert np.max(np.abs(g - fd)) <= 1e-6 * max(1.0, np.max(np.abs(g)))


def test_lpl_gradient_on_scheme(pseudo, rng):
    prob = pseudo[0]
    for _ in range(10):
        theta = rng.normal(scale=0.1, size=prob.p) + np.r_[0, -3, np.zeros(prob.p - 2)]
        g = prob.evaluate(theta).gradient
        fd = central_diff(prob.value, theta)
        assert np.max(np.abs(g - fd)) <= 1e-6 * max(1.0, np.max(np.abs(g)))


def test_hessians_negative_semidefinite(pseudo, logistic, rng):
    for prob in (pseudo[0], logistic[0]):
        theta = pseudo[3]
        h = prob.evaluate(theta).hessian
        v = rng.normal(size=(100, prob.p))
        assert np.all(np.einsum("ij,jk,ik->i", v, h, v) <= 1e-9 * np.abs(h).max())
        np.testing.assert_allclose(h, h.T, rtol=0, atol=1e-12 * np.abs(h).max())


def test_overflow_guard(pseudo):
    prob = pseudo[0]
    theta = np.zeros(prob.p)
    theta[1] = 800.0
    with pytest.raises(DivergenceError):
        prob.evaluate(theta)
    with pytest.raises(DivergenceError):
        lcl_eval(np.array([800.0]), np.ones((1, 1)), np.ones((1, 1)), 1.0)


def test_surrogate_at_zero(pseudo):
    prob = pseudo[0]
    w, ystar = prob.surrogate(np.zeros(prob.p))
    np.testing.assert_allclose(w, prob.scheme.weights, rtol=1e-15)
    np.testing.assert_allclose(ystar, prob.scheme.responses - 1, rtol=1e-15, atol=1e-15)


@pytest.mark.parametrize("which", ["pseudo", "logistic"])
def test_surrogate_gradient_and_fisher_step(which, pseudo, logistic):
    prob, _, _, theta = (pseudo if which == "pseudo" else logistic)[:4]
    theta = theta + 0.1
    w, ystar = prob.surrogate(theta)
    t = prob.design
    sur_grad = t.T @ (w * (ystar - t @ theta))
    ev = prob.evaluate(theta)
    assert np.max(np.abs(sur_grad - ev.gradient)) <= 1e-10 * max(1.0, np.abs(ev.gradient).max())
    # one Newton step on the surrogate is a Fisher scoring step on the objective
    step_sur = np.linalg.solve((t.T * w) @ t, sur_grad)
    step_fs = np.linalg.solve(-ev.hessian, ev.gradient)
    np.testing.assert_allclose(step_sur, step_fs, rtol=1e-8, atol=1e-12)


def test_degenerate_weight():
    w = ObservationWindow(0, 10, 0, 10)
    pat = PointPattern(np.zeros((0, 2)), w)
    scheme = berman_turner_scheme(pat, w, 2)
    with pytest.raises(DegenerateWeightError):
        irls_surrogate(np.array([-800.0]), scheme, np.ones((4, 1)))


def test_intercept_only_closed_form(rng):
    w = ObservationWindow(0, 80, 0, 40)
    pts = np.column_stack([rng.uniform(0, 80, 123), rng.uniform(0, 40, 123)])
    pat = PointPattern(pts, w)
    scheme = berman_turner_scheme(pat, w, 20)
    prob = CompositeProblem(build_design(InteractionSpec.poisson(), scheme, pat, None).matrix, scheme)
    b = np.zeros(1)
    for _ in range(50):
        ev = prob.evaluate(b)
        b = b - ev.gradient / ev.hessian[0]
    assert b[0] == pytest.approx(math.log(123 / w.area), abs=1e-10)
    assert lpl_eval(b, scheme, prob.design).gradient[0] == pytest.approx(0, abs=1e-9)


def test_score_unbiased_at_truth():
    spec = InteractionSpec.strauss(4.0)
    cov = smooth_stack(2, 7)
    theta = np.array([math.log(0.5), math.log(150 / WINDOW.area), 0.8, -0.5])
    pats = [simulate_pattern(spec, theta, WINDOW, cov, MhConfig(30_000, 0.5, 500 + k)) for k in range(120)]
    res = gnz_residual(spec, theta, pats, erode_window(WINDOW, 4.0), cov, nd=40)
    assert np.all(np.abs(res.mean) < 3 * res.se)
