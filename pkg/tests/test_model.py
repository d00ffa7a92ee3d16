import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gibbscl.covariates import CovariateGrid, CovariateStack
from gibbscl.model import (
    InteractionSpec, ModelError, ThetaVector, geyer_total, interaction_statistic,
    interaction_stats, papangelou, papangelou_pair, stat_increment, sufficient_stats,
)
from gibbscl.pattern import ObservationWindow, PointPattern

W = ObservationWindow(-30, 30, -30, 30)


def pp(pts):
    return PointPattern(np.array(pts, float).reshape(-1, 2), W)


def test_interaction_spec_validation():
    assert InteractionSpec.geyer(2.0, 1).effective_range == 4.0
    assert InteractionSpec.strauss(9.25).effective_range == 9.25
    assert InteractionSpec.poisson().effective_range == 0.0
    with pytest.raises(ModelError):
        InteractionSpec("strauss", 0.0)
    with pytest.raises(ModelError):
        InteractionSpec.geyer(1.0, 1.5)
    with pytest.raises(ModelError):
        InteractionSpec("hardcore", 1.0)


def test_statistic_examples():
    s = InteractionSpec.strauss(9.25)
    assert interaction_statistic(s, (0, 1), pp([(0, 0), (5, 0), (20, 0)]))[0] == 2
    g = InteractionSpec.geyer(2.0, 1)
    assert interaction_statistic(g, (1, 0), pp([(0, 0)]))[0] == 2
    assert interaction_statistic(g, (0.5, 0), pp([(0, 0), (1, 0)]))[0] == 1
    assert len(interaction_statistic(InteractionSpec.poisson(), (0, 0), pp([(1, 1)]))) == 0


def test_sufficient_stats_layout():
    grids = tuple(CovariateGrid(np.full((2, 2), float(k + 1)), -30, -30, 30, f"z{k}") for k in range(2))
    cov = CovariateStack(grids)
    s = InteractionSpec.strauss(9.25)
    t = sufficient_stats(s, (0, 1), pp([(0, 0), (5, 0), (20, 0)]), cov)
    np.testing.assert_array_equal(t, [2, 1, 1, 2])
    tp = sufficient_stats(InteractionSpec.poisson(), (0, 1), pp([]), cov)
    np.testing.assert_array_equal(tp, [1, 1, 2])
    assert sufficient_stats(s, (0, 1), pp([]), cov)[0] == 0


def test_papangelou_examples():
    s = InteractionSpec.strauss(9.25)
    x = pp([(0, 0), (5, 0), (20, 0)])
    assert papangelou(s, [math.log(0.5), 0.0], (0, 1), x, None) == pytest.approx(0.25)
    assert papangelou(s, [0.0, 0.0], (0, 1), x, None) == 1.0
    assert papangelou(s, [0.0, 1.3], (0, 1), x, None) == pytest.approx(math.exp(1.3))
    th = ThetaVector([math.log(0.5)], [0.0])
    assert papangelou_pair(s, th, (0, 0), (1, 0), pp([]), None) == pytest.approx(0.5)
    assert papangelou_pair(InteractionSpec.poisson(), [0.7], (0, 0), (1, 0), pp([]), None) == pytest.approx(math.exp(1.4))


def test_stat_increment_examples():
    s = InteractionSpec.strauss(9.25)
    x = pp([(10, 10)])
    np.testing.assert_array_equal(stat_increment(s, (0, 0), (3, 0), x, None), [1, 0])
    np.testing.assert_array_equal(stat_increment(s, (0, 0), (20, 0), x, None), [0, 0])
    np.testing.assert_array_equal(stat_increment(InteractionSpec.poisson(), (0, 0), (1, 0), x, None), [0])


def random_config(rng, n):
    return np.column_stack([rng.uniform(-20, 20, n), rng.uniform(-20, 20, n)])


def test_geyer_matches_brute_force_difference(rng):
    for _ in range(300):
        r = rng.uniform(1, 8)
        sat = float(rng.integers(1, 4))
        spec = InteractionSpec.geyer(r, sat)
        pts = random_config(rng, rng.integers(0, 25))
        u = rng.uniform(-20, 20, 2)
        want = geyer_total(np.vstack([pts, u]), r, sat) - geyer_total(pts, r, sat)
        got = interaction_statistic(spec, u, pp(pts))[0]
        assert got == pytest.approx(want, abs=1e-12)
        assert 0 <= got and min(sat, (np.hypot(*(pts - u).T) <= r).sum()) <= sat


def test_data_point_rows_use_pattern_minus_point(rng):
    spec = InteractionSpec.geyer(5.0, 2)
    pts = random_config(rng, 30)
    x = pp(pts)
    got = interaction_stats(spec, pts, x, np.arange(30))[:, 0]
    for i in range(30):
        rest = np.delete(pts, i, axis=0)
        want = geyer_total(pts, 5.0, 2) - geyer_total(rest, 5.0, 2)
        assert got[i] == pytest.approx(want)


def test_pair_symmetry_random_configurations(rng):
    for k in range(1000):
        spec = InteractionSpec.strauss(6.0) if k % 2 else InteractionSpec.geyer(4.0, 1)
        x = pp(random_config(rng, rng.integers(0, 12)))
        u, v = rng.uniform(-20, 20, (2, 2))
        th = [rng.normal(), rng.normal()]
        a = papangelou_pair(spec, th, u, v, x, None)
        b = papangelou_pair(spec, th, v, u, x, None)
        assert a == pytest.approx(b, rel=1e-12)


@given(st.integers(0, 10_000))
def test_finite_range_property(seed):
    rng = np.random.default_rng(seed)
    for spec in (InteractionSpec.strauss(3.0), InteractionSpec.geyer(3.0, 1)):
        pts = random_config(rng, 15)
        u = rng.uniform(-20, 20, 2)
        ang = rng.uniform(0, 2 * np.pi)
        dist = spec.effective_range + rng.uniform(1e-6, 10)
        v = u + dist * np.array([np.cos(ang), np.sin(ang)])
        if not (np.all(np.abs(v) < 30)):
            continue
        base = interaction_statistic(spec, u, pp(pts))
        plus = interaction_statistic(spec, u, pp(np.vstack([pts, v])))
        np.testing.assert_array_equal(base, plus)


@given(st.integers(0, 10_000), st.floats(0.01, 1.0))
def test_strauss_local_stability(seed, gamma):
    rng = np.random.default_rng(seed)
    spec = InteractionSpec.strauss(5.0)
    x = pp(random_config(rng, 20))
    u = rng.uniform(-20, 20, 2)
    beta0 = rng.normal()
    assert papangelou(spec, [math.log(gamma), beta0], u, x, None) <= math.exp(beta0) * (1 + 1e-12)
