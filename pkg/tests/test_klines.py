import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import multivariate_normal

from gpcs.core import Line, major_axis_line, perp_distance
from gpcs.errors import DegenerateCluster, InsufficientData, InvalidArguments, \
    SingularCovariance
from gpcs.klines import (EmptyClusterPolicy, FitResult, InitMethod, KlinesConfig, aic,
                         aic_curve, assign, klines_fit, objective_w, recenter, run_restarts,
                         scree, select_k_aic)
from gpcs.simgen import builtin_setting, sample_mixture
from oracles import exhaustive_two_lines


def crossing_lines(m=50, seed=0):
    rng = np.random.default_rng(seed)
    t = rng.uniform(1, 5, size=(2, m)) * rng.choice([-1, 1], size=(2, m))
    x = np.concatenate(t)
    y = np.concatenate([t[0], -t[1]])
    return x, y, np.repeat([1, 2], m)


def same_partition(a, b):
    return len(set(zip(a, b))) == len(set(a)) == len(set(b))


# -- objective and assignment ---------------------------------------------------

def test_objective_zero_on_lines():
    x, y, _ = crossing_lines()
    lines = [Line.from_coefficients(1, -1, 0), Line.from_coefficients(1, 1, 0)]
    assert objective_w((x, y), lines) < 1e-28


def test_objective_single_point():
    assert objective_w(np.array([[0.0, 2.0]]), [Line(0, 1, 0)]) == 4


def test_objective_superset_not_larger():
    rng = np.random.default_rng(1)
    pts = rng.normal(size=(30, 2))
    lines = [Line.from_coefficients(*rng.normal(size=3)) for _ in range(3)]
    extra = Line.from_coefficients(*rng.normal(size=3))
    assert objective_w(pts, lines + [extra]) <= objective_w(pts, lines)


def test_assign_strictly_closer():
    lines = [Line.from_coefficients(1, -1, 0), Line.from_coefficients(1, 1, 0)]
    assert assign(np.array([[2.0, 1.9]]), lines)[0] == 1


def test_assign_tie_goes_low():
    lines = [Line.from_coefficients(1, -1, 0), Line.from_coefficients(1, 1, 0)]
    assert assign(np.array([[3.0, 0.0]]), lines)[0] == 1
    assert assign(np.array([[3.0, 0.0]]), lines[::-1])[0] == 1


def test_assign_matches_distance_scan():
    rng = np.random.default_rng(7)
    pts = rng.normal(size=(60, 2)) * 3
    lines = [Line.from_coefficients(*rng.normal(size=3)) for _ in range(4)]
    labels = assign(pts, lines)
    for p, lab in zip(pts, labels):
        d = [perp_distance(p, ln) for ln in lines]
        assert lab == 1 + min(range(4), key=lambda k: (d[k], k))


# -- recentering ---------------------------------------------------------------

def test_recenter_k1_is_major_axis():
    rng = np.random.default_rng(2)
    pts = rng.normal(size=(20, 2))
    [ln] = recenter(pts, np.ones(20, int), 1)
    assert ln.as_tuple() == pytest.approx(major_axis_line(pts).as_tuple(), abs=1e-14)


def test_recenter_separated_collinear_clouds():
    x = np.r_[np.linspace(0, 1, 10), np.linspace(10, 11, 10)]
    y = np.r_[2 * x[:10], -x[10:] + 3]
    lines = recenter((x, y), np.repeat([1, 2], 10), 2)
    assert objective_w((x, y), lines) < 1e-26


def test_recenter_reseeds_empty_cluster():
    rng = np.random.default_rng(4)
    pts = rng.normal(size=(12, 2))
    lines = recenter(pts, np.ones(12, int), 3)
    assert len(lines) == 3


def test_recenter_drop_policy():
    rng = np.random.default_rng(4)
    pts = rng.normal(size=(12, 2))
    assert len(recenter(pts, np.ones(12, int), 3, EmptyClusterPolicy.DROP)) == 1
    with pytest.raises(DegenerateCluster):
        recenter(np.ones((4, 2)), np.ones(4, int), 1, EmptyClusterPolicy.DROP)


def test_recenter_never_increases_objective():
    rng = np.random.default_rng(8)
    for _ in range(100):
        pts = rng.normal(size=(25, 2)) * rng.uniform(0.5, 3, size=2)
        lines = [Line.from_coefficients(*rng.normal(size=3)) for _ in range(2)]
        labels = assign(pts, lines)
        if len(set(labels)) < 2 or min(np.bincount(labels)[1:]) < 2:
            continue
        before = objective_w(pts, lines)
        after = objective_w(pts, recenter(pts, labels, 2))
        assert after <= before + 1e-12


# -- fitting -----------------------------------------------------------------

def test_fit_k1_equals_major_axis():
    rng = np.random.default_rng(3)
    pts = rng.multivariate_normal([0, 0], [[1, .5], [.5, 2]], size=40)
    fit = klines_fit(pts, 1)
    ln = major_axis_line(pts)
    assert fit.lines[0].as_tuple() == pytest.approx(ln.as_tuple(), abs=1e-12)
    assert fit.objective == pytest.approx(np.mean(perp_distance(pts, ln) ** 2), rel=1e-12)


def test_fit_noiseless_crossing_lines():
    x, y, truth = crossing_lines()
    fit = klines_fit((x, y), 2)
    assert fit.objective < 1e-20
    assert same_partition(fit.labels, truth)


def test_fit_result_invariants():
    s = sample_mixture(builtin_setting(3), 80, 5)
    fit = klines_fit(s, 2)
    assert isinstance(fit, FitResult)
    assert fit.objective == pytest.approx(objective_w(s, fit.lines), abs=1e-10)
    np.testing.assert_array_equal(fit.labels, assign(s, fit.lines))
    assert fit.restarts_run == 30


def test_fit_insufficient_data():
    with pytest.raises(InsufficientData):
        klines_fit(np.zeros((2, 2)) + [[0, 0], [1, 1]], 3)


def test_fit_deterministic():
    s = sample_mixture(builtin_setting(4), 60, 2)
    a = klines_fit(s, 3, KlinesConfig(seed=11))
    b = klines_fit(s, 3, KlinesConfig(seed=11))
    assert a.objective == b.objective
    np.testing.assert_array_equal(a.labels, b.labels)
    assert [l.as_tuple() for l in a.lines] == [l.as_tuple() for l in b.lines]


@pytest.mark.parametrize("seed", range(8))
def test_fit_matches_exhaustive_partition_n8(seed):
    rng = np.random.default_rng(100 + seed)
    pts = rng.normal(size=(8, 2))
    best = exhaustive_two_lines(pts[:, 0], pts[:, 1])
    assert klines_fit(pts, 2, KlinesConfig(seed=seed)).objective <= best + 1e-9


@pytest.mark.parametrize("init", list(InitMethod))
def test_every_init_runs_monotone(init):
    s = sample_mixture(builtin_setting(2), 60, 9)
    runs = run_restarts(s, 2, KlinesConfig(restarts=10, init=init))
    for r in runs:
        traj = np.array(r.trajectory)
        assert np.all(np.diff(traj) <= 1e-12 * max(1.0, traj[0]))
        assert r.iterations <= 100


def test_restarts_converge_before_cap():
    total = conv = 0
    for sid in range(1, 9):
        s = sample_mixture(builtin_setting(sid), 200, sid)
        for r in run_restarts(s, builtin_setting(sid).k, KlinesConfig()):
            total += 1
            conv += r.converged
    assert conv / total >= 0.99


def test_config_validation():
    with pytest.raises(InvalidArguments):
        KlinesConfig(restarts=0)
    with pytest.raises(InvalidArguments):
        KlinesConfig(seed=-1)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32))
def test_relabel_invariance(seed):
    s = sample_mixture(builtin_setting(1), 40, seed)
    fit = klines_fit(s, 2, KlinesConfig(restarts=5, seed=seed))
    flipped = [fit.lines[1], fit.lines[0]]
    assert objective_w(s, flipped) == pytest.approx(fit.objective, abs=1e-14)


# -- scree and AIC -------------------------------------------------------------

def test_scree_noiseless():
    x, y, _ = crossing_lines()
    w = dict(scree((x, y), 3))
    assert w[2] < 1e-20 and w[1] > 0


def test_scree_weakly_decreasing_small_n():
    rng = np.random.default_rng(12)
    pts = rng.normal(size=(12, 2))
    w = [v for _, v in scree(pts, 4)]
    assert all(b <= a + 1e-12 for a, b in zip(w, w[1:]))


def test_aic_k1_matches_direct_density():
    rng = np.random.default_rng(13)
    pts = rng.normal(size=(200, 2))
    fit = klines_fit(pts, 1)
    mean = pts.mean(axis=0)
    cov = np.cov(pts.T, bias=True)
    loglik = multivariate_normal(mean, cov).logpdf(pts).sum()
    assert aic(pts, fit) == pytest.approx(2 * 5 - 2 * loglik, rel=1e-8)


def test_aic_tiny_cluster_rejected():
    pts = np.array([[0, 0], [1, 1], [2, 2.1], [3, 3], [10, -5], [11, -6.2]], float)
    fit = klines_fit(pts, 2)
    labels = np.array([1, 1, 1, 1, 2, 2])
    fit.labels = labels
    with pytest.raises(SingularCovariance):
        aic(pts, fit)


def test_aic_curve_marks_infeasible():
    rng = np.random.default_rng(14)
    pts = rng.normal(size=(8, 2))
    curve = dict(aic_curve(pts, 4))
    assert curve[1] is not None
    assert curve[4] is None


def test_select_k_single_cloud():
    rng = np.random.default_rng(15)
    x = rng.normal(size=100)
    pts = np.column_stack([x, 2 * x + rng.normal(scale=0.3, size=100)])
    assert select_k_aic(pts, 5) == 1


def test_select_k_setting3():
    s = sample_mixture(builtin_setting(3), 100, 1)
    assert select_k_aic(s, 10) == 2
