import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gpcs.errors import InvalidArguments
from gpcs.power import (DEFAULT_MEASURES, Pattern, PatternSpec, dcor, gcs_measure,
                        generate_pattern, pearson_r2, permutation_power)
from gpcs.measures import r2_gu
from oracles import naive_dcor


def test_pearson_examples():
    x = np.arange(10.0)
    assert pearson_r2((x, 3 * x + 2)) == pytest.approx(1)
    assert pearson_r2((x, -x)) == pytest.approx(1)
    pts = np.array([(1, 2), (2, 1), (3, 4), (4, 3), (5, 5)], float)
    assert pearson_r2(pts) == pytest.approx(0.64, abs=1e-12)


def test_pearson_zero_variance():
    with pytest.warns(RuntimeWarning):
        assert pearson_r2((np.arange(4.0), np.ones(4))) == 0


def test_dcor_examples():
    x = np.linspace(-1, 1, 30)
    assert dcor((x, x)) == pytest.approx(1, abs=1e-12)
    rng = np.random.default_rng(0)
    assert dcor(rng.normal(size=(5000, 2))) < 0.1
    assert dcor((x, np.zeros(30))) == 0


@pytest.mark.parametrize("seed", range(10))
def test_dcor_matches_naive(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 51))
    x = rng.normal(size=n)
    y = x ** 2 + rng.normal(size=n)
    assert dcor((x, y)) == pytest.approx(naive_dcor(x, y), abs=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32))
def test_dcor_joint_permutation_invariant(seed):
    rng = np.random.default_rng(seed)
    x, y = rng.normal(size=(2, 25))
    p = rng.permutation(25)
    # equal up to summation order
    assert abs(dcor((x[p], y[p])) - dcor((x, y))) < 1e-14


def test_pattern_linear_noiseless():
    s = generate_pattern(PatternSpec("linear", 0.0), 50, 1)
    assert pearson_r2(s) == pytest.approx(1, abs=1e-12)


def test_pattern_two_lines_large():
    s = generate_pattern(PatternSpec("two_lines", 0.0), 10000, 2)
    assert pearson_r2(s) < 0.05
    assert r2_gu(s, 2).value > 0.99


def test_pattern_parabola_large():
    # two lines split the parabola at its vertex; for normal X each half has
    # corr(|u|, u^2)^2 = 1 / (pi - 2) whatever the parabola's scale
    s = generate_pattern(PatternSpec("parabola", 0.0), 10000, 3)
    assert r2_gu(s, 2).value == pytest.approx(1 / (math.pi - 2), abs=0.01)
    assert r2_gu(s, 2).value > 10 * pearson_r2(s)


def test_pattern_spec_validation():
    with pytest.raises(InvalidArguments):
        PatternSpec("linear", -1.0)
    with pytest.raises(ValueError):
        PatternSpec("spiral", 1.0)
    assert PatternSpec("piecewise", 1).pattern is Pattern.PIECEWISE_NONLINEAR_MIX


def test_pattern_deterministic():
    a = generate_pattern(PatternSpec("piecewise", 1.0), 30, 9)
    b = generate_pattern(PatternSpec("piecewise", 1.0), 30, 9)
    np.testing.assert_array_equal(a.y, b.y)


def test_power_argument_checks():
    spec = PatternSpec("linear", 1.0)
    with pytest.raises(InvalidArguments):
        permutation_power(spec, DEFAULT_MEASURES, 20, B=50)
    with pytest.raises(InvalidArguments):
        permutation_power(spec, DEFAULT_MEASURES, 20, B=200, alpha=0.5)


def test_power_threshold_is_null_quantile():
    spec = PatternSpec("linear", 5.0)
    reports, values = permutation_power(spec, DEFAULT_MEASURES, 20, B=200, seed=1,
                                        return_values=True)
    for rep in reports:
        alt, null = values[rep.measure]
        assert rep.threshold == np.quantile(null, 0.95)
        assert rep.power == np.mean(alt > rep.threshold)


def test_power_noise_limit():
    measures = dict(DEFAULT_MEASURES, gcs=gcs_measure(2))
    reports = permutation_power(PatternSpec("linear", 1000.0), measures, 30, B=400, seed=2)
    for rep in reports:
        assert abs(rep.power - 0.05) <= 0.03


def test_power_deterministic_across_threads():
    measures = dict(DEFAULT_MEASURES, gcs=gcs_measure(2))
    spec = PatternSpec("two_lines", 2.0)
    a = permutation_power(spec, measures, 30, B=200, seed=3, threads=1)
    b = permutation_power(spec, measures, 30, B=200, seed=3, threads=4)
    assert [r.to_dict() for r in a] == [r.to_dict() for r in b]


def test_power_monotone_in_sigma():
    measures = {"r2": pearson_r2}
    powers = [permutation_power(PatternSpec("linear", s), measures, 30, B=300, seed=4)[0].power
              for s in (2.0, 6.0, 12.0, 30.0)]
    assert all(b <= a + 0.05 for a, b in zip(powers, powers[1:]))


def test_power_monotone_in_n():
    measures = {"dcor": dcor}
    spec = PatternSpec("parabola", 8.0)
    small = permutation_power(spec, measures, 30, B=300, seed=5)[0].power
    large = permutation_power(spec, measures, 200, B=300, seed=5)[0].power
    assert large >= small - 0.05
