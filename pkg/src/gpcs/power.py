"""Permutation-calibrated power comparison of association measures.

For each of B alternative samples one null twin is made by permuting y.
A measure's threshold is the (1 - alpha) quantile of its B null values and
its power is the share of alternative values strictly above it.
"""
import enum
import math
import warnings
from dataclasses import dataclass
from typing import Callable, Dict

import numpy as np

from .core import BivariateSample, as_xy
from .errors import InvalidArguments
from .klines import KlinesConfig
from .measures import r2_gu
from .parallel import parallel_map, spawn_seeds


class Pattern(enum.Enum):
    TWO_LINES_MIXED_SIGN = "two_lines"
    LINEAR = "linear"
    PARABOLA = "parabola"
    PIECEWISE_NONLINEAR_MIX = "piecewise"
    INDEPENDENT = "none"


@dataclass(frozen=True)
class PatternSpec:
    pattern: Pattern
    sigma: float
    x_sd: float = 5.0
    parabola_scale: float = 5.0
    arc_scale: float = 20.0

    def __post_init__(self):
        object.__setattr__(self, "pattern", Pattern(self.pattern))
        if not (math.isfinite(self.sigma) and self.sigma >= 0):
            raise InvalidArguments("sigma must be finite and >= 0")


def _noiseless(spec, x, rng):
    p = spec.pattern
    if p is Pattern.LINEAR:
        return x.copy()
    if p is Pattern.TWO_LINES_MIXED_SIGN:
        return np.where(rng.random(x.size) < 0.5, 1.0, -1.0) * x
    if p is Pattern.PARABOLA:
        return x * x / spec.parabola_scale
    if p is Pattern.PIECEWISE_NONLINEAR_MIX:
        # two arcs of opposite curvature hugging y = x and y = -x
        s = np.where(rng.random(x.size) < 0.5, 1.0, -1.0)
        return s * (x + x * x / spec.arc_scale)
    return np.zeros_like(x)


def generate_pattern(spec, n, seed=0):
    """x ~ N(0, x_sd^2), y = f(x) + N(0, sigma^2)."""
    if n < 2:
        raise InvalidArguments("n must be >= 2")
    rng = np.random.default_rng(seed)
    x = rng.normal(0.0, spec.x_sd, size=n)
    y = _noiseless(spec, x, rng) + rng.normal(0.0, 1.0, size=n) * spec.sigma
    return BivariateSample(x, y)


def pearson_r2(points):
    """Squared sample Pearson correlation; 0 (with a warning) if a variance is 0."""
    x, y = as_xy(points)
    if x.size < 2:
        raise InvalidArguments("pearson_r2 needs n >= 2")
    dx, dy = x - x.mean(), y - y.mean()
    sxx, syy = np.dot(dx, dx), np.dot(dy, dy)
    if sxx == 0 or syy == 0:
        warnings.warn("zero variance; Pearson R^2 set to 0", RuntimeWarning, stacklevel=2)
        return 0.0
    sxy = np.dot(dx, dy)
    return float(min(sxy * sxy / (sxx * syy), 1.0))


def _double_centered(v):
    d = np.abs(v[:, None] - v[None, :])
    return d - d.mean(axis=0)[None, :] - d.mean(axis=1)[:, None] + d.mean()


def dcor(points):
    """Sample distance correlation (not squared), via double-centred distance matrices."""
    x, y = as_xy(points)
    if x.size < 2:
        raise InvalidArguments("dcor needs n >= 2")
    a = _double_centered(x)
    b = _double_centered(y)
    dcov2 = np.mean(a * b)
    dvar = np.mean(a * a) * np.mean(b * b)
    if dvar <= 0:
        return 0.0
    return float(math.sqrt(max(dcov2, 0.0) / math.sqrt(dvar)))


def gcs_measure(k=2, config=KlinesConfig()):
    """r2_gu at fixed K as a measure function. K-lines seeds come from the data seed."""
    def measure(points, seed=0):
        return r2_gu(points, k, config.with_seed(seed)).value
    measure.__name__ = f"r2_gu_k{k}"
    measure.uses_seed = True
    return measure


DEFAULT_MEASURES = {"r2": pearson_r2, "dcor": dcor}


@dataclass
class PowerReport:
    measure: str
    pattern: str
    n: int
    sigma: float
    alpha: float
    threshold: float
    power: float
    B: int

    def to_dict(self):
        return dict(self.__dict__)


def _evaluate(measures, x, y, seed):
    out = {}
    for name, fn in measures.items():
        out[name] = fn((x, y), seed) if getattr(fn, "uses_seed", False) else fn((x, y))
    return out


def permutation_power(pattern, measures, n, B=1000, alpha=0.05, seed=0, threads=1,
                      return_values=False):
    """Power of each measure at one (pattern, n), calibrated by permuted-y nulls.

    `measures` maps names to callables taking (x, y). Returns a list of
    PowerReport (and the raw alternative/null values when requested).
    """
    if B < 200:
        raise InvalidArguments("permutation power needs B >= 200")
    if not 0 < alpha < 0.5:
        raise InvalidArguments("alpha must lie in (0, 0.5)")
    measures: Dict[str, Callable] = dict(measures)

    def one(s):
        rng = np.random.default_rng(s)
        s_data, s_perm, s_alt, s_null = (int(v) for v in rng.integers(2 ** 63, size=4))
        sample = generate_pattern(pattern, n, s_data)
        perm = np.random.default_rng(s_perm).permutation(n)
        alt = _evaluate(measures, sample.x, sample.y, s_alt)
        null = _evaluate(measures, sample.x, sample.y[perm], s_null)
        return alt, null

    pairs = parallel_map(one, spawn_seeds(seed, B), threads)
    reports, values = [], {}
    for name in measures:
        alt = np.array([p[0][name] for p in pairs])
        null = np.array([p[1][name] for p in pairs])
        thr = float(np.quantile(null, 1 - alpha))
        reports.append(PowerReport(measure=name, pattern=pattern.pattern.value, n=n,
                                   sigma=pattern.sigma, alpha=alpha, threshold=thr,
                                   power=float(np.mean(alt > thr)), B=B))
        values[name] = (alt, null)
    if return_values:
        return reports, values
    return reports
