"""Asymptotic variances, plug-in intervals and bootstrap intervals.

The variance functions return the asymptotic variance of
sqrt(n) * (estimate - target); the standard error is sqrt(var / n).
"""
import enum
import math
import warnings
from dataclasses import dataclass
from statistics import NormalDist
from typing import Optional

import numpy as np

from .core import BivariateSample
from .errors import BootstrapFailure, DimensionMismatch, GpcsError, InvalidArguments, \
    MissingMoments
from .klines import KlinesConfig
from .measures import Scenario, r2_gs, r2_gu
from .parallel import parallel_map, spawn_seeds

NEG_VAR_TOL = 1e-10
REQUIRED_MOMENTS = ((4, 0), (0, 4), (3, 1), (1, 3), (2, 2))


class VarianceVariant(enum.Enum):
    GAUSSIAN_CLOSED_FORM = "gaussian"  # "P1"
    GENERAL_MOMENTS = "general"  # "P2"


class CiMethod(enum.Enum):
    PLUGIN_ASYMPTOTIC = "plugin"
    BOOTSTRAP = "bootstrap"


class BootstrapMode(enum.Enum):
    PARAMETRIC = "parametric"
    NONPARAMETRIC = "nonparametric"


@dataclass
class ConfidenceInterval:
    lower: float
    upper: float
    level: float
    method: CiMethod
    se: float
    value: float
    variant: Optional[VarianceVariant] = None
    clamped_variance: bool = False
    replicates: int = 0
    dropped: int = 0

    def clamped(self):
        return max(0.0, self.lower), min(1.0, self.upper)

    def covers(self, target):
        return self.lower <= target <= self.upper

    def to_dict(self):
        lo, hi = self.clamped()
        return {
            "lower": self.lower,
            "upper": self.upper,
            "lower_clamped": lo,
            "upper_clamped": hi,
            "level": self.level,
            "method": self.method.value,
            "variant": None if self.variant is None else self.variant.value,
            "se": self.se,
            "replicates": self.replicates,
            "dropped": self.dropped,
        }


def z_quantile(level):
    if not 0 < level < 1:
        raise InvalidArguments("level must lie in (0, 1)")
    return NormalDist().inv_cdf((1 + level) / 2)


def _clamp(v):
    if v < -NEG_VAR_TOL:
        warnings.warn(f"negative variance estimate {v:g} clamped to 0", RuntimeWarning,
                      stacklevel=3)
    return max(v, 0.0)


def _pairwise(weights, rho2s):
    # sum over k < r of p_k p_r rho2_k rho2_r, via (sum^2 - sum of squares) / 2
    t = np.asarray(weights) * np.asarray(rho2s)
    return 0.5 * (t.sum() ** 2 - np.sum(t * t))


def asy_var_general(components):
    """Moment-based asymptotic variance, valid without distributional assumptions.

    Components need `weight`, and `std_moments` with the signed correlation at
    (1, 1) and the fourth-order standardized moments.
    """
    weights, rho2s, total = [], [], 0.0
    for comp in components:
        p = comp.weight
        rho = comp.rho
        weights.append(p)
        rho2s.append(rho * rho)
        if rho == 0:
            continue
        try:
            m = {key: comp.std_moments[key] for key in REQUIRED_MOMENTS}
        except KeyError as exc:
            raise MissingMoments(f"component lacks standardized moment {exc}") from None
        if any(math.isnan(v) for v in m.values()):
            raise MissingMoments("component has undefined standardized moments")
        r2 = rho * rho
        a = p * (r2 * r2 * (m[4, 0] + 2 * m[2, 2] + m[0, 4])
                 - 4 * r2 * rho * (m[3, 1] + m[1, 3]) + 4 * r2 * m[2, 2])
        b = p * (1 - p) * r2 * r2
        total += a + b
    total -= 2 * _pairwise(weights, rho2s)
    return _clamp(float(total))


def asy_var_gaussian(weights, rho2s):
    """Asymptotic variance when every component is bivariate Gaussian."""
    if len(weights) != len(rho2s):
        raise DimensionMismatch("weights and rho2s differ in length")
    p = np.asarray(weights, dtype=float)
    r2 = np.asarray(rho2s, dtype=float)
    total = np.sum(4 * p * r2 * (1 - r2) ** 2 + p * (1 - p) * r2 ** 2)
    total -= 2 * _pairwise(p, r2)
    return _clamp(float(total))


def estimate_variance(estimate, variant):
    variant = VarianceVariant(variant)
    if variant is VarianceVariant.GAUSSIAN_CLOSED_FORM:
        return asy_var_gaussian(estimate.weights, estimate.rho2s)
    return asy_var_general(estimate.components)


def normal_ci(value, var, n, level, **kw):
    se = math.sqrt(var / n)
    z = z_quantile(level)
    return ConfidenceInterval(lower=value - z * se, upper=value + z * se, level=level,
                              se=se, value=value, **kw)


def plugin_ci(estimate, n=None, level=0.95, variant=VarianceVariant.GAUSSIAN_CLOSED_FORM):
    """value +/- z * sqrt(V/n) with V evaluated at the estimate's component statistics.

    In the unspecified case the components are those of the recorded fit, so no
    refit happens.
    """
    n = estimate.n if n is None else n
    variant = VarianceVariant(variant)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        var = estimate_variance(estimate, variant)
    return normal_ci(estimate.value, var, n, level, method=CiMethod.PLUGIN_ASYMPTOTIC,
                     variant=variant, clamped_variance=bool(caught))


def _gaussian_resample(estimate, n, rng):
    comps = estimate.components
    p = np.array([c.weight for c in comps])
    z = rng.choice(len(comps), size=n, p=p / p.sum())
    x = np.empty(n)
    y = np.empty(n)
    for j, c in enumerate(comps):
        m = z == j
        cov = np.array([[c.var_x, c.cov_xy], [c.cov_xy, c.var_y]])
        draw = rng.multivariate_normal([c.mean_x, c.mean_y], cov, size=int(m.sum()),
                                       method="eigh")
        x[m], y[m] = draw[:, 0], draw[:, 1]
    return x, y, z + 1


def _replicate(sample, estimate, mode, config, k, seed):
    rng = np.random.default_rng(seed)
    n = sample.n
    if mode is BootstrapMode.NONPARAMETRIC:
        idx = rng.integers(n, size=n)
        x, y = sample.x[idx], sample.y[idx]
        z = None if sample.labels is None else sample.labels[idx]
    else:
        x, y, z = _gaussian_resample(estimate, n, rng)
    if estimate.scenario is Scenario.SPECIFIED:
        return r2_gs(BivariateSample(x, y, z)).value
    child = int(rng.integers(2 ** 63))
    return r2_gu((x, y), k, config.with_seed(child)).value


def bootstrap_ci(sample, B=1000, mode=BootstrapMode.NONPARAMETRIC, level=0.95, seed=0,
                 k=None, config=KlinesConfig(), estimate=None, threads=1):
    """Normal-theory bootstrap interval: value +/- z * sd(bootstrap replicates).

    A labelled sample is treated as the specified scenario; otherwise `k` is
    required and K-lines is refitted on every replicate. Parametric mode draws
    from the per-component Gaussian plug-in fit. Replicates that fail are
    dropped; more than 10% dropped raises BootstrapFailure.
    """
    mode = BootstrapMode(mode)
    if B < 100:
        raise InvalidArguments("bootstrap needs B >= 100")
    if not isinstance(sample, BivariateSample):
        sample = BivariateSample.from_points(sample)
    if estimate is None:
        if sample.labels is not None:
            estimate = r2_gs(sample)
        elif k is None:
            raise InvalidArguments("unlabelled bootstrap needs k")
        else:
            estimate = r2_gu(sample, k, config)
    k = estimate.k if k is None else k

    def one(s):
        try:
            return _replicate(sample, estimate, mode, config, k, s)
        except GpcsError:
            return None

    values = parallel_map(one, spawn_seeds(seed, B), threads)
    kept = np.array([v for v in values if v is not None])
    dropped = B - kept.size
    if dropped > 0.1 * B:
        raise BootstrapFailure(f"{dropped} of {B} bootstrap replicates failed")
    se = float(np.std(kept, ddof=1)) if kept.size > 1 else 0.0
    z = z_quantile(level)
    return ConfidenceInterval(lower=estimate.value - z * se, upper=estimate.value + z * se,
                              level=level, method=CiMethod.BOOTSTRAP, se=se,
                              value=estimate.value, replicates=int(kept.size),
                              dropped=int(dropped))
