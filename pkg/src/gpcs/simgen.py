"""Mixture generators for the eight reference settings, population targets and
the confidence-interval coverage experiment."""
import enum
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .core import BivariateSample, ComponentSummary, MOMENT_ORDERS
from .errors import GpcsError, InvalidArguments, UnknownSetting, ValidationError
from .inference import (BootstrapMode, VarianceVariant, asy_var_gaussian, asy_var_general,
                        bootstrap_ci, normal_ci, plugin_ci, CiMethod)
from .klines import KlinesConfig, select_k_aic
from .measures import Scenario, r2_gs, r2_gu
from .parallel import parallel_map, spawn_seeds


class Family(enum.Enum):
    GAUSSIAN = "gaussian"
    STUDENT_T = "t"


@dataclass
class MixtureComponent:
    weight: float
    mean: tuple
    shape: tuple  # ((s11, s12), (s12, s22))
    family: Family = Family.GAUSSIAN
    dof: Optional[float] = None

    def __post_init__(self):
        self.family = Family(self.family)
        self.mean = tuple(float(v) for v in self.mean)
        self.shape = tuple(tuple(float(v) for v in row) for row in self.shape)
        s = np.array(self.shape)
        if s.shape != (2, 2) or len(self.mean) != 2:
            raise ValidationError("component needs a 2-vector mean and a 2x2 shape")
        if s[0, 1] != s[1, 0] or s[0, 0] <= 0 or np.linalg.det(s) <= 0:
            raise ValidationError("shape matrix must be symmetric positive definite")
        if (self.family is Family.STUDENT_T) != (self.dof is not None):
            raise ValidationError("dof is required for, and only for, t components")
        if self.dof is not None and not self.dof > 2:
            raise ValidationError("t components need dof > 2")

    @property
    def rho(self):
        s = self.shape
        return s[0][1] / math.sqrt(s[0][0] * s[1][1])

    @property
    def kurtosis_factor(self):
        """Ratio of standardized fourth moments to their Gaussian values."""
        if self.family is Family.GAUSSIAN:
            return 1.0
        if self.dof <= 4:
            return math.inf
        return (self.dof - 2) / (self.dof - 4)

    def to_dict(self):
        d = {"weight": self.weight, "mean": list(self.mean),
             "shape": [list(r) for r in self.shape], "family": self.family.value}
        if self.dof is not None:
            d["dof"] = self.dof
        return d


@dataclass
class MixtureSpec:
    components: List[MixtureComponent]
    name: str = "custom"

    def __post_init__(self):
        self.components = [c if isinstance(c, MixtureComponent) else MixtureComponent(**c)
                           for c in self.components]
        if not self.components:
            raise ValidationError("mixture needs at least one component")
        if abs(sum(c.weight for c in self.components) - 1) > 1e-12:
            raise ValidationError("mixture weights must sum to 1")
        if any(not 0 < c.weight <= 1 for c in self.components):
            raise ValidationError("mixture weights must lie in (0, 1]")

    @property
    def k(self):
        return len(self.components)

    @property
    def all_gaussian(self):
        return all(c.family is Family.GAUSSIAN for c in self.components)

    def to_dict(self):
        return {"name": self.name, "components": [c.to_dict() for c in self.components]}

    @classmethod
    def from_dict(cls, d):
        return cls(components=[MixtureComponent(**c) for c in d["components"]],
                   name=d.get("name", "custom"))


def _shape(r):
    return ((1.0, r), (r, 1.0))


_SETTINGS = {
    1: ([0.5, 0.5], [(0, -2), (0, 2)], [0.8, 0.8]),
    2: ([0.5, 0.5], [(0, 0), (0, 0)], [0.8, -0.8]),
    3: ([0.3, 0.7], [(0, -2), (0, 2)], [0.8, -0.8]),
    4: ([0.25, 0.5, 0.25], [(0, -2), (0, 6), (-2, 2)], [0.8, -0.7, 0.9]),
}


def builtin_setting(setting_id):
    """Settings 1-4 are Gaussian mixtures; 5-8 repeat them with t(8) components."""
    if setting_id not in range(1, 9):
        raise UnknownSetting(f"no built-in setting {setting_id}; choose 1-8")
    base = (setting_id - 1) % 4 + 1
    weights, means, rhos = _SETTINGS[base]
    t = setting_id > 4
    comps = [MixtureComponent(weight=w, mean=m, shape=_shape(r),
                              family=Family.STUDENT_T if t else Family.GAUSSIAN,
                              dof=8.0 if t else None)
             for w, m, r in zip(weights, means, rhos)]
    return MixtureSpec(comps, name=f"setting{setting_id}")


def sample_mixture(spec, n, seed=0, with_labels=True):
    """i.i.d. draws; t components are Gaussian draws scaled by sqrt(dof / chi2(dof))."""
    if n < 1:
        raise InvalidArguments("n must be >= 1")
    rng = np.random.default_rng(seed)
    w = np.array([c.weight for c in spec.components])
    z = rng.choice(spec.k, size=n, p=w)
    xy = np.empty((n, 2))
    for j, comp in enumerate(spec.components):
        m = z == j
        nj = int(m.sum())
        chol = np.linalg.cholesky(np.array(comp.shape))
        draw = rng.standard_normal((nj, 2)) @ chol.T
        if comp.family is Family.STUDENT_T:
            draw /= np.sqrt(rng.chisquare(comp.dof, size=nj) / comp.dof)[:, None]
        xy[m] = draw + np.array(comp.mean)
    return BivariateSample(xy[:, 0], xy[:, 1], z + 1 if with_labels else None)


def population_rho2_gs(spec):
    return math.fsum(c.weight * c.rho ** 2 for c in spec.components)


def population_components(spec):
    """Exact component statistics (weights, correlations, standardized moments)."""
    comps = []
    for c in spec.components:
        rho = c.rho
        kf = c.kurtosis_factor
        scale = 1.0 if c.family is Family.GAUSSIAN else c.dof / (c.dof - 2)
        moments = {key: math.nan for key in MOMENT_ORDERS}
        moments.update({(0, 0): 1.0, (1, 0): 0.0, (0, 1): 0.0, (2, 0): 1.0, (0, 2): 1.0,
                        (1, 1): rho, (3, 0): 0.0, (0, 3): 0.0, (2, 1): 0.0, (1, 2): 0.0,
                        (4, 0): 3 * kf, (0, 4): 3 * kf, (3, 1): 3 * rho * kf,
                        (1, 3): 3 * rho * kf, (2, 2): (1 + 2 * rho * rho) * kf})
        s = c.shape
        comps.append(ComponentSummary(n=0, mean_x=c.mean[0], mean_y=c.mean[1],
                                      var_x=scale * s[0][0], var_y=scale * s[1][1],
                                      cov_xy=scale * s[0][1], rho2=rho * rho,
                                      std_moments=moments, weight=c.weight))
    return comps


def population_gu_estimate(spec, big_n=10000, k=None, seed=0, config=KlinesConfig()):
    """r2_gu on one large sample, the Monte-Carlo stand-in for the population value."""
    if big_n < 10000:
        raise InvalidArguments("the Monte-Carlo population target needs big_n >= 10000")
    k = spec.k if k is None else k
    ss = np.random.SeedSequence(int(seed))
    s_sample, s_fit = (int(c.generate_state(1, dtype=np.uint64)[0]) for c in ss.spawn(2))
    sample = sample_mixture(spec, big_n, s_sample, with_labels=False)
    return r2_gu(sample, k, config.with_seed(s_fit))


def population_rho2_gu_mc(spec, big_n=10000, k=None, seed=0, config=KlinesConfig()):
    return population_gu_estimate(spec, big_n, k, seed, config).value


@dataclass
class CoverageReport:
    setting_id: str
    n: int
    reps: int
    scenario: str
    method: str
    coverage: float
    target: float
    covered: int
    failures: int = 0
    k_mode: str = "true"
    mean_width: float = math.nan

    def to_dict(self):
        return dict(self.__dict__)


METHODS = ("asymp", "p1", "p2", "bootstrap")


def _true_variance(spec, scenario, pop_estimate):
    if scenario is Scenario.SPECIFIED:
        comps = population_components(spec)
        if spec.all_gaussian:
            return asy_var_gaussian([c.weight for c in comps], [c.rho2 for c in comps])
        return asy_var_general(comps)
    if spec.all_gaussian:
        return asy_var_gaussian(pop_estimate.weights, pop_estimate.rho2s)
    return asy_var_general(pop_estimate.components)


def coverage_experiment(setting, n, reps=1000, scenario=Scenario.SPECIFIED,
                        methods=("asymp", "p1"), seed=0, config=KlinesConfig(),
                        k_mode="true", k_max=10, bootstrap_b=200, level=0.95,
                        big_n=10000, threads=1):
    """Coverage of nominal-`level` intervals over `reps` simulated samples.

    `setting` is a built-in id or a MixtureSpec. `methods` holds names from
    METHODS or callables (estimate, sample) -> (lower, upper). The unspecified
    target and its true asymptotic variance come from one r2_gu fit on a
    sample of size `big_n`.
    """
    scenario = Scenario(scenario)
    if reps < 100:
        raise InvalidArguments("coverage experiments need reps >= 100")
    spec = setting if isinstance(setting, MixtureSpec) else builtin_setting(setting)
    setting_id = str(setting) if not isinstance(setting, MixtureSpec) else spec.name
    names = []
    for m in methods:
        if callable(m):
            names.append(getattr(m, "__name__", "custom"))
        elif m.lower() in METHODS:
            names.append(m.lower())
        else:
            raise InvalidArguments(f"unknown coverage method {m!r}")

    pop = None
    if scenario is Scenario.SPECIFIED:
        target = population_rho2_gs(spec)
    else:
        pop_seed = int(np.random.SeedSequence([int(seed), 1]).generate_state(1, np.uint64)[0])
        pop = population_gu_estimate(spec, big_n, spec.k, pop_seed, config)
        target = pop.value
    true_var = _true_variance(spec, scenario, pop) if "asymp" in names else None
    boot_mode = BootstrapMode.PARAMETRIC if spec.all_gaussian else BootstrapMode.NONPARAMETRIC

    def replicate(rep_seed):
        rng = np.random.default_rng(rep_seed)
        s_sample, s_fit, s_boot = (int(v) for v in rng.integers(2 ** 63, size=3))
        sample = sample_mixture(spec, n, s_sample, with_labels=True)
        try:
            if scenario is Scenario.SPECIFIED:
                est = r2_gs(sample)
            else:
                cfg = config.with_seed(s_fit)
                pts = (sample.x, sample.y)
                k = spec.k if k_mode == "true" else select_k_aic(pts, k_max, cfg)
                est = r2_gu(pts, k, cfg)
        except GpcsError:
            return None
        out = []
        for m, name in zip(methods, names):
            try:
                if callable(m):
                    lo, hi = m(est, sample)
                elif name == "asymp":
                    ci = normal_ci(est.value, true_var, n, level,
                                   method=CiMethod.PLUGIN_ASYMPTOTIC)
                    lo, hi = ci.lower, ci.upper
                elif name in ("p1", "p2"):
                    variant = (VarianceVariant.GAUSSIAN_CLOSED_FORM if name == "p1"
                               else VarianceVariant.GENERAL_MOMENTS)
                    ci = plugin_ci(est, n, level, variant)
                    lo, hi = ci.lower, ci.upper
                else:
                    src = sample if scenario is Scenario.SPECIFIED else \
                        BivariateSample(sample.x, sample.y)
                    ci = bootstrap_ci(src, bootstrap_b, boot_mode, level, s_boot, k=est.k,
                                      config=config, estimate=est)
                    lo, hi = ci.lower, ci.upper
                out.append((lo, hi))
            except GpcsError:
                out.append(None)
        return out

    results = parallel_map(replicate, spawn_seeds(seed, reps), threads)
    reports = []
    for j, name in enumerate(names):
        covered, widths, failures = 0, [], 0
        for res in results:
            if res is None or res[j] is None:
                failures += 1
                continue
            lo, hi = res[j]
            covered += lo <= target <= hi
            widths.append(hi - lo)
        reports.append(CoverageReport(
            setting_id=setting_id, n=n, reps=reps, scenario=scenario.value, method=name,
            coverage=covered / reps, target=target, covered=covered, failures=failures,
            k_mode=k_mode, mean_width=float(np.mean(widths)) if widths else math.nan))
    return reports


def standardized_replicates(setting, n, reps=1000, seed=0):
    """sqrt(n) (R2_GS - rho2_GS) / sqrt(V) over `reps` labelled samples, V the true variance."""
    spec = setting if isinstance(setting, MixtureSpec) else builtin_setting(setting)
    target = population_rho2_gs(spec)
    var = _true_variance(spec, Scenario.SPECIFIED, None)
    vals = [r2_gs(sample_mixture(spec, n, s)).value for s in spawn_seeds(seed, reps)]
    return math.sqrt(n) * (np.array(vals) - target) / math.sqrt(var)
