"""Generalized Pearson correlation squares for mixtures of linear dependences."""
from .core import (BivariatePoint, BivariateSample, ComponentSummary, Line, component_summary,
                   major_axis_line, perp_distance)
from .inference import (BootstrapMode, ConfidenceInterval, VarianceVariant, asy_var_gaussian,
                        asy_var_general, bootstrap_ci, plugin_ci)
from .klines import (EmptyClusterPolicy, FitResult, KlinesConfig, aic, assign, klines_fit,
                     objective_w, recenter, scree, select_k_aic)
from .measures import GcsEstimate, Scenario, r2_gs, r2_gu, r2_gu_auto
from .power import PatternSpec, Pattern, dcor, generate_pattern, pearson_r2, permutation_power
from .simgen import (CoverageReport, MixtureSpec, builtin_setting, coverage_experiment,
                     population_rho2_gs, population_rho2_gu_mc, sample_mixture)

__version__ = "0.1.0"
