"""Planar geometry, major-axis regression and per-component statistics.

All variances and covariances use the divide-by-n convention, so small
samples give slightly different values than Bessel-corrected estimators.
"""
import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .errors import DegenerateCluster, DimensionMismatch, EigenTieWarning, ValidationError

NORM_TOL = 1e-12
TIE_TOL = 1e-12

# (c, d) exponent pairs with c + d <= 4
MOMENT_ORDERS = tuple((c, d) for total in range(5) for c in range(total, -1, -1)
                      for d in [total - c])


class BivariatePoint(NamedTuple):
    x: float
    y: float


@dataclass(frozen=True)
class BivariateSample:
    """Paired observations with optional integer line-membership labels."""

    x: np.ndarray
    y: np.ndarray
    labels: Optional[np.ndarray] = None

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).ravel()
        y = np.asarray(self.y, dtype=float).ravel()
        if x.shape != y.shape:
            raise DimensionMismatch(f"x has {x.size} values but y has {y.size}")
        if x.size < 1:
            raise ValidationError("a sample needs at least one point")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValidationError("sample contains NaN or infinite coordinates")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        if self.labels is not None:
            labels = np.asarray(self.labels)
            if labels.shape != x.shape:
                raise DimensionMismatch("labels must align with points")
            if not np.issubdtype(labels.dtype, np.integer):
                if not np.all(np.equal(np.mod(labels, 1), 0)):
                    raise ValidationError("labels must be integers")
                labels = labels.astype(np.int64)
            if labels.size and labels.min() < 1:
                raise ValidationError("labels must be integers >= 1")
            object.__setattr__(self, "labels", labels)

    @classmethod
    def from_points(cls, points, labels=None):
        arr = np.asarray(points, dtype=float).reshape(-1, 2)
        return cls(arr[:, 0], arr[:, 1], labels)

    @property
    def n(self):
        return self.x.size

    def swapped(self):
        return BivariateSample(self.y, self.x, self.labels)

    def points(self):
        return [BivariatePoint(float(a), float(b)) for a, b in zip(self.x, self.y)]


def as_xy(points):
    """Coerce a sample, an (n, 2) array or a list of points to validated x, y arrays."""
    if isinstance(points, BivariateSample):
        return points.x, points.y
    if isinstance(points, tuple) and len(points) == 2 and np.ndim(points[0]) == 1:
        s = BivariateSample(points[0], points[1])
    else:
        s = BivariateSample.from_points(points)
    return s.x, s.y


@dataclass(frozen=True)
class Line:
    """The line a*x + b*y + c = 0 with a**2 + b**2 = 1 and a > 0 (or a == 0, b > 0)."""

    a: float
    b: float
    c: float

    def __post_init__(self):
        a, b, c = float(self.a), float(self.b), float(self.c)
        if not all(map(math.isfinite, (a, b, c))):
            raise ValidationError("line coefficients must be finite")
        if abs(a * a + b * b - 1.0) > NORM_TOL:
            raise ValidationError(
                f"line ({a}, {b}, {c}) is not normalized; use Line.from_coefficients")
        if a < 0 or (a == 0 and b < 0):
            a, b, c = -a, -b, -c
        object.__setattr__(self, "a", a + 0.0)
        object.__setattr__(self, "b", b + 0.0)
        object.__setattr__(self, "c", c + 0.0)

    @classmethod
    def from_coefficients(cls, a, b, c):
        norm = math.hypot(a, b)
        if norm == 0 or not math.isfinite(norm):
            raise ValidationError("a and b cannot both be zero")
        return cls(a / norm, b / norm, c / norm)

    @classmethod
    def through(cls, point, direction):
        """Line through `point` along `direction`."""
        dx, dy = direction
        px, py = point
        return cls.from_coefficients(dy, -dx, -dy * px + dx * py)

    def normalized(self):
        return Line.from_coefficients(self.a, self.b, self.c)

    def reflected(self):
        """Image of the line under the swap (x, y) -> (y, x)."""
        return Line(self.b, self.a, self.c)

    def as_tuple(self):
        return (self.a, self.b, self.c)


def perp_distance(p, line):
    """Perpendicular distance from point(s) to a normalized line.

    `p` may be a single (x, y) pair or an (n, 2) array; the result follows suit.
    """
    arr = np.asarray(p, dtype=float)
    if arr.ndim == 1:
        return abs(line.a * arr[0] + line.b * arr[1] + line.c)
    return np.abs(line.a * arr[:, 0] + line.b * arr[:, 1] + line.c)


def principal_angle(sxx, syy, sxy):
    """Angle of the leading eigenvector of [[sxx, sxy], [sxy, syy]].

    Closed form, elementwise over arrays. An exact eigenvalue tie gives 0,
    i.e. the direction (1, 0).
    """
    return 0.5 * np.arctan2(2.0 * sxy, sxx - syy)


def eigenvalues_2x2(sxx, syy, sxy):
    """(larger, smaller) eigenvalues of a symmetric 2x2 matrix via trace/determinant."""
    half_trace = 0.5 * (sxx + syy)
    radius = np.hypot(0.5 * (sxx - syy), sxy)
    return half_trace + radius, half_trace - radius


def _centered_moments(x, y):
    mx, my = x.mean(), y.mean()
    dx, dy = x - mx, y - my
    return mx, my, np.mean(dx * dx), np.mean(dy * dy), np.mean(dx * dy)


def major_axis_line(points):
    """Line through the mean along the leading principal axis (total least squares).

    Warns with EigenTieWarning when the covariance eigenvalues coincide; the
    direction (1, 0) is then used.
    """
    x, y = as_xy(points)
    if x.size < 2:
        raise DegenerateCluster("major-axis fit needs at least 2 points")
    mx, my, sxx, syy, sxy = _centered_moments(x, y)
    if sxx == 0 and syy == 0:
        raise DegenerateCluster("all points are identical")
    lam1, lam2 = eigenvalues_2x2(sxx, syy, sxy)
    if lam1 - lam2 <= TIE_TOL * max(lam1, 1.0):
        warnings.warn("covariance eigenvalues tie; using direction (1, 0)",
                      EigenTieWarning, stacklevel=2)
        theta = 0.0
    else:
        theta = float(principal_angle(sxx, syy, sxy))
    return Line.through((mx, my), (math.cos(theta), math.sin(theta)))


def sum_sq_perp(points, line):
    x, y = as_xy(points)
    return float(np.sum((line.a * x + line.b * y + line.c) ** 2))


@dataclass
class ComponentSummary:
    """Plug-in statistics of one line component.

    `rho2` is the squared Pearson correlation (0 when either variance is 0 or
    n < 2). `std_moments[(c, d)]` is the mean of u**c * v**d over the
    standardized coordinates u, v; it holds NaN where standardization is
    undefined.
    """

    n: int
    mean_x: float
    mean_y: float
    var_x: float
    var_y: float
    cov_xy: float
    rho2: float
    std_moments: dict = field(default_factory=dict)
    weight: Optional[float] = None

    @property
    def rho(self):
        """Signed correlation, 0 for degenerate components."""
        r = self.std_moments.get((1, 1), math.nan)
        return 0.0 if math.isnan(r) else r

    def to_dict(self):
        return {
            "n": self.n,
            "weight": self.weight,
            "mean_x": self.mean_x,
            "mean_y": self.mean_y,
            "var_x": self.var_x,
            "var_y": self.var_y,
            "cov_xy": self.cov_xy,
            "rho2": self.rho2,
            "std_moments": {f"{c},{d}": (None if math.isnan(v) else v)
                            for (c, d), v in self.std_moments.items()},
        }

    @classmethod
    def from_dict(cls, d):
        moments = {tuple(int(t) for t in k.split(",")): (math.nan if v is None else v)
                   for k, v in d.get("std_moments", {}).items()}
        return cls(n=d["n"], mean_x=d["mean_x"], mean_y=d["mean_y"], var_x=d["var_x"],
                   var_y=d["var_y"], cov_xy=d["cov_xy"], rho2=d["rho2"],
                   std_moments=moments, weight=d.get("weight"))


def component_summary(points):
    x, y = as_xy(points)
    n = x.size
    mx, my, vx, vy, cxy = _centered_moments(x, y)
    if n >= 2 and vx > 0 and vy > 0:
        rho2 = min(cxy * cxy / (vx * vy), 1.0)
        u = (x - mx) / math.sqrt(vx)
        v = (y - my) / math.sqrt(vy)
        moments = {(c, d): float(np.mean(u ** c * v ** d)) for c, d in MOMENT_ORDERS}
        # exact by construction; pin away rounding noise
        moments[(0, 0)] = 1.0
        moments[(1, 0)] = moments[(0, 1)] = 0.0
        moments[(2, 0)] = moments[(0, 2)] = 1.0
        moments[(1, 1)] = max(-1.0, min(1.0, cxy / math.sqrt(vx * vy)))
    else:
        rho2 = 0.0
        moments = {(c, d): math.nan for c, d in MOMENT_ORDERS}
    return ComponentSummary(n=n, mean_x=float(mx), mean_y=float(my), var_x=float(vx),
                            var_y=float(vy), cov_xy=float(cxy), rho2=float(rho2),
                            std_moments=moments)
