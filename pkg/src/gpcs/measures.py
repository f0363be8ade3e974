"""Sample generalized Pearson correlation squares.

Both measures are the weighted sum over line components of the component
weight (share of points) times the component's squared Pearson correlation.
With known memberships the components come from the labels; otherwise they
come from K-lines surrogate labels (nearest fitted line).
"""
import enum
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .core import BivariateSample, ComponentSummary, as_xy, component_summary
from .errors import InsufficientData, MissingLabels
from .klines import FitResult, KlinesConfig, klines_fit, select_k_aic


class Scenario(enum.Enum):
    SPECIFIED = "specified"
    UNSPECIFIED = "unspecified"


@dataclass
class GcsEstimate:
    value: float
    scenario: Scenario
    k: int
    components: List[ComponentSummary]
    n: int
    fit: Optional[FitResult] = None
    labels: Optional[np.ndarray] = None
    label_map: dict = field(default_factory=dict)
    k_selected_by: Optional[str] = None

    @property
    def weights(self):
        return [c.weight for c in self.components]

    @property
    def rho2s(self):
        return [c.rho2 for c in self.components]

    def to_dict(self):
        return {
            "value": self.value,
            "scenario": self.scenario.value,
            "k": self.k,
            "n": self.n,
            "k_selected_by": self.k_selected_by,
            "components": [c.to_dict() for c in self.components],
            "objective": None if self.fit is None else self.fit.objective,
        }


def remap_labels(labels):
    """Map arbitrary labels to 1..K by order of first appearance."""
    mapping = {}
    out = np.empty(len(labels), dtype=np.int64)
    for i, lab in enumerate(labels):
        key = lab.item() if hasattr(lab, "item") else lab
        if key not in mapping:
            mapping[key] = len(mapping) + 1
        out[i] = mapping[key]
    return out, mapping


def weighted_components(x, y, labels, k):
    """Component summaries (with weights) for labels 1..k; empty labels are skipped."""
    n = x.size
    comps = []
    for j in range(1, k + 1):
        m = labels == j
        nk = int(m.sum())
        if nk == 0:
            continue
        cs = component_summary((x[m], y[m]))
        cs.weight = nk / n
        comps.append(cs)
    return comps


def gcs_value(components):
    return math.fsum(c.weight * c.rho2 for c in components)


def r2_gs(sample):
    """Generalized correlation square with memberships given by `sample.labels`."""
    if not isinstance(sample, BivariateSample) or sample.labels is None:
        raise MissingLabels("the specified measure needs a labelled sample")
    labels, mapping = remap_labels(sample.labels)
    k = len(mapping)
    comps = weighted_components(sample.x, sample.y, labels, k)
    return GcsEstimate(value=gcs_value(comps), scenario=Scenario.SPECIFIED, k=k,
                       components=comps, n=sample.n, labels=labels, label_map=mapping)


def estimate_from_fit(x, y, fit):
    comps = weighted_components(x, y, fit.labels, fit.k)
    return GcsEstimate(value=gcs_value(comps), scenario=Scenario.UNSPECIFIED, k=fit.k,
                       components=comps, n=x.size, fit=fit, labels=fit.labels)


def r2_gu(points, k, config=KlinesConfig()):
    """Generalized correlation square with memberships from a K-lines fit."""
    x, y = as_xy(points)
    if x.size < max(k, 2):
        raise InsufficientData(f"need at least max(K, 2) = {max(k, 2)} points")
    return estimate_from_fit(x, y, klines_fit((x, y), k, config))


def r2_gu_auto(points, k_max, config=KlinesConfig()):
    """r2_gu at the AIC-selected K."""
    x, y = as_xy(points)
    k = select_k_aic((x, y), k_max, config)
    est = r2_gu((x, y), k, config)
    est.k_selected_by = "aic"
    return est
