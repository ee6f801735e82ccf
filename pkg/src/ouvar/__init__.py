"""Numerical toolkit for the one-dimensional Ornstein-Uhlenbeck semigroup.

Closed-form Mehler kernel evaluation, rho-variation seminorms of sampled
paths, the local/global decomposition of the semigroup, the adapted
partition of the line, the localized-operator machinery, and an
experiment harness that estimates weak-type distribution constants.
"""

from ouvar.varnorm import SampledPath, variation, variation_bruteforce, variation_split
from ouvar.oukernel import (
    DiscreteMeasure,
    GaussianMeasure,
    dt_polynomial,
    mehler,
    mehler_dt,
    semigroup_apply,
    semigroup_density,
)
from ouvar.decomp import eta, eta_prime, global_apply, local_apply
from ouvar.partition import Partition, build_partition
from ouvar.localized import LocalizedGeometry, critical_times
from ouvar.harness import TimeGrid, ExperimentReport

__all__ = [
    "SampledPath",
    "variation",
    "variation_bruteforce",
    "variation_split",
    "GaussianMeasure",
    "DiscreteMeasure",
    "mehler",
    "mehler_dt",
    "dt_polynomial",
    "semigroup_apply",
    "semigroup_density",
    "eta",
    "eta_prime",
    "local_apply",
    "global_apply",
    "Partition",
    "build_partition",
    "LocalizedGeometry",
    "critical_times",
    "TimeGrid",
    "ExperimentReport",
]

__version__ = "0.1.0"
