"""Calibration sweeps and the envelope constants they pin down.

The inequalities this package checks hold with unspecified constants,
so each constant is measured once by the seeded sweeps below and then
frozen (with 10% slack) in FROZEN.  The test suite re-runs the sweeps
and enforces the frozen values; `ouvar experiment calibrate` reprints
the observed numbers for comparison.
"""

from __future__ import annotations

import math

import numpy as np

from ouvar.decomp import eta, global_apply
from ouvar.harness import (
    TimeGrid,
    default_large_grid,
    default_small_grid,
    gaussian_tail,
    gaussian_tail_quad,
    large_time_distribution,
    local_distribution,
    refinement_study,
)
from ouvar.localized import critical_times, f_factors, monotone_segments
from ouvar.oukernel import DiscreteMeasure, mehler, mehler_dt
from ouvar.partition import Partition, build_partition
from ouvar.varnorm import variation_pruned

__all__ = [
    "FROZEN",
    "GEOMETRY_RANGES",
    "DT_ENVELOPE_C",
    "sweep_dt_envelope",
    "sweep_global_sup",
    "sweep_global_variation",
    "sweep_zero_count",
    "measure_partition",
    "sweep_f_envelopes",
    "sweep_weak_type",
    "sweep_large_time",
    "sweep_local_uniformity",
]

# Sampling box for window geometries (x, s, sigma).
GEOMETRY_RANGES = {"x": (0.0, 8.0), "s": (0.05, 6.0), "sigma": (0.501, 0.999)}

# Gaussian decay rate fixed for the large-time derivative envelope.
DT_ENVELOPE_C = 0.25

# Observed values (seed 0) are recorded next to each frozen bound.
FROZEN = {
    "dt_envelope_C": 1.65,            # observed 1.4957 (t>=1 sweep, c=0.25)
    "global_sup_C": 0.77,             # observed 0.6978
    "global_variation_C": 7.7,        # observed 6.9781
    "dt_integral_factor": 10.0,       # zero-count argument; 5% test tolerance
    "zero_count_bound": 4,            # observed max 1
    "partition_Cz": 2.20,             # observed 1.9957 = max |z_j^2 - 4j|
    "partition_Ca": 0.55,             # observed 0.4989 = max |x_j - (2 sqrt j - 1)| sqrt j
    "overlap_Co": 6,                  # observed 5
    "f_sup_CF": 1.32,                 # observed 1.1997 = sup F/(s+1)
    "f_var_CV": 2.42,                 # observed 2.1997 = var3 F/(s+1)
    "segments_Cseg": 6,               # observed 5
    "weak_type": {                    # observed refined: see sweep_weak_type
        0.0: 1.28,
        1.0: 1.42,
        2.0: 1.72,
        4.0: 3.74,
    },
    "weak_type_rel_change": 0.05,
    "enhanced_large_t": 0.80,         # observed 0.7222 (u in {1,2,4})
    "slope_margin_min": 0.045,        # observed margin 0.0536 (worst u)
    "tail_ratio_C": 0.63,             # observed 0.5661 = max gamma * beta sqrt(log beta)
    "local_uniformity": {             # observed: see sweep_local_uniformity
        1: 1.61,
        5: 1.57,
        20: 1.56,
        100: 1.56,
    },
    "local_uniformity_factor": 3.0,
}


def _geometry_samples(n: int, rng: np.random.Generator):
    x = rng.uniform(*GEOMETRY_RANGES["x"], n)
    s = rng.uniform(*GEOMETRY_RANGES["s"], n)
    sigma = rng.uniform(*GEOMETRY_RANGES["sigma"], n)
    return x, s, sigma


def sweep_dt_envelope(n: int = 10_000, seed: int = 0, c: float = DT_ENVELOPE_C) -> float:
    """Largest ratio of |d/dt kernel| to its large-time Gaussian envelope."""
    rng = np.random.default_rng(seed)
    t = np.concatenate((rng.uniform(1.0, 60.0, n // 2), 1.0 + rng.exponential(0.5, n - n // 2)))
    x = rng.uniform(-6.0, 6.0, n)
    u = rng.uniform(-6.0, 6.0, n)
    y = np.exp(-t) * u - x
    envelope = np.exp(0.5 * x * x - c * y * y) * (np.exp(-t) * np.abs(u) + np.exp(-2.0 * t))
    return float(np.max(np.abs(mehler_dt(t, x, u)) / envelope))


def sweep_global_sup(n: int = 10_000, seed: int = 0, t_points: int = 512) -> float:
    """Largest ratio of sup_t kernel*(1-eta) to e^(x^2/2)(1+|x|), t in (0,1]."""
    rng = np.random.default_rng(seed)
    x = rng.uniform(-8.0, 8.0, n)
    offs = rng.uniform(-6.0, 6.0, n // 2)
    u = np.concatenate((x[: n // 2] + offs / (1.0 + np.abs(x[: n // 2])),
                        rng.uniform(-8.0, 8.0, n - n // 2)))
    damp = 1.0 - np.asarray(eta((1.0 + np.abs(x)) * np.abs(x - u)))
    grid = np.geomspace(1e-6, 1.0, t_points)
    sup = np.zeros(n)
    for t in grid:
        np.maximum(sup, mehler(t, x, u), out=sup)
    ratios = damp * sup / (np.exp(0.5 * x * x) * (1.0 + np.abs(x)))
    return float(np.max(ratios))


def sweep_global_variation(n: int = 200, seed: int = 0) -> float:
    """Largest ratio of the global part's total t-variation to e^(x^2/2)(1+|x|)."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        x = rng.uniform(-6.0, 6.0)
        u = x + rng.uniform(0.5, 6.0) * rng.choice([-1.0, 1.0]) / (1.0 + abs(x))
        f = DiscreteMeasure.point_mass(u)
        value, points = 0.0, 256
        while points <= 4096:
            grid = np.geomspace(1e-8, 1.0, points)
            new = variation_pruned(global_apply(f, grid, x), 1.0)
            if value and abs(new - value) <= 5e-3 * new:
                value = new
                break
            value, points = new, points * 2
        worst = max(worst, value / (math.exp(0.5 * x * x) * (1.0 + abs(x))))
    return worst


def sweep_zero_count(n: int = 10_000, seed: int = 0) -> int:
    """Largest number of interior zeros of t -> d/dt kernel on (0, 1).

    Counts real roots of the cubic cofactor of the derivative polynomial
    inside (e^(-1), 1), the image of (0, 1) under w = e^(-t).
    """
    rng = np.random.default_rng(seed)
    x = rng.uniform(-3.0, 3.0, n)
    u = rng.uniform(-3.0, 3.0, n)
    worst = 0
    lo = math.exp(-1.0)
    for xk, uk in zip(x, u):
        roots = np.roots([1.0, -uk * xk, xk * xk + uk * uk - 1.0, -uk * xk])
        count = int(np.sum((np.abs(roots.imag) < 1e-9) & (roots.real > lo) & (roots.real < 1.0)))
        worst = max(worst, count)
    return worst


def measure_partition(part: Partition) -> dict:
    """Deviation constants of the built center sequence."""
    j = np.arange(1, part.points.size)
    ca = float(np.max(np.abs(part.points[1:] - (2.0 * np.sqrt(j) - 1.0)) * np.sqrt(j)))
    min_inc, cz = part.telescope_check()
    return {
        "Ca": ca,
        "Cz": cz,
        "min_increment": min_inc,
        "overlap": part.overlap_count(),
        "max_residual": float(part.residuals().max()),
    }


def sweep_f_envelopes(n: int = 10_000, seed: int = 0, t_points: int = 512, rho: float = 3.0) -> dict:
    """Sup and rho-variation of the window factors over (0, T], per unit (s+1)."""
    rng = np.random.default_rng(seed)
    xs, ss, sigmas = _geometry_samples(n, rng)
    unit = np.geomspace(1e-6, 1.0, t_points)
    sup_ratio = var_ratio = 0.0
    seg_max = 0
    for x, s, sigma in zip(xs, ss, sigmas):
        g = critical_times(x, s, sigma)
        t = g.T_cap * unit
        fp, fm = f_factors(g, t)
        scale = s + 1.0
        sup_ratio = max(sup_ratio, float(max(fp.max(), fm.max())) / scale)
        var_ratio = max(
            var_ratio,
            max(variation_pruned(fp, rho), variation_pruned(fm, rho)) / scale,
        )
        seg_max = max(seg_max, len(monotone_segments(g)) + 1)
    return {"CF": sup_ratio, "CV": var_ratio, "segments": seg_max}


def sweep_weak_type(
    locations=(0.0, 1.0, 2.0, 4.0), rho: float = 3.0,
    t_points: int = 512, t_large_points: int = 256, x_order: int = 2048,
) -> dict:
    """Stability study of the weak-type constant for unit point masses."""
    out = {}
    for u in locations:
        f = DiscreteMeasure.point_mass(float(u))
        out[float(u)] = refinement_study(
            f, rho,
            TimeGrid.geometric(1e-6, 1.0, t_points),
            TimeGrid.geometric(1.0, 20.0, t_large_points),
            x_order,
        )
    return out


def sweep_large_time(locations=(1.0, 2.0, 4.0), rho: float = 3.0) -> dict:
    """Enhanced products, distribution slopes, and the Gaussian tail ratio."""
    enhanced, slopes = {}, {}
    for u in locations:
        rep = large_time_distribution(DiscreteMeasure.point_mass(float(u)), rho)
        enhanced[float(u)] = rep.constants["enhanced"]
        slopes[float(u)] = rep.constants["slope"]
    betas = np.geomspace(2.0, 1e6, 200)
    ratios = gaussian_tail(betas) * betas * np.sqrt(np.log(betas))
    quad_dev = max(
        abs(gaussian_tail_quad(b) / gaussian_tail(b) - 1.0) for b in np.geomspace(2.0, 1e6, 9)
    )
    return {
        "enhanced": enhanced,
        "slopes": slopes,
        "tail_ratio_max": float(ratios.max()),
        "tail_quad_reldev": float(quad_dev),
    }


def sweep_local_uniformity(
    js=(1, 5, 20, 100), rho: float = 3.0, part: Partition | None = None,
    t_points: int = 512, n_x: int = 1024,
) -> dict:
    """Lebesgue weak-type constants of the localized operator across intervals."""
    if part is None:
        part = build_partition(max(js))
    grid = default_small_grid(t_points)
    out = {}
    for j in js:
        gm = DiscreteMeasure.point_mass(part.point(j))
        rep = local_distribution(gm, rho, grid, part, j, n_x=n_x)
        out[int(j)] = rep.constants["weak_type"]
    return out
