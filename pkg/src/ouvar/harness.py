"""Experiment harness: variation operators over time grids and their
empirical distribution functions under the Gaussian (or Lebesgue) measure.

The central quantity is V(x) = rho-variation of t -> semigroup output at
x over a time grid, a lower bound of the continuous-time seminorm that
converges under grid refinement.  Reports collect the distribution
gamma{V > alpha} on a log-spaced alpha grid together with the weak-type
products alpha * gamma and alpha * sqrt(log alpha) * gamma.
"""

from __future__ import annotations

import csv
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.integrate import quad
from scipy.special import erfc

from ouvar.localized import hloc_apply
from ouvar.oukernel import (
    SQRT_TWO_PI,
    DiscreteMeasure,
    gauss_hermite_rule,
    mehler,
    mehler_dt,
)
from ouvar.partition import Partition
from ouvar.varnorm import variation_pruned

__all__ = [
    "TimeGrid",
    "ExperimentReport",
    "default_alphas",
    "variation_operator",
    "variation_profile",
    "semigroup_paths",
    "hloc_paths",
    "distribution",
    "large_time_distribution",
    "local_distribution",
    "refinement_study",
    "gaussian_tail",
    "gaussian_tail_quad",
    "tail_time_horizon",
]


@dataclass(frozen=True)
class TimeGrid:
    """Strictly increasing evaluation times in (0, inf)."""

    points: np.ndarray
    t_min: float | None = None
    t_max: float | None = None
    n: int | None = None

    def __init__(self, points, t_min=None, t_max=None, n=None):
        points = np.asarray(points, dtype=float)
        if points.ndim != 1 or points.size < 2:
            raise ValueError("a time grid needs at least two points")
        if points[0] <= 0.0 or not np.all(np.diff(points) > 0):
            raise ValueError("grid points must be positive and strictly increasing")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "t_min", t_min)
        object.__setattr__(self, "t_max", t_max)
        object.__setattr__(self, "n", n)

    @classmethod
    def geometric(cls, t_min: float, t_max: float, n: int) -> "TimeGrid":
        if t_min <= 0.0 or t_max <= t_min:
            raise ValueError("need 0 < t_min < t_max")
        if n < 2:
            raise ValueError("need at least two points")
        return cls(np.geomspace(t_min, t_max, int(n)), t_min, t_max, int(n))

    def refined(self) -> "TimeGrid":
        """Geometric grid with doubled density; contains the original points."""
        if self.t_min is None:
            raise ValueError("only generated geometric grids can be refined")
        return TimeGrid.geometric(self.t_min, self.t_max, 2 * self.n - 1)

    def union(self, other: "TimeGrid") -> "TimeGrid":
        return TimeGrid(np.unique(np.concatenate((self.points, other.points))))

    def __len__(self) -> int:
        return int(self.points.size)


def default_small_grid(n: int = 512) -> TimeGrid:
    return TimeGrid.geometric(1e-6, 1.0, n)


def default_large_grid(n: int = 256, t_max: float = 20.0) -> TimeGrid:
    return TimeGrid.geometric(1.0, t_max, n)


def default_alphas(lo: float = 1e-2, hi: float = 1e6, per_decade: int = 64) -> np.ndarray:
    decades = math.log10(hi / lo)
    return np.geomspace(lo, hi, int(round(per_decade * decades)) + 1)


@dataclass
class ExperimentReport:
    """Distribution-function samples of a variation operator.

    `measures` holds mass{V > alpha} for each alpha; nonincreasing and
    bounded by `total_mass` (1 for probability reports).  `constants`
    carries the extracted envelope numbers, `refinement` any grid
    doubling diagnostics.
    """

    alphas: np.ndarray
    measures: np.ndarray
    total_mass: float = 1.0
    label: str = ""
    constants: dict = field(default_factory=dict)
    refinement: dict = field(default_factory=dict)

    def __post_init__(self):
        self.alphas = np.asarray(self.alphas, dtype=float)
        self.measures = np.asarray(self.measures, dtype=float)
        if self.alphas.shape != self.measures.shape:
            raise ValueError("alphas and measures must align")
        if np.any(self.measures < 0.0) or np.any(self.measures > self.total_mass * (1 + 1e-12)):
            raise ValueError("measures must lie in [0, total_mass]")
        if np.any(np.diff(self.measures) > 1e-12 * self.total_mass):
            raise ValueError("measures must be nonincreasing in alpha")

    @property
    def products_plain(self) -> np.ndarray:
        return self.alphas * self.measures

    @property
    def products_enhanced(self) -> np.ndarray:
        with np.errstate(invalid="ignore"):
            boost = np.sqrt(np.log(np.maximum(self.alphas, 1.0)))
        return self.alphas * boost * self.measures

    def weak_type_constant(self) -> float:
        return float(np.max(self.products_plain))

    def enhanced_constant(self, alpha_lo: float = 2.0, alpha_hi: float = 1e4) -> float:
        mask = (self.alphas >= alpha_lo) & (self.alphas <= alpha_hi)
        return float(np.max(self.products_enhanced[mask]))

    def loglog_slope(self, alpha_lo: float = 2.0, alpha_hi: float = 1e4) -> float:
        """Least-squares slope of log measure against log alpha."""
        mask = (self.alphas >= alpha_lo) & (self.alphas <= alpha_hi) & (self.measures > 0)
        if np.count_nonzero(mask) < 2:
            raise ValueError("not enough positive-measure points for a slope fit")
        return float(
            np.polyfit(np.log(self.alphas[mask]), np.log(self.measures[mask]), 1)[0]
        )

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["alpha", "measure", "alpha_times_measure", "alpha_sqrtlog_times_measure"])
            for a, m, p, e in zip(
                self.alphas, self.measures, self.products_plain, self.products_enhanced
            ):
                writer.writerow([f"{a:.12g}", f"{m:.12g}", f"{p:.12g}", f"{e:.12g}"])

    def summary(self) -> dict:
        return {
            "label": self.label,
            "total_mass": self.total_mass,
            "constants": self.constants,
            "refinement": self.refinement,
        }


def semigroup_paths(f: DiscreteMeasure, grid: TimeGrid, x_nodes) -> np.ndarray:
    """Matrix of semigroup outputs, one row per x node, one column per time."""
    x = np.asarray(x_nodes, dtype=float)
    t = grid.points
    out = np.zeros((x.size, t.size))
    for loc, w in zip(f.locations, f.weights):
        out += w * mehler(t[np.newaxis, :], x[:, np.newaxis], loc)
    return out


def hloc_paths(gm: DiscreteMeasure, grid: TimeGrid, x_nodes) -> np.ndarray:
    """Like `semigroup_paths` for the Lebesgue-normalized localized operator."""
    x = np.asarray(x_nodes, dtype=float)
    return hloc_apply(gm, grid.points[np.newaxis, :], x[:, np.newaxis])


def variation_rows(paths: np.ndarray, rho: float) -> np.ndarray:
    """Row-wise rho-variation, pruned to turning points (exact)."""
    return np.array([variation_pruned(row, rho) for row in np.atleast_2d(paths)])


def variation_operator(f: DiscreteMeasure, x: float, grid: TimeGrid, rho: float) -> float:
    """rho-variation of t -> semigroup output at one point x over the grid."""
    path = semigroup_paths(f, grid, [float(x)])[0]
    return variation_pruned(path, rho)


def variation_profile(f: DiscreteMeasure, grid: TimeGrid, x_nodes, rho: float) -> np.ndarray:
    return variation_rows(semigroup_paths(f, grid, x_nodes), rho)


def _distribution_measures(values: np.ndarray, weights: np.ndarray, alphas: np.ndarray) -> np.ndarray:
    order = np.argsort(values)
    sorted_vals = values[order]
    tail = np.concatenate((np.cumsum(weights[order][::-1])[::-1], [0.0]))
    idx = np.searchsorted(sorted_vals, alphas, side="right")
    return tail[idx]


def distribution(
    f: DiscreteMeasure,
    rho: float,
    grid: TimeGrid,
    x_rule: tuple[np.ndarray, np.ndarray] | None = None,
    alphas: np.ndarray | None = None,
    label: str = "distribution",
) -> ExperimentReport:
    """Gaussian distribution function of the variation operator.

    The input measure must be normalized (unit total variation); V is
    evaluated at Gauss-Hermite nodes and gamma{V > alpha} estimated by
    the corresponding quadrature weights.
    """
    if abs(f.l1_norm - 1.0) > 1e-9:
        raise ValueError("normalize the measure first (unit total variation)")
    if x_rule is None:
        x_rule = gauss_hermite_rule(2048)
    nodes, weights = x_rule
    if alphas is None:
        alphas = default_alphas()
    values = variation_profile(f, grid, nodes, rho)
    measures = _distribution_measures(values, weights, alphas)
    report = ExperimentReport(alphas, measures, total_mass=float(np.sum(weights)), label=label)
    report.constants["weak_type"] = report.weak_type_constant()
    return report


def large_time_distribution(
    f: DiscreteMeasure,
    rho: float,
    grid: TimeGrid | None = None,
    x_rule: tuple[np.ndarray, np.ndarray] | None = None,
    alphas: np.ndarray | None = None,
    alpha_lo: float = 2.0,
    alpha_hi: float = 1e4,
    label: str = "large-time",
) -> ExperimentReport:
    """Distribution of the variation restricted to times >= 1.

    Carries the enhanced product alpha*sqrt(log alpha)*gamma, whose
    boundedness is the strengthened tail estimate.
    """
    if grid is None:
        grid = default_large_grid()
    if grid.points[0] < 1.0:
        raise ValueError("large-time grid must start at t >= 1")
    report = distribution(f, rho, grid, x_rule=x_rule, alphas=alphas, label=label)
    report.constants["enhanced"] = report.enhanced_constant(alpha_lo, alpha_hi)
    report.constants["slope"] = report.loglog_slope(alpha_lo, alpha_hi)
    return report


def local_distribution(
    gm: DiscreteMeasure,
    rho: float,
    grid: TimeGrid,
    part: Partition,
    j: int,
    n_x: int = 1024,
    alphas: np.ndarray | None = None,
) -> ExperimentReport:
    """Lebesgue weak-type report for the localized operator on one interval.

    All atoms must lie in interval j; V is sampled on an even midpoint
    grid over the enlarged interval and the level sets are measured with
    Lebesgue measure (grid spacing times count).
    """
    lo, hi = part.interval(j)
    if np.any(gm.locations < lo) or np.any(gm.locations > hi):
        raise ValueError(f"atoms must lie inside interval {j} = [{lo}, {hi}]")
    if grid.points[-1] > 1.0:
        raise ValueError("local grid must lie in (0, 1]")
    wlo, whi = part.enlarged(j)
    h = (whi - wlo) / n_x
    x_nodes = wlo + h * (np.arange(n_x) + 0.5)
    values = variation_rows(hloc_paths(gm, grid, x_nodes), rho)
    if alphas is None:
        alphas = default_alphas()
    measures = _distribution_measures(values, np.full(n_x, h), alphas)
    report = ExperimentReport(
        alphas, measures, total_mass=float(whi - wlo), label=f"local-j{j}"
    )
    report.constants["weak_type"] = report.weak_type_constant() / gm.l1_norm
    return report


def refinement_study(
    f: DiscreteMeasure,
    rho: float,
    small: TimeGrid,
    large: TimeGrid,
    x_order: int,
    alphas: np.ndarray | None = None,
) -> dict:
    """Weak-type constant at base grids and with t- and x-density doubled."""
    results = {}
    for tag, factor in (("base", 1), ("refined", 2)):
        grid = small if factor == 1 else small.refined()
        grid = grid.union(large if factor == 1 else large.refined())
        rule = gauss_hermite_rule(x_order * factor)
        rep = distribution(f, rho, grid, x_rule=rule, alphas=alphas, label=f"stability-{tag}")
        results[tag] = rep.constants["weak_type"]
    base, refined = results["base"], results["refined"]
    results["rel_change"] = abs(refined - base) / refined if refined else 0.0
    return results


def gaussian_tail(beta) -> np.ndarray:
    """Closed form for gamma{e^(x^2/2) > beta} = erfc(sqrt(log beta))."""
    beta = np.asarray(beta, dtype=float)
    out = np.where(beta <= 1.0, 1.0, erfc(np.sqrt(np.log(np.maximum(beta, 1.0)))))
    return float(out) if out.ndim == 0 else out


def gaussian_tail_quad(beta: float) -> float:
    """Same tail mass by direct quadrature of the normal density."""
    if beta <= 1.0:
        return 1.0
    r = math.sqrt(2.0 * math.log(beta))
    return 2.0 * quad(lambda v: math.exp(-0.5 * v * v) / SQRT_TWO_PI, r, np.inf)[0]


def tail_time_horizon(u_max: float, envelope_const: float, tol: float = 1e-6) -> float:
    """Smallest T with envelope_const*(e^(-T) u_max + e^(-2T)/2) < tol.

    Closed-form tail of the integrable envelope of |d/dt kernel| for
    t >= 1; used to pick the upper end of large-time grids.
    """
    if u_max < 0 or envelope_const <= 0 or tol <= 0:
        raise ValueError("u_max >= 0, envelope_const > 0, tol > 0 required")
    target = tol / envelope_const
    # e^(-T) u + e^(-2T)/2 = target; solve the quadratic in e^(-T).
    e = -u_max + math.sqrt(u_max * u_max + 2.0 * target)
    return max(1.0, -math.log(e))


def dt_integral(t_lo: float, t_hi: float, x: float, u: float) -> float:
    """Adaptive quadrature of |d/dt kernel| over [t_lo, t_hi]."""
    return quad(lambda t: abs(mehler_dt(t, x, u)), t_lo, t_hi, limit=400)[0]


def _write_report(report: ExperimentReport, out_dir: Path, prefix: str, echo) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"{prefix}.csv"
    json_path = out_dir / f"{prefix}.json"
    report.write_csv(csv_path)
    json_path.write_text(json.dumps(report.summary(), indent=2) + "\n")
    echo(f"wrote {csv_path} and {json_path}")
    for name, value in report.constants.items():
        echo(f"{name}={value:.12g}")


def _paper_suite(cfg, out_dir: Path, echo) -> int:
    from ouvar import calibration

    frozen = calibration.FROZEN
    checks: list[tuple[str, bool, float]] = []

    stability = calibration.sweep_weak_type()
    for u, study in stability.items():
        bound = frozen["weak_type"][u]
        checks.append((f"weak_type_u{u:g}", study["refined"] <= bound, study["refined"]))
        checks.append(
            (
                f"weak_type_stability_u{u:g}",
                study["rel_change"] < frozen["weak_type_rel_change"],
                study["rel_change"],
            )
        )
    large = calibration.sweep_large_time()
    worst_enhanced = max(large["enhanced"].values())
    worst_slope = max(large["slopes"].values())
    checks.append(("enhanced_large_t", worst_enhanced <= frozen["enhanced_large_t"], worst_enhanced))
    checks.append(
        ("slope_margin", worst_slope <= -1.0 - frozen["slope_margin_min"], worst_slope)
    )
    checks.append(("tail_ratio", large["tail_ratio_max"] <= frozen["tail_ratio_C"], large["tail_ratio_max"]))
    checks.append(("tail_quadrature", large["tail_quad_reldev"] <= 0.10, large["tail_quad_reldev"]))
    local = calibration.sweep_local_uniformity()
    spread = max(local.values()) / min(local.values())
    checks.append(("local_uniformity_factor", spread <= frozen["local_uniformity_factor"], spread))
    for j, value in local.items():
        checks.append((f"local_weak_type_j{j}", value <= frozen["local_uniformity"][j], value))

    out_dir.mkdir(parents=True, exist_ok=True)
    summary = {name: {"pass": bool(ok), "value": value} for name, ok, value in checks}
    (out_dir / f"{cfg.prefix}.json").write_text(json.dumps(summary, indent=2) + "\n")
    failed = [name for name, ok, _ in checks if not ok]
    for name, ok, value in checks:
        echo(f"{name}: {'ok' if ok else 'VIOLATED'} ({value:.6g})")
    if failed:
        echo(f"{len(failed)} envelope check(s) violated: {', '.join(failed)}")
        return 1
    return 0


def run_experiment(cfg, echo=print) -> int:
    """Run the experiment described by a parsed config; 0 means all checks hold."""
    for warning in cfg.warnings:
        print(warning, file=sys.stderr)
    out_dir = Path(cfg.out_dir)
    if cfg.kind == "paper-suite":
        return _paper_suite(cfg, out_dir, echo)

    alphas = default_alphas(cfg.alpha_min, cfg.alpha_max, cfg.alpha_per_decade)
    measure = cfg.measure
    if measure is None or len(measure) == 0:
        report = ExperimentReport(alphas, np.zeros_like(alphas), label=cfg.kind)
        report.constants["weak_type"] = 0.0
        _write_report(report, out_dir, cfg.prefix, echo)
        return 0
    if cfg.normalize:
        measure = measure.normalized()

    if cfg.kind == "distribution":
        grid = TimeGrid.geometric(cfg.t_min, cfg.t_max, cfg.t_points).union(
            TimeGrid.geometric(cfg.t_large_min, cfg.t_large_max, cfg.t_large_points)
        )
        report = distribution(
            measure, cfg.rho, grid, x_rule=gauss_hermite_rule(cfg.x_order), alphas=alphas
        )
    elif cfg.kind == "large-time":
        grid = TimeGrid.geometric(cfg.t_large_min, cfg.t_large_max, cfg.t_large_points)
        report = large_time_distribution(
            measure, cfg.rho, grid, x_rule=gauss_hermite_rule(cfg.x_order), alphas=alphas
        )
    elif cfg.kind == "local":
        from ouvar.partition import build_partition

        part = build_partition(max(cfg.local_j, 1))
        grid = TimeGrid.geometric(cfg.t_min, min(cfg.t_max, 1.0), cfg.t_points)
        report = local_distribution(
            measure, cfg.rho, grid, part, cfg.local_j, n_x=cfg.local_x_points, alphas=alphas
        )
    else:
        raise ValueError(f"unknown experiment kind {cfg.kind!r}")
    _write_report(report, out_dir, cfg.prefix, echo)
    return 0
