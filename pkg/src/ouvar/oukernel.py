"""Mehler kernel, its time derivative, and Gaussian-measure quadrature.

All kernel evaluations broadcast over numpy arrays.  The kernel is
computed through a single combined exponent, which keeps it finite and
accurate for very small times and for arguments far in the Gaussian
tail, where the naive product of exp factors would overflow.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad
from scipy.special import roots_hermitenorm

__all__ = [
    "GaussianMeasure",
    "DiscreteMeasure",
    "mehler",
    "mehler_dt",
    "dt_polynomial",
    "semigroup_apply",
    "semigroup_density",
    "gauss_hermite_rule",
    "gaussian_expectation",
    "kernel_window",
]

SQRT_TWO_PI = float(np.sqrt(2.0 * np.pi))


class GaussianMeasure:
    """The standard normal probability measure on the line."""

    @staticmethod
    def density(u):
        u = np.asarray(u, dtype=float)
        return np.exp(-0.5 * u * u) / SQRT_TWO_PI

    @staticmethod
    def R(u):
        """Quadratic exponent u^2/2; the density is e^(-R)/sqrt(2*pi)."""
        u = np.asarray(u, dtype=float)
        return 0.5 * u * u


@dataclass(frozen=True)
class DiscreteMeasure:
    """Finite signed measure given by (location, weight) atoms.

    Duplicate locations are merged on construction.  Used to feed the
    semigroup with atomic test inputs, for which the integral against
    the kernel is a finite sum and therefore exact.
    """

    locations: np.ndarray
    weights: np.ndarray

    def __init__(self, locations, weights):
        locations = np.atleast_1d(np.asarray(locations, dtype=float))
        weights = np.atleast_1d(np.asarray(weights, dtype=float))
        if locations.shape != weights.shape or locations.ndim != 1:
            raise ValueError("locations and weights must be equal-length 1-d sequences")
        if locations.size and not (
            np.all(np.isfinite(locations)) and np.all(np.isfinite(weights))
        ):
            raise ValueError("atoms must be finite")
        uniq, inv = np.unique(locations, return_inverse=True)
        merged = np.zeros_like(uniq)
        np.add.at(merged, inv, weights)
        object.__setattr__(self, "locations", uniq)
        object.__setattr__(self, "weights", merged)

    @classmethod
    def point_mass(cls, location: float, weight: float = 1.0) -> "DiscreteMeasure":
        return cls([location], [weight])

    @classmethod
    def empty(cls) -> "DiscreteMeasure":
        return cls(np.empty(0), np.empty(0))

    @classmethod
    def from_text(cls, text: str) -> "DiscreteMeasure":
        """Parse whitespace-separated `location weight` lines, # comments allowed."""
        locs, ws = [], []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"line {lineno}: expected 'location weight', got {raw!r}")
            try:
                locs.append(float(parts[0]))
                ws.append(float(parts[1]))
            except ValueError as exc:
                raise ValueError(f"line {lineno}: {exc}") from None
        return cls(np.asarray(locs), np.asarray(ws))

    @property
    def l1_norm(self) -> float:
        return float(np.sum(np.abs(self.weights)))

    @property
    def total(self) -> float:
        return float(np.sum(self.weights))

    def __len__(self) -> int:
        return int(self.locations.size)

    def normalized(self) -> "DiscreteMeasure":
        norm = self.l1_norm
        if norm == 0.0:
            raise ValueError("cannot normalize a measure with zero total variation")
        return DiscreteMeasure(self.locations, self.weights / norm)


def _check_t(t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0.0):
        raise ValueError("t must be strictly positive")
    return t


def mehler(t, x, u):
    """Kernel of the Ornstein-Uhlenbeck semigroup relative to the Gaussian measure.

    mehler(t, x, u) = e^(x^2/2) (1-e^(-2t))^(-1/2)
                      exp(-(e^(-t) u - x)^2 / (2 (1-e^(-2t)))),
    evaluated stably as exp of the combined (symmetric) exponent.
    """
    t = _check_t(t)
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    q = np.exp(-t)
    s2 = -np.expm1(-2.0 * t)
    expo = (2.0 * q * u * x - q * q * (x * x + u * u)) / (2.0 * s2)
    return np.exp(expo) / np.sqrt(s2)


def mehler_dt(t, x, u):
    """Time derivative of the kernel.

    Equals the kernel times
    -e^(-2t)/(1-e^(-2t)) + e^(-2t)(e^(-t)u - x)^2/(1-e^(-2t))^2
    + e^(-t) u (e^(-t)u - x)/(1-e^(-2t)).
    """
    t = _check_t(t)
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    q = np.exp(-t)
    s2 = -np.expm1(-2.0 * t)
    y = q * u - x
    bracket = -q * q / s2 + q * q * y * y / (s2 * s2) + q * u * y / s2
    return mehler(t, x, u) * bracket


def dt_polynomial(x: float, u: float) -> np.ndarray:
    """Coefficients (ascending, length 5) of the polynomial P in w = e^(-t)
    with  mehler_dt = mehler * P(w) / (1 - w^2)^2.

    P(w) = w^4 - u x w^3 + (x^2 + u^2 - 1) w^2 - u x w.
    """
    x = float(x)
    u = float(u)
    return np.array([0.0, -u * x, x * x + u * u - 1.0, -u * x, 1.0])


def semigroup_apply(f: DiscreteMeasure, t, x):
    """Semigroup applied to an atomic input: sum of weight * mehler(t, x, atom).

    Exact for discrete measures; broadcasts over t and x.
    """
    t = _check_t(t)
    x = np.asarray(x, dtype=float)
    out = np.zeros(np.broadcast(t, x).shape)
    for loc, w in zip(f.locations, f.weights):
        out += w * mehler(t, x, loc)
    if out.ndim == 0:
        return float(out)
    return out


@lru_cache(maxsize=16)
def gauss_hermite_rule(order: int = 128) -> tuple[np.ndarray, np.ndarray]:
    """Quadrature nodes and weights for the standard normal measure.

    Probabilists' Gauss-Hermite rule; the weights sum to 1.
    """
    if order < 1:
        raise ValueError("order must be positive")
    nodes, weights = roots_hermitenorm(int(order))
    return nodes, weights / SQRT_TWO_PI


def semigroup_density(values, t, x, rule: tuple[np.ndarray, np.ndarray] | None = None):
    """Quadrature approximation of the semigroup acting on a density.

    `values` are the density samples at the nodes of `rule` (default
    128-point Gauss-Hermite for the Gaussian measure).
    """
    t = _check_t(t)
    if rule is None:
        rule = gauss_hermite_rule(128)
    nodes, weights = rule
    values = np.asarray(values, dtype=float)
    if values.shape != nodes.shape:
        raise ValueError(
            f"got {values.shape[0] if values.ndim else 0} density samples "
            f"for a {nodes.shape[0]}-node rule"
        )
    x = np.asarray(x, dtype=float)
    if x.ndim == 0 and np.asarray(t).ndim == 0:
        return float(np.sum(weights * values * mehler(t, x, nodes)))
    out = np.zeros(np.broadcast(t, x).shape)
    for node, w, fv in zip(nodes, weights, values):
        out += w * fv * mehler(t, x, node)
    return out


def kernel_window(t: float, x: float) -> tuple[float, float]:
    """Center and width (in u) of the kernel's Gaussian factor at fixed (t, x)."""
    t = float(t)
    return float(np.exp(t) * x), float(np.sqrt(np.expm1(2.0 * t)))


def gaussian_expectation(fn, window: tuple[float, float] | None = None) -> float:
    """Adaptive quadrature of fn against the standard normal measure.

    `window = (center, width)` marks a sharp feature of fn; the real
    line is then split around it so the adaptive rule cannot miss it.
    """
    integrand = lambda u: fn(u) * np.exp(-0.5 * u * u) / SQRT_TWO_PI
    if window is None:
        return quad(integrand, -np.inf, np.inf, limit=200)[0]
    center, width = window
    a = center - 60.0 * width
    b = center + 60.0 * width
    total = quad(integrand, -np.inf, a, limit=200)[0]
    total += quad(integrand, a, b, limit=400)[0]
    total += quad(integrand, b, np.inf, limit=200)[0]
    return total
