"""Partition of the line into intervals adapted to the local zone.

Centers obey the chain condition: the right endpoint of each interval
[x_j - 1/(1+x_j), x_j + 1/(1+x_j)] is the left endpoint of the next.
Centers grow like 2*sqrt(j) - 1; the enlarged intervals (half-width
4/(1+x_j)) have bounded overlap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Partition",
    "build_partition",
    "next_center",
    "next_center_closed_form",
]

_RESIDUAL_TOL = 1e-12


def _chain_map(y: float) -> float:
    return y - 1.0 / (1.0 + y)


def next_center(prev: float) -> float:
    """Solve y - 1/(1+y) = prev + 1/(1+prev) for the next center.

    The map y -> y - 1/(1+y) is strictly increasing, so bisection on
    (prev, prev + 2) is safe; a few Newton steps polish the root to
    about 1e-13.
    """
    target = prev + 1.0 / (1.0 + prev)
    lo, hi = prev, prev + 2.0
    while hi - lo > 1e-6:
        mid = 0.5 * (lo + hi)
        if _chain_map(mid) < target:
            lo = mid
        else:
            hi = mid
    y = 0.5 * (lo + hi)
    for _ in range(4):
        g = 1.0 + y
        step = (y - 1.0 / g - target) / (1.0 + 1.0 / (g * g))
        y -= step
        if abs(step) < 1e-15:
            break
    return y


def next_center_closed_form(prev: float) -> float:
    """Quadratic-formula solution of the same chain condition (test oracle)."""
    r = prev + 1.0 / (1.0 + prev)
    return 0.5 * ((r - 1.0) + math.sqrt(r * r + 2.0 * r + 5.0))


@dataclass(frozen=True)
class Partition:
    """Nonnegative centers x_0 = 0 < x_1 < ...; negative side by reflection."""

    points: np.ndarray

    @property
    def jmax(self) -> int:
        return int(self.points.size - 1)

    def point(self, j: int) -> float:
        if abs(j) > self.jmax:
            raise IndexError(f"index {j} outside built range (jmax={self.jmax})")
        return float(math.copysign(1.0, j) * self.points[abs(j)]) if j < 0 else float(self.points[j])

    def half_width(self, j: int) -> float:
        return 1.0 / (1.0 + abs(self.point(j)))

    def interval(self, j: int) -> tuple[float, float]:
        c = self.point(j)
        h = 1.0 / (1.0 + abs(c))
        return c - h, c + h

    def enlarged(self, j: int) -> tuple[float, float]:
        c = self.point(j)
        h = 4.0 / (1.0 + abs(c))
        return c - h, c + h

    def _boundaries(self) -> np.ndarray:
        # Left endpoints of I_{-jmax}, ..., I_{jmax}, plus the final right endpoint.
        right = self.points + 1.0 / (1.0 + self.points)
        return np.concatenate((-right[::-1], right))

    def locate(self, x):
        """Index j with x in I_j; shared endpoints go to the lower j."""
        b = self._boundaries()
        x_arr = np.asarray(x, dtype=float)
        idx = np.searchsorted(b, x_arr, side="left") - 1 - self.jmax
        if np.any(idx < -self.jmax) or np.any(idx > self.jmax):
            raise ValueError(
                "point outside the built range; rebuild with a larger jmax"
            )
        return int(idx) if x_arr.ndim == 0 else idx

    def overlap_count(self) -> int:
        """Largest number of enlarged intervals covering a single point."""
        js = np.arange(-self.jmax, self.jmax + 1)
        centers = np.sign(js) * self.points[np.abs(js)]
        half = 4.0 / (1.0 + np.abs(centers))
        lefts = np.sort(centers - half)
        rights = np.sort(centers + half)
        # The count is maximal at some left endpoint (intervals are closed).
        started = np.searchsorted(lefts, lefts, side="right")
        finished = np.searchsorted(rights, lefts, side="left")
        return int(np.max(started - finished))

    def telescope_check(self) -> tuple[float, float]:
        """(min of z_{j+1}^2 - z_j^2, max of |z_j^2 - 4 j|) with z_j = 1 + x_j."""
        z2 = (1.0 + self.points) ** 2
        increments = np.diff(z2)
        deviation = np.abs(z2 - 4.0 * np.arange(self.points.size))
        return float(increments.min()), float(deviation.max())

    def residuals(self) -> np.ndarray:
        """Chain-condition residuals |left(I_{j+1}) - right(I_j)| for all built j."""
        right = self.points[:-1] + 1.0 / (1.0 + self.points[:-1])
        left = self.points[1:] - 1.0 / (1.0 + self.points[1:])
        return np.abs(left - right)


def build_partition(jmax: int) -> Partition:
    """Build centers x_0..x_jmax by solving the chain condition stepwise."""
    if jmax < 1:
        raise ValueError("jmax must be >= 1")
    points = np.empty(jmax + 1)
    points[0] = 0.0
    y = 0.0
    for j in range(jmax):
        y = next_center(y)
        points[j + 1] = y
    part = Partition(points)
    residual = float(part.residuals().max())
    if residual > _RESIDUAL_TOL:
        raise RuntimeError(f"chain residual {residual:.3e} exceeds {_RESIDUAL_TOL}")
    gaps = np.diff(points)
    if np.any(gaps <= 0.0) or np.any(gaps >= 2.0):
        raise RuntimeError("center gaps left (0, 2)")
    return part
