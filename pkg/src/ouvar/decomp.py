"""Local/global splitting of the semigroup by a smooth cutoff.

The cutoff eta is 1 on (0, 1/2], 0 on [1, inf) and in between follows
the quintic smoothstep, which is C^2 at both junctions.  The local part
of the semigroup keeps the kernel mass with (1+|x|)|x-u| < 1, the
global part the rest; they add back to the full semigroup exactly.
"""

from __future__ import annotations

import numpy as np

from ouvar.oukernel import DiscreteMeasure, mehler, _check_t
from ouvar.varnorm import variation

__all__ = [
    "eta",
    "eta_prime",
    "local_apply",
    "global_apply",
    "global_variation_bound",
]


def _check_nonneg(y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if np.any(y < 0.0):
        raise ValueError("eta is defined on [0, inf)")
    return y


def eta(y):
    """Smooth cutoff: 1 on [0, 1/2], 0 on [1, inf), quintic smoothstep between."""
    y = _check_nonneg(y)
    z = np.clip(2.0 * y - 1.0, 0.0, 1.0)
    ramp = z * z * z * (z * (6.0 * z - 15.0) + 10.0)
    out = 1.0 - ramp
    if out.ndim == 0:
        return float(out)
    return out


def eta_prime(y):
    """Derivative of the cutoff; nonpositive, supported in [1/2, 1]."""
    y = _check_nonneg(y)
    z = 2.0 * y - 1.0
    inside = (z > 0.0) & (z < 1.0)
    z = np.where(inside, z, 0.0)
    out = np.where(inside, -60.0 * z * z * (z - 1.0) * (z - 1.0), 0.0)
    if out.ndim == 0:
        return float(out)
    return out


def _weighted_kernel_sum(f: DiscreteMeasure, t, x, cutoff) -> np.ndarray:
    t = _check_t(t)
    x = np.asarray(x, dtype=float)
    out = np.zeros(np.broadcast(t, x).shape)
    absx = np.abs(x)
    for loc, w in zip(f.locations, f.weights):
        factor = cutoff((1.0 + absx) * np.abs(x - loc))
        if np.all(factor == 0.0):
            continue
        out += w * factor * mehler(t, x, loc)
    return out


def local_apply(f: DiscreteMeasure, t, x):
    """Local part: kernel sum damped by eta((1+|x|)|x-u|)."""
    out = _weighted_kernel_sum(f, t, x, eta)
    return float(out) if out.ndim == 0 else out


def global_apply(f: DiscreteMeasure, t, x):
    """Global part: kernel sum damped by 1 - eta((1+|x|)|x-u|)."""
    out = _weighted_kernel_sum(f, t, x, lambda y: 1.0 - np.asarray(eta(y)))
    return float(out) if out.ndim == 0 else out


def global_variation_bound(f: DiscreteMeasure, x: float, grid) -> float:
    """Total (rho=1) variation of t -> global part at x over a time grid.

    The grid must lie in (0, 1].  The caller compares the value against
    the calibrated envelope const * e^(x^2/2) (1+|x|) * |f|.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("empty time grid")
    if np.any(grid <= 0.0) or np.any(grid > 1.0):
        raise ValueError("grid must lie in (0, 1]")
    path = global_apply(f, grid, float(x))
    return variation(np.asarray(path), 1.0)
