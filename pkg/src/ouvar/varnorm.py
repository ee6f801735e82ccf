"""rho-variation seminorms of finitely sampled paths.

The seminorm of a path is the supremum, over all increasing subsequences
of the sample points, of the l^rho norm of consecutive value differences.
It is computed exactly on the sample set by an O(n^2) dynamic program;
an exponential enumeration is kept as an independent oracle.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations

import numpy as np

__all__ = [
    "SampledPath",
    "variation",
    "variation_bruteforce",
    "variation_split",
    "variation_many",
    "variation_pruned",
    "turning_points",
]

_BRUTE_FORCE_MAX = 20


def _check_rho(rho: float) -> float:
    rho = float(rho)
    if not rho >= 1.0:
        raise ValueError(f"rho must be >= 1, got {rho}")
    return rho


@dataclass(frozen=True)
class SampledPath:
    """A real-valued path known at finitely many strictly increasing times."""

    times: np.ndarray
    values: np.ndarray

    def __init__(self, times, values):
        times = np.asarray(times, dtype=float)
        values = np.asarray(values, dtype=float)
        if times.ndim != 1 or values.ndim != 1:
            raise ValueError("times and values must be one-dimensional")
        if times.size != values.size:
            raise ValueError("times and values must have equal length")
        if times.size < 1:
            raise ValueError("a path needs at least one sample")
        if times.size > 1 and not np.all(np.diff(times) > 0):
            raise ValueError("times must be strictly increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return int(self.times.size)


def _as_values(path) -> np.ndarray:
    if isinstance(path, SampledPath):
        return path.values
    return SampledPath(np.arange(len(path)), path).values


def variation(path, rho: float) -> float:
    """Exact rho-variation of the path over its sample set.

    Dynamic program over best subsequence ending at each index:
    V[j] = max_{i<j} (V[i] + |v_j - v_i|^rho), starting fresh (V=0) is
    admissible, and the seminorm is (max_j V[j])^(1/rho).
    """
    rho = _check_rho(rho)
    values = _as_values(path)
    return float(variation_many(values[np.newaxis, :], rho)[0])


def variation_many(paths, rho: float) -> np.ndarray:
    """Row-wise `variation` for a matrix of equally sampled paths."""
    rho = _check_rho(rho)
    P = np.atleast_2d(np.asarray(paths, dtype=float))
    m, n = P.shape
    if n < 2:
        return np.zeros(m)
    # Rescale rows so |differences|^rho cannot overflow for huge paths.
    scale = np.max(np.abs(P), axis=1, keepdims=True)
    scale[scale == 0.0] = 1.0
    P = P / scale
    V = np.zeros((m, n))
    best = np.zeros(m)
    for j in range(1, n):
        d = np.abs(P[:, j : j + 1] - P[:, :j])
        _pow_inplace(d, rho)
        d += V[:, :j]
        V[:, j] = d.max(axis=1)
        np.maximum(best, V[:, j], out=best)
    return scale[:, 0] * best ** (1.0 / rho)


def _pow_inplace(d: np.ndarray, rho: float) -> None:
    # Multiplication beats the generic pow kernel for the common exponents.
    if rho == 1.0:
        return
    if rho == 2.0:
        np.multiply(d, d, out=d)
        return
    if rho == 3.0:
        d2 = d * d
        np.multiply(d2, d, out=d)
        return
    if rho == 4.0:
        np.multiply(d, d, out=d)
        np.multiply(d, d, out=d)
        return
    np.power(d, rho, out=d)


@lru_cache(maxsize=64)
def _subsequence_indices(n: int, k: int) -> np.ndarray:
    return np.array(list(combinations(range(n), k)), dtype=np.intp)


def variation_bruteforce(path, rho: float) -> float:
    """Oracle: enumerate every increasing subsequence explicitly.

    Exponential in the number of samples; refuses paths longer than 20.
    """
    rho = _check_rho(rho)
    values = _as_values(path)
    n = values.size
    if n < 2:
        return 0.0
    if n > _BRUTE_FORCE_MAX:
        raise ValueError(f"brute force limited to {_BRUTE_FORCE_MAX} samples, got {n}")
    best = 0.0
    for k in range(2, n + 1):
        sel = values[_subsequence_indices(n, k)]
        sums = np.abs(np.diff(sel, axis=1))
        _pow_inplace(sums, rho)
        best = max(best, float(sums.sum(axis=1).max()))
    return best ** (1.0 / rho)


def variation_split(path: SampledPath, rho: float, tau: float) -> tuple[float, float]:
    """Variations of the two halves obtained by cutting at sample time tau.

    Together with `variation` this exhibits subadditivity:
    whole <= left + right.
    """
    rho = _check_rho(rho)
    if not isinstance(path, SampledPath):
        raise TypeError("variation_split needs a SampledPath (times matter)")
    idx = np.flatnonzero(path.times == float(tau))
    if idx.size == 0:
        raise ValueError(f"tau={tau} is not a sample time")
    i = int(idx[0])
    if i == 0 or i == len(path) - 1:
        raise ValueError("tau must be an interior sample time")
    left = variation(path.values[: i + 1], rho)
    right = variation(path.values[i:], rho)
    return left, right


def turning_points(values) -> np.ndarray:
    """Indices of the alternating local extrema of a sampled path.

    Always contains the first and the last index; flat stretches keep a
    single representative.  The rho-variation over the full sample set
    equals the rho-variation over these indices: any chosen point inside
    a monotone stretch can be dropped (|a-c|^rho >= |a-b|^rho + |b-c|^rho
    for rho >= 1 when b lies between a and c) or moved to the nearer
    extremum without decreasing the objective.
    """
    v = np.asarray(values, dtype=float)
    n = v.size
    if n <= 2:
        return np.arange(n)
    d = np.diff(v)
    nz = np.flatnonzero(d)
    if nz.size == 0:
        return np.array([0, n - 1])
    s = np.sign(d[nz])
    flips = np.flatnonzero(s[1:] != s[:-1])
    # d[nz[f]] and d[nz[f+1]] have opposite signs; the extremum sits at
    # the start of the later difference.
    interior = nz[flips + 1]
    return np.unique(np.concatenate(([0], interior, [n - 1])))


def variation_pruned(values, rho: float) -> float:
    """`variation` after compressing the path to its turning points.

    Exact, and fast for smooth densely sampled paths.
    """
    v = np.asarray(values, dtype=float)
    return variation(v[turning_points(v)], rho)
