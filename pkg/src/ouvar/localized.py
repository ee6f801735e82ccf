"""Localized operator on Lebesgue-normalized inputs and its window geometry.

For a base point x >= 0, a Gaussian level s > 0 and a cutoff level
sigma in (1/2, 1), the truncated window J_t is the set of u with
|u - e^t x| < s sqrt(e^(2t)-1) and |u - x| < sigma/(1+x).  The module
computes the critical times of the gap function
Q(t) = x(e^t - 1) - s sqrt(e^(2t) - 1), the window endpoints, the
windowed integral operator R, its decomposition into one-sided means,
the normalized window-length factors F+/F-, and the double-integral
reconstruction of the localized smoothing operator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ouvar.decomp import eta
from ouvar.oukernel import DiscreteMeasure

__all__ = [
    "LocalizedGeometry",
    "q_function",
    "critical_times",
    "critical_times_many",
    "interval_endpoints",
    "window_lengths",
    "r_operator",
    "one_sided_mean",
    "means_decomposition",
    "f_factors",
    "monotone_segments",
    "hloc_apply",
    "reconstruct_local",
    "QuadratureError",
]

_T_SLACK = 1e-12


class QuadratureError(RuntimeError):
    """Raised when the reconstruction quadrature fails to converge."""


@dataclass(frozen=True)
class LocalizedGeometry:
    """Critical times of the gap function for fixed (x, s, sigma).

    t_tilde: location of the minimum of Q (inf when x <= s).
    t_zero:  the positive root of Q (inf when x <= s).
    t_one:   where Q climbs to sigma/(1+x), emptying the window
             (inf when x <= s).
    T_cap:   min(1, t_one); all window operations live on (0, T_cap].
    """

    x: float
    s: float
    sigma: float
    t_tilde: float
    t_zero: float
    t_one: float
    T_cap: float

    @property
    def cap(self) -> float:
        """Half-width sigma/(1+x) of the cutoff restriction."""
        return self.sigma / (1.0 + self.x)


def _gap(x, s, t):
    t = np.asarray(t, dtype=float)
    return x * np.expm1(t) - s * np.exp(t) * np.sqrt(-np.expm1(-2.0 * t))


def q_function(g: LocalizedGeometry, t):
    """Gap Q(t) = x(e^t - 1) - s sqrt(e^(2t) - 1) between drift and spread."""
    out = _gap(g.x, g.s, t)
    return float(out) if out.ndim == 0 else out


def _check_params(x, s, sigma) -> None:
    if np.any(np.asarray(x) < 0.0):
        raise ValueError("x must be >= 0")
    if np.any(np.asarray(s) <= 0.0):
        raise ValueError("s must be > 0")
    sig = np.asarray(sigma)
    if np.any(sig <= 0.5) or np.any(sig >= 1.0):
        raise ValueError("sigma must lie strictly between 1/2 and 1")


def critical_times_many(x, s, sigma):
    """Vectorized critical times; returns (t_tilde, t_zero, t_one, T_cap)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    s = np.atleast_1d(np.asarray(s, dtype=float))
    sigma = np.atleast_1d(np.asarray(sigma, dtype=float))
    _check_params(x, s, sigma)
    x, s, sigma = np.broadcast_arrays(x, s, sigma)
    above = x > s
    inf = np.full(x.shape, np.inf)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio2 = np.where(above, x * x / (x * x - s * s), 1.0)
        t_tilde = np.where(above, 0.5 * np.log(ratio2), inf)
        t_zero = np.where(above, np.log((x * x + s * s) / np.where(above, x * x - s * s, 1.0)), inf)
    target = sigma / (1.0 + x)
    t_one = np.full(x.shape, np.inf)
    if np.any(above):
        xa, sa = x[above], s[above]
        lo = t_tilde[above].copy()
        tgt = target[above]
        hi = lo + 1.0
        for _ in range(200):
            low_mask = _gap(xa, sa, hi) < tgt
            if not np.any(low_mask):
                break
            hi[low_mask] = lo[low_mask] + 2.0 * (hi[low_mask] - lo[low_mask])
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            below = _gap(xa, sa, mid) < tgt
            lo[below] = mid[below]
            hi[~below] = mid[~below]
            if np.max(hi - lo) <= 1e-13:
                break
        t_one[above] = 0.5 * (lo + hi)
    T_cap = np.minimum(1.0, t_one)
    return t_tilde, t_zero, t_one, T_cap


def critical_times(x: float, s: float, sigma: float) -> LocalizedGeometry:
    """Geometry of the truncated window for one (x, s, sigma)."""
    t_tilde, t_zero, t_one, T_cap = (
        float(a[0]) for a in critical_times_many([x], [s], [sigma])
    )
    return LocalizedGeometry(
        x=float(x), s=float(s), sigma=float(sigma),
        t_tilde=t_tilde, t_zero=t_zero, t_one=t_one, T_cap=T_cap,
    )


def _check_window_time(g: LocalizedGeometry, t: float) -> float:
    t = float(t)
    if not (0.0 < t <= g.T_cap + _T_SLACK):
        raise ValueError(f"t={t} outside (0, T_cap={g.T_cap}]")
    return min(t, g.T_cap)


def interval_endpoints(g: LocalizedGeometry, t: float) -> tuple[float, float]:
    """Endpoints (k_minus, k_plus) of the window J_t; k_minus = k_plus when empty."""
    t = _check_window_time(g, t)
    spread = g.s * math.exp(t) * math.sqrt(-math.expm1(-2.0 * t))
    drift = g.x * math.expm1(t)
    k_plus = min(g.x + drift + spread, g.x + g.cap)
    k_minus = max(g.x + drift - spread, g.x - g.cap)
    return min(k_minus, k_plus), k_plus


def window_lengths(g: LocalizedGeometry, t) -> tuple[np.ndarray, np.ndarray]:
    """Lengths (|J_t^+|, |J_t^-|) of the one-sided windows, vectorized in t."""
    t = np.asarray(t, dtype=float)
    spread = g.s * np.exp(t) * np.sqrt(-np.expm1(-2.0 * t))
    drift = g.x * np.expm1(t)
    plus = np.minimum(drift + spread, g.cap)
    minus = np.minimum(np.abs(drift - spread), g.cap)
    return plus, minus


def r_operator(gm: DiscreteMeasure, g: LocalizedGeometry, t: float) -> float:
    """Windowed mass (1-e^(-2t))^(-1/2) * sum of weights with atom in (k-, k+)."""
    t = _check_window_time(g, t)
    k_minus, k_plus = interval_endpoints(g, t)
    inside = (gm.locations > k_minus) & (gm.locations < k_plus)
    return float(np.sum(gm.weights[inside])) / math.sqrt(-math.expm1(-2.0 * t))


def one_sided_mean(gm: DiscreteMeasure, x: float, tau: float, side: str) -> float:
    """Mean of the measure over (x, x+tau) for side '+', over (x-tau, x) for '-'."""
    tau = float(tau)
    if tau <= 0.0:
        raise ValueError("tau must be > 0")
    x = float(x)
    if side == "+":
        inside = (gm.locations > x) & (gm.locations < x + tau)
    elif side == "-":
        inside = (gm.locations > x - tau) & (gm.locations < x)
    else:
        raise ValueError("side must be '+' or '-'")
    return float(np.sum(gm.weights[inside])) / tau


def means_decomposition(
    gm: DiscreteMeasure, g: LocalizedGeometry, t: float
) -> tuple[float, float, int]:
    """Windowed mass written through one-sided means.

    Returns (term_plus, term_minus, sign) with
    r_operator = term_plus + sign * term_minus.  The sign is +1 while
    the lower endpoint sits left of x (t < t_zero), -1 after; the minus
    term uses the mean over (k-, x) in the first case and over (x, k-)
    in the second.  A zero-length one-sided window contributes 0.
    """
    t = _check_window_time(g, t)
    if np.any(gm.locations == g.x):
        raise ValueError("decomposition requires x to differ from every atom")
    k_minus, k_plus = interval_endpoints(g, t)
    root = math.sqrt(-math.expm1(-2.0 * t))
    jp = k_plus - g.x
    jm = abs(k_minus - g.x)
    term_plus = (jp / root) * one_sided_mean(gm, g.x, jp, "+") if jp > 0.0 else 0.0
    if k_minus < g.x:
        sign = 1
        term_minus = (jm / root) * one_sided_mean(gm, g.x, jm, "-") if jm > 0.0 else 0.0
    else:
        sign = -1
        term_minus = (jm / root) * one_sided_mean(gm, g.x, jm, "+") if jm > 0.0 else 0.0
    return term_plus, term_minus, sign


def f_factors(g: LocalizedGeometry, t):
    """Normalized window lengths F+/- = |J_t^+-| / sqrt(1-e^(-2t)).

    Evaluated in the algebraically equivalent form
    min(|x(e^t-1)/sqrt(1-e^(-2t)) +- s e^t|, cap/sqrt(1-e^(-2t))),
    which is stable as t -> 0.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0.0):
        raise ValueError("t must be > 0")
    root = np.sqrt(-np.expm1(-2.0 * t))
    drift = g.x * np.expm1(t) / root
    spread = g.s * np.exp(t)
    cap = g.cap / root
    f_plus = np.minimum(np.abs(drift + spread), cap)
    f_minus = np.minimum(np.abs(drift - spread), cap)
    if f_plus.ndim == 0:
        return float(f_plus), float(f_minus)
    return f_plus, f_minus


def _bisect(fn, lo: float, hi: float, tol: float = 1e-12) -> float:
    flo = fn(lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if hi - lo <= tol:
            return mid
        if (fn(mid) > 0.0) == (flo > 0.0):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _stationary_times(g: LocalizedGeometry) -> list[float]:
    # Stationary points of x(e^t-1)/sqrt(1-e^(-2t)) - s e^t, via the
    # squared polynomial equation in v = e^t, candidates kept only when
    # the unsquared equation holds.
    x, s = g.x, g.s
    if x == 0.0:
        return []
    d = x * x - s * s
    coeffs = [d, 2.0 * d, -x * x, -2.0 * d, x * x + s * s]
    roots = np.roots(coeffs)
    out = []
    v_hi = math.exp(g.T_cap)
    for v in roots:
        if abs(v.imag) > 1e-9:
            continue
        v = float(v.real)
        if not (1.0 + 1e-12 < v < v_hi):
            continue
        lhs = x * (v * v + v - 1.0)
        rhs = s * math.sqrt(v - 1.0) * (v + 1.0) ** 1.5
        if abs(lhs - rhs) <= 1e-8 * (abs(lhs) + abs(rhs) + 1.0):
            out.append(math.log(v))
    return out


def monotone_segments(g: LocalizedGeometry) -> list[float]:
    """Interior breakpoints of (0, T_cap] making both F factors monotone.

    Collects the minimum of the gap, its positive root, the times where
    each factor switches between its two branches, and the stationary
    points of the unclipped minus branch.
    """
    T = g.T_cap
    points: list[float] = []
    if g.t_tilde < T:
        points.append(g.t_tilde)
    if g.t_zero < T:
        points.append(g.t_zero)
    cap = g.cap

    def plus_len(t: float) -> float:
        return g.x * math.expm1(t) + g.s * math.exp(t) * math.sqrt(-math.expm1(-2.0 * t))

    # Branch switch of the plus factor: the raw length is increasing.
    if plus_len(T) > cap:
        points.append(_bisect(lambda t: plus_len(t) - cap, 1e-15, T))

    # Branch switches of the minus factor on each monotone piece of |Q|.
    def abs_gap(t: float) -> float:
        return abs(float(_gap(g.x, g.s, t)))

    pieces = []
    if g.t_tilde < T:
        pieces.append((1e-15, g.t_tilde))
        if g.t_zero < T:
            pieces.append((g.t_tilde, g.t_zero))
        else:
            pieces.append((g.t_tilde, T))
    else:
        pieces.append((1e-15, T))
    for lo, hi in pieces:
        f_lo, f_hi = abs_gap(lo) - cap, abs_gap(hi) - cap
        if (f_lo > 0.0) != (f_hi > 0.0):
            points.append(_bisect(lambda t: abs_gap(t) - cap, lo, hi))

    points.extend(_stationary_times(g))
    points = sorted(p for p in points if 1e-12 < p < T - 1e-12)
    deduped: list[float] = []
    for p in points:
        if not deduped or p - deduped[-1] > 1e-10:
            deduped.append(p)
    return deduped


def hloc_apply(gm: DiscreteMeasure, t, x):
    """Localized smoothing operator on Lebesgue atoms.

    sum of w * exp(-(e^(-t)u - x)^2 / (2(1-e^(-2t)))) * eta((1+|x|)|x-u|)
    / sqrt(1-e^(-2t)); broadcasts over t and x.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0.0):
        raise ValueError("t must be > 0")
    x = np.asarray(x, dtype=float)
    q = np.exp(-t)
    s2 = -np.expm1(-2.0 * t)
    out = np.zeros(np.broadcast(t, x).shape)
    absx = np.abs(x)
    for loc, w in zip(gm.locations, gm.weights):
        cut = eta((1.0 + absx) * np.abs(x - loc))
        if np.all(cut == 0.0):
            continue
        y = q * loc - x
        out += w * cut * np.exp(-0.5 * y * y / s2) / np.sqrt(s2)
    if out.ndim == 0:
        return float(out)
    return out


def _layer_profiles(gm: DiscreteMeasure, t: float, x: float):
    s2 = -math.expm1(-2.0 * t)
    root = math.sqrt(s2)
    a = np.abs(np.exp(-t) * gm.locations - x) / root
    b = (1.0 + abs(x)) * np.abs(x - gm.locations)
    return a, b, root


def _panel_sums(edges: np.ndarray, cumulative: np.ndarray, thresholds: np.ndarray) -> np.ndarray:
    # Midpoint-rule sum over panels of a layer-cake weight: each panel
    # counts fully iff its midpoint exceeds the threshold, so the sum
    # telescopes to cumulative[last] - cumulative[first_counted_panel].
    mids = 0.5 * (edges[:-1] + edges[1:])
    idx = np.searchsorted(mids, thresholds, side="right")
    return cumulative[-1] - cumulative[idx]


def reconstruct_local(
    gm: DiscreteMeasure,
    t: float,
    x: float,
    *,
    s_max: float = 10.0,
    n_start: int = 4096,
    n_max: int = 1 << 20,
    rel_tol: float = 1e-5,
) -> float:
    """Localized operator rebuilt from the layer-cake double integral.

    Numerically integrates the windowed mass R against the derivative of
    the Gaussian profile in s and of the cutoff in sigma, doubling the
    panel count until the value stabilizes.  Agrees with `hloc_apply` up
    to quadrature error; raises QuadratureError when refinement stalls.
    """
    t = float(t)
    if not (0.0 < t <= 1.0):
        raise ValueError("t must lie in (0, 1]")
    if len(gm) == 0:
        return 0.0
    a, b, root = _layer_profiles(gm, float(t), float(x))
    scale = gm.l1_norm / root
    previous = None
    n = int(n_start)
    while n <= n_max:
        s_edges = np.linspace(0.0, s_max, n + 1)
        s_cum = np.exp(-0.5 * s_edges * s_edges)  # cumulative of d/ds e^(-s^2/2)
        sig_edges = np.linspace(0.5, 1.0, n + 1)
        sig_cum = np.asarray(eta(sig_edges))  # cumulative of d eta/d sigma
        s_part = _panel_sums(s_edges, s_cum, a)
        sig_part = _panel_sums(sig_edges, sig_cum, b)
        value = float(np.sum(gm.weights * s_part * sig_part)) / root
        if previous is not None and abs(value - previous) <= rel_tol * max(abs(value), scale):
            return value
        previous = value
        n *= 2
    raise QuadratureError(
        f"reconstruction did not converge below rel_tol={rel_tol} with {n_max} panels"
    )


def reconstruct_local_tensor(
    gm: DiscreteMeasure, t: float, x: float, *, s_max: float = 10.0, n: int = 512
) -> float:
    """Literal tensor-product quadrature of the same double integral.

    O(n^2) midpoint evaluation of the windowed mass on an (s, sigma)
    grid; kept as a slow cross-check of `reconstruct_local`.
    """
    t = float(t)
    if not (0.0 < t <= 1.0):
        raise ValueError("t must lie in (0, 1]")
    if len(gm) == 0:
        return 0.0
    a, b, root = _layer_profiles(gm, float(t), float(x))
    s_edges = np.linspace(0.0, s_max, n + 1)
    s_masses = np.diff(np.exp(-0.5 * s_edges * s_edges))
    s_mids = 0.5 * (s_edges[:-1] + s_edges[1:])
    sig_edges = np.linspace(0.5, 1.0, n + 1)
    sig_masses = np.diff(np.asarray(eta(sig_edges)))
    sig_mids = 0.5 * (sig_edges[:-1] + sig_edges[1:])
    total = 0.0
    for wk, ak, bk in zip(gm.weights, a, b):
        r_grid = np.outer(s_mids > ak, sig_mids > bk)
        total += wk * float(s_masses @ r_grid @ sig_masses)
    return total / root
