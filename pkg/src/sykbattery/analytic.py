"""Closed-form disorder-averaged charging powers.

Units: time in 1/J, power in J, with J = 1. The battery has N Majoranas on
N/2 qubits and ground energy E0 = -N/2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

import numpy as np
from scipy import special

from .graph import ConnectivityProfile

#: below this argument f(t) is evaluated from its Taylor series
SERIES_CUTOFF = 1e-2


class AnalyticError(ValueError):
    pass


@dataclass(frozen=True)
class PowerCurve:
    model_tag: str
    n: int
    times: np.ndarray
    values: np.ndarray

    @property
    def energies(self) -> np.ndarray:
        return -self.n / 2 + self.times * self.values


@dataclass(frozen=True)
class OptimumResult:
    tau: float
    p_max: float
    bracket: tuple[float, float]
    tolerance: float
    grid_fallback: bool = False
    meta: dict = field(default_factory=dict)


def _fm1_series(t):
    # f(t) - 1 = sum_{m>=1} (-1)^m t^(2m) / (m! (m+1)!)
    t2 = t * t
    return t2 * (-1 / 2 + t2 * (1 / 12 + t2 * (-1 / 144 + t2 * (1 / 2880))))


def f_minus_one(t):
    """f(t) - 1 without cancellation near t = 0."""
    t = np.abs(np.asarray(t, dtype=float))
    small = t < SERIES_CUTOFF
    safe = np.where(small, 1.0, t)
    out = special.j1(2 * safe) / safe - 1.0
    return np.where(small, _fm1_series(t), out)


def f_propagator(t):
    """Averaged single-Majorana return amplitude f(t) = J1(2t)/t, f(0) = 1."""
    return 1.0 + f_minus_one(t)


def _one_minus_fpow(x, k):
    """1 - f(x)^k, accurate when f(x) is close to 1."""
    fm1 = f_minus_one(x)
    f = 1.0 + fm1
    pos = f > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        smooth = -np.expm1(k * np.log1p(np.where(pos, fm1, 0.0)))
    return np.where(pos, smooth, 1.0 - f**k)


def f_block(t, k: int, n: int):
    """Size-k block propagator f(t sqrt(1 - k/N))^k."""
    if not 1 <= k <= n:
        raise AnalyticError(f"block size must satisfy 1 <= k <= N, got k={k}, N={n}")
    return f_propagator(np.asarray(t, dtype=float) * math.sqrt(1 - k / n)) ** k


def _over_t(t, numer):
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(t > 0, numer / np.where(t > 0, t, 1.0), 0.0)
    return out[()] if out.ndim == 0 else out


def power_Z(t, n: int):
    """Z-model power (N / 2t)(1 - f(t)^2); zero at t = 0."""
    t = np.asarray(t, dtype=float)
    return _over_t(t, 0.5 * n * _one_minus_fpow(t, 2))


def _check_even(n: int) -> None:
    if n < 2 or n % 2:
        raise AnalyticError(f"N must be even and >= 2, got {n}")


def power_X(t, n: int):
    """X-model power (1/t) sum over odd sizes s of [1 - f(t sqrt(1 - s/N))^s]."""
    _check_even(n)
    t = np.asarray(t, dtype=float)
    acc = np.zeros_like(t)
    for s in range(1, n, 2):
        acc = acc + _one_minus_fpow(t * math.sqrt(1 - s / n), s)
    return _over_t(t, acc)


def _one_minus_dawson_ratio(x):
    # 1 - F(x)/x with F the Dawson integral; series below 1e-3
    x = np.asarray(x, dtype=float)
    small = x < 1e-3
    safe = np.where(small, 1.0, x)
    x2 = x * x
    series = x2 * (2 / 3 - x2 * (4 / 15 - x2 * 8 / 105))
    return np.where(small, series, 1.0 - special.dawsn(safe) / safe)


def gaussian_overlap_integral(t, n: int):
    """Integral over y in [0, 1] of exp(-N t^2 y (1 - y) / 2).

    Closed form F(x)/x with x = t sqrt(N/8) and F the Dawson integral.
    """
    x = np.asarray(t, dtype=float) * math.sqrt(n / 8)
    return 1.0 - _one_minus_dawson_ratio(x)


def power_X_gaussian(t, n: int):
    """Large-N X-model power (N / 2t)(1 - integral of the Gaussian overlap)."""
    if n < 2:
        raise AnalyticError(f"N must be >= 2, got {n}")
    t = np.asarray(t, dtype=float)
    x = t * math.sqrt(n / 8)
    return _over_t(t, 0.5 * n * _one_minus_dawson_ratio(x))


def _graph_g_odd(profile, n: int) -> np.ndarray:
    if isinstance(profile, ConnectivityProfile):
        g = profile.g
        missing = [k for k in range(1, n, 2) if k not in g]
        if missing:
            raise AnalyticError(f"profile lacks g_k for k in {missing[:5]}")
        return np.array([float(g[k]) for k in range(1, n, 2)])
    arr = np.asarray(profile, dtype=float)
    if arr.shape[0] < n - 1:
        raise AnalyticError(f"profile array needs g_1..g_{n - 1}, got {arr.shape[0]} entries")
    return arr[0 : n - 1 : 2]


def power_graph(t, profile, n: int):
    """Graph-SYK X-model power (1/t) sum_k [1 - exp(-g_{2k-1} t^2 / 2)].

    ``profile`` is a ConnectivityProfile or an array whose entry k-1 is g_k.
    """
    _check_even(n)
    g_odd = _graph_g_odd(profile, n)
    t = np.asarray(t, dtype=float)
    acc = -np.expm1(-0.5 * np.multiply.outer(t * t, g_odd)).sum(axis=-1)
    return _over_t(t, acc)


def complete_graph_profile_array(n: int) -> np.ndarray:
    k = np.arange(1, n + 1)
    return k * (n - k) / (n - 1)


def _golden_max(fun, a, b, tol):
    invphi = (math.sqrt(5) - 1) / 2
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fun(c), fun(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fun(d)
    return 0.5 * (a + b)


def find_optimum(
    evaluator: Callable,
    n: Optional[int] = None,
    bracket: tuple[float, float] = (1e-6, 5.0),
    *,
    tol: float = 1e-6,
    n_grid: int = 512,
) -> OptimumResult:
    """Maximize ``evaluator(t)`` (or ``evaluator(t, n)`` when ``n`` is given).

    A 512-point grid scan brackets the maximum, golden-section search refines
    it to ``tol``. If the grid maximum sits on a bracket end, the grid argmax
    is returned with ``grid_fallback=True``.
    """
    lo, hi = map(float, bracket)
    if not hi > lo:
        raise AnalyticError(f"empty bracket {bracket}")
    fun = (lambda t: float(evaluator(t, n))) if n is not None else (lambda t: float(evaluator(t)))
    grid = np.linspace(lo, hi, n_grid)
    vals = np.array([fun(t) for t in grid])
    i = int(np.argmax(vals))
    diffs = np.diff(vals)
    unimodal = bool(np.all(diffs[:i] >= 0) and np.all(diffs[i:] <= 0))
    meta = {"unimodal_on_grid": unimodal}
    if i == 0 or i == n_grid - 1:
        return OptimumResult(float(grid[i]), float(vals[i]), (lo, hi), tol, True, meta)
    tau = _golden_max(fun, grid[i - 1], grid[i + 1], tol)
    p = fun(tau)
    if p < vals[i]:
        tau, p = float(grid[i]), float(vals[i])
    return OptimumResult(float(tau), float(p), (lo, hi), tol, False, meta)


def catalan(m: int) -> int:
    if not 0 <= m <= 30:
        raise AnalyticError(f"catalan supports 0 <= m <= 30, got {m}")
    return math.comb(2 * m, m) // (m + 1)


def noncrossing_pairing_count(m: int) -> int:
    """Count non-crossing perfect matchings of 2m points on a line by enumeration.

    Points are matched greedily from the left; a chord is accepted only if it
    crosses none of the chords already drawn.
    """
    if not 0 <= m <= 12:
        raise AnalyticError(f"enumeration supports 0 <= m <= 12, got {m}")
    n_pts = 2 * m
    partner = [-1] * n_pts

    def crosses(a: int, b: int) -> bool:
        for c in range(n_pts):
            d = partner[c]
            if d > c and (a < c < b < d or c < a < d < b):
                return True
        return False

    def count() -> int:
        try:
            a = partner.index(-1)
        except ValueError:
            return 1
        total = 0
        for b in range(a + 1, n_pts):
            if partner[b] != -1 or crosses(a, b):
                continue
            partner[a], partner[b] = b, a
            total += count()
            partner[a] = partner[b] = -1
        return total

    return count()


def f_taylor_coefficient(m: int) -> Fraction:
    """Exact t^(2m) coefficient of J1(2t)/t from the Bessel power series."""
    return Fraction((-1) ** m, math.factorial(m) * math.factorial(m + 1))


def f_series_check(order: int) -> list[tuple[Fraction, Fraction]]:
    """Pairs (Taylor coefficient of f, (-1)^m * noncrossing(m) / (2m)!) for m = 0..order."""
    if not 0 <= order <= 12:
        raise AnalyticError(f"order must be in 0..12, got {order}")
    return [
        (
            f_taylor_coefficient(m),
            Fraction((-1) ** m * noncrossing_pairing_count(m), math.factorial(2 * m)),
        )
        for m in range(order + 1)
    ]


@dataclass(frozen=True)
class PowerLawFit:
    exponent: float
    prefactor: float
    intercept: float
    residual: float


def scaling_fit(points) -> PowerLawFit:
    """Least-squares fit of log(value) = exponent * log(n) + intercept."""
    pts = [(float(n), float(v)) for n, v in points]
    if len(pts) < 3:
        raise AnalyticError("scaling fit needs at least 3 points")
    if any(n <= 0 or v <= 0 for n, v in pts):
        raise AnalyticError("scaling fit needs positive sizes and values")
    x = np.log([n for n, _ in pts])
    y = np.log([v for _, v in pts])
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = float(np.sqrt(np.mean((A @ [slope, intercept] - y) ** 2)))
    return PowerLawFit(float(slope), float(math.exp(intercept)), float(intercept), resid)


def analytic_curve(model: str, n: int, times, profile=None) -> PowerCurve:
    times = np.asarray(times, dtype=float)
    if model == "Z":
        vals = power_Z(times, n)
    elif model == "X":
        vals = power_X(times, n)
    elif model == "X_gaussian":
        vals = power_X_gaussian(times, n)
    elif model == "graph":
        if profile is None:
            raise AnalyticError("graph model needs a connectivity profile")
        vals = power_graph(times, profile, n)
    else:
        raise AnalyticError(f"unknown analytic model {model!r}")
    return PowerCurve(model, n, times, np.asarray(vals, dtype=float))
