"""Special functions, monotone root finding, quadrature and scalar search.

Special functions are thin wrappers over :mod:`scipy.special` with argument
validation. The root finder and the scalar optimiser are written out here
because the bound formulas have kinks at the trigger level and need a
bracketing method whose behaviour is fully deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np
from scipy import integrate as _quadpack
from scipy import special

from .errors import AccuracyError, BracketError, ConvergenceError, DomainError

__all__ = [
    "Interval",
    "RootConfig",
    "std_normal_cdf",
    "std_normal_sf",
    "std_normal_pdf",
    "std_normal_quantile",
    "reg_lower_gamma",
    "reg_upper_gamma",
    "gamma_quantile",
    "gamma_upper_quantile",
    "solve_monotone_root",
    "solve_monotone_roots",
    "integrate",
    "optimize_scalar",
]

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class Interval:
    """Closed search interval ``[lo, hi]`` with finite ends."""

    lo: float
    hi: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise DomainError(f"interval ends must be finite, got [{self.lo}, {self.hi}]")
        if not self.lo < self.hi:
            raise DomainError(f"interval needs lo < hi, got [{self.lo}, {self.hi}]")

    @property
    def width(self) -> float:
        return self.hi - self.lo


@dataclass(frozen=True)
class RootConfig:
    abs_tol: float = 1e-12
    max_iter: int = 200

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise DomainError("abs_tol must be positive")
        if self.max_iter < 1:
            raise DomainError("max_iter must be at least 1")


# -- special functions -------------------------------------------------------

def std_normal_cdf(x):
    """Standard normal distribution function (scalar or array)."""
    return special.ndtr(x)


def std_normal_sf(x):
    """Upper tail ``1 - Phi(x)`` without cancellation."""
    return special.ndtr(np.negative(x))


def std_normal_pdf(x):
    x = np.asarray(x, dtype=float)
    out = _INV_SQRT_2PI * np.exp(-0.5 * x * x)
    return out if out.ndim else float(out)


def std_normal_quantile(p):
    """Inverse of :func:`std_normal_cdf` on the open unit interval."""
    arr = np.asarray(p, dtype=float)
    if np.any(~((arr > 0.0) & (arr < 1.0))):
        raise DomainError(f"normal quantile needs 0 < p < 1, got {p!r}")
    out = special.ndtri(arr)
    return out if out.ndim else float(out)


def reg_lower_gamma(x, p):
    """Regularised lower incomplete gamma ``P(p, x)``."""
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0) or np.any(np.isnan(xa)):
        raise DomainError(f"incomplete gamma needs x >= 0, got {x!r}")
    if not p > 0:
        raise DomainError(f"incomplete gamma needs p > 0, got {p!r}")
    out = special.gammainc(p, xa)
    return out if out.ndim else float(out)


def reg_upper_gamma(x, p):
    """Regularised upper incomplete gamma ``Q(p, x) = 1 - P(p, x)``."""
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0) or np.any(np.isnan(xa)):
        raise DomainError(f"incomplete gamma needs x >= 0, got {x!r}")
    if not p > 0:
        raise DomainError(f"incomplete gamma needs p > 0, got {p!r}")
    out = special.gammaincc(p, xa)
    return out if out.ndim else float(out)


def gamma_quantile(u, p: float, rate: float = 1.0):
    """Quantile of Gamma(shape ``p``, ``rate``) at lower-tail probability ``u``."""
    ua = np.asarray(u, dtype=float)
    if np.any(~((ua > 0.0) & (ua < 1.0))):
        raise DomainError(f"gamma quantile needs 0 < u < 1, got {u!r}")
    if not (p > 0 and rate > 0):
        raise DomainError(f"gamma quantile needs p > 0 and rate > 0, got p={p}, rate={rate}")
    out = special.gammaincinv(p, ua) / rate
    return out if out.ndim else float(out)


def gamma_upper_quantile(v, p: float, rate: float = 1.0):
    """Quantile at upper-tail probability ``v``; accurate when ``v`` is tiny."""
    va = np.asarray(v, dtype=float)
    if np.any(~((va > 0.0) & (va < 1.0))):
        raise DomainError(f"gamma quantile needs 0 < v < 1, got {v!r}")
    if not (p > 0 and rate > 0):
        raise DomainError(f"gamma quantile needs p > 0 and rate > 0, got p={p}, rate={rate}")
    out = special.gammainccinv(p, va) / rate
    return out if out.ndim else float(out)


# -- root finding ------------------------------------------------------------

def solve_monotone_root(
    f: Callable[[float], float],
    bracket: Interval,
    target: float = 0.0,
    cfg: RootConfig = RootConfig(),
) -> float:
    """Solve ``f(x) = target`` for nondecreasing ``f`` on ``bracket``.

    Regula falsi with the Illinois weight update, falling back to bisection
    whenever the interpolated point leaves the bracket or the bracket fails to
    halve over three consecutive steps. Stops once ``|f(x) - target|`` or the
    bracket width drops to ``cfg.abs_tol``.

    Raises:
        BracketError: if ``target`` lies outside ``[f(lo), f(hi)]``.
        ConvergenceError: if ``cfg.max_iter`` steps do not suffice.
    """
    a, b = bracket.lo, bracket.hi
    fa = f(a) - target
    fb = f(b) - target
    if fa > 0 or fb < 0 or math.isnan(fa) or math.isnan(fb):
        raise BracketError(
            f"target {target!r} not enclosed: f({a!r})={fa + target!r}, f({b!r})={fb + target!r}"
        )
    if fa == 0:
        return a
    if fb == 0:
        return b

    side = 0
    width_mark = b - a
    stalled = 0
    for _ in range(cfg.max_iter):
        if b - a <= cfg.abs_tol:
            return 0.5 * (a + b)
        x = a - fa * (b - a) / (fb - fa)
        if stalled >= 3 or not (a < x < b):
            x = 0.5 * (a + b)
            stalled = 0
        fx = f(x) - target
        if abs(fx) <= cfg.abs_tol:
            return x
        if fx < 0:
            a, fa = x, fx
            if side == -1:
                fb *= 0.5
            side = -1
        else:
            b, fb = x, fx
            if side == 1:
                fa *= 0.5
            side = 1
        if b - a > 0.5 * width_mark:
            stalled += 1
        else:
            width_mark = b - a
            stalled = 0
    raise ConvergenceError(f"root not found within {cfg.max_iter} iterations; bracket [{a!r}, {b!r}]")


def solve_monotone_roots(
    f: Callable[[np.ndarray], np.ndarray],
    lo: float,
    hi: float,
    target: np.ndarray,
    cfg: RootConfig = RootConfig(),
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised bisection for a batch of nondecreasing equations.

    ``f`` maps an array of abscissae (one per equation) to the matching
    function values. Equations whose target lies below ``f(lo)`` or above
    ``f(hi)`` are pinned to the corresponding end.

    Returns:
        ``(roots, pinned)`` where ``pinned`` is -1, 0 or +1 per equation.
    """
    target = np.asarray(target, dtype=float)
    a = np.full(target.shape, float(lo))
    b = np.full(target.shape, float(hi))
    low_out = f(a) > target
    high_out = f(b) < target
    for _ in range(cfg.max_iter):
        if np.max(b - a) <= cfg.abs_tol:
            break
        mid = 0.5 * (a + b)
        below = f(mid) < target
        a = np.where(below, mid, a)
        b = np.where(below, b, mid)
    else:
        raise ConvergenceError(f"vectorised bisection exceeded {cfg.max_iter} iterations")
    roots = 0.5 * (a + b)
    roots = np.where(low_out, lo, np.where(high_out, hi, roots))
    pinned = np.where(low_out, -1, np.where(high_out, 1, 0))
    return roots, pinned


# -- quadrature --------------------------------------------------------------

def integrate(
    f: Callable[[float], float],
    interval: Interval,
    rel_tol: float = 1e-10,
    abs_tol: float = 1e-15,
    points=None,
    limit: int = 400,
) -> float:
    """Adaptive Gauss-Kronrod quadrature of ``f`` over ``interval``.

    Infinite ranges are not accepted; callers truncate Gaussian-weighted
    integrands themselves. ``points`` lists interior kinks.

    Raises:
        AccuracyError: if the error estimate exceeds ``max(rel_tol*|I|, abs_tol)``
            after the subdivision budget, carrying the best estimate.
    """
    pts = None
    if points is not None:
        pts = [p for p in points if interval.lo < p < interval.hi] or None
    val, err, *rest = _quadpack.quad(
        f, interval.lo, interval.hi, epsabs=abs_tol, epsrel=rel_tol, limit=limit,
        points=pts, full_output=1,
    )
    if err > max(rel_tol * abs(val), abs_tol):
        raise AccuracyError(
            f"quadrature on [{interval.lo}, {interval.hi}] reached only {err:.3g}", val, err
        )
    return float(val)


# -- scalar optimisation -----------------------------------------------------

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def optimize_scalar(
    f: Callable[[float], float],
    interval: Interval,
    mode: Literal["maximize", "minimize"] = "maximize",
    grid_n: int = 64,
    xtol: float = 1e-10,
) -> tuple[float, float]:
    """Grid scan followed by golden-section refinement of the best cell.

    The returned value is never worse than the best grid point, so a
    non-unimodal ``f`` at worst yields the grid optimum.
    """
    if grid_n < 2:
        raise DomainError("grid_n must be at least 2")
    if mode not in ("maximize", "minimize"):
        raise DomainError(f"unknown mode {mode!r}")
    sign = 1.0 if mode == "maximize" else -1.0

    def g(t: float) -> float:
        return sign * f(t)

    grid = np.linspace(interval.lo, interval.hi, grid_n)
    vals = [g(float(t)) for t in grid]
    k = int(np.argmax(vals))
    best_t, best_v = float(grid[k]), vals[k]

    a = float(grid[max(k - 1, 0)])
    b = float(grid[min(k + 1, grid_n - 1)])
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    gc, gd = g(c), g(d)
    while b - a > xtol:
        if gc >= gd:
            b, d, gd = d, c, gc
            c = b - _INV_PHI * (b - a)
            gc = g(c)
        else:
            a, c, gc = c, d, gd
            d = a + _INV_PHI * (b - a)
            gd = g(d)
    for t, v in ((c, gc), (d, gd)):
        if v > best_v:
            best_t, best_v = t, v
    return best_t, sign * best_v
