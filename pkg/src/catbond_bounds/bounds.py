"""Lower and upper bounds on the call counterpart and on the bond price.

All bounds are stated for the call counterpart
``P1 = D e^{-rT} E[(S - q0)^+]`` with ``S = sum_i m (q_i - k1 q0)^+`` and
mapped to the bond through ``P = P1 - G``, i.e. ``(bound - G)^+``.

Lower bounds replace ``S`` by its conditional expectation given a single
variable (``q_{t_1}``, ``q_t`` or ``W_t``), which turns the stop-loss
premium into a sum of European calls once the threshold ``x`` solving a
monotone equation is known. Upper bounds split the retention ``q0`` across
the years along the comonotonic quantile path.

Quantile-sum roots come in two flavours, selected by ``root``:

``"literal"``
    ``sum_i F_i^{-1}(x) = q0 ((k2 - k1) + k1 n)`` with strikes ``F_i^{-1}(x)``.
``"generalized"``
    ``sum_i (F_i^{-1}(x) - k1 q0)^+ = (k2 - k1) q0`` with strikes floored at
    ``k1 q0``. This respects the atom of each ``S_i`` at zero.

When the index starts at ``s0`` different from the contract base ``q0`` the
``anchor`` setting decides which level enters the interpolation
``E[q_{t_i} | q_t]``, the threshold equation and the quantile split:

``"start"``
    the model start ``s0`` throughout. This is the exact construction.
``"base"``
    the contract base ``q0``; only the law of ``q_t`` and the call prices
    use ``s0``. The upper bound stays valid (any split of the retention
    bounds the stop-loss premium) and the lower bounds stay valid for
    ``s0 >= q0``, where the interpolated mean is understated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Literal

import numpy as np
from scipy import special

from .contract import BondTerms, call_to_put_bound, parity_adjustment_G
from .errors import ConfigError, NumericalError
from .models import Z_MAX, BlackScholesModel, LogGammaModel, MortalityModel
from .numerics import (
    Interval,
    RootConfig,
    integrate,
    optimize_scalar,
    solve_monotone_root,
    solve_monotone_roots,
    std_normal_cdf,
    std_normal_pdf,
)

__all__ = [
    "BoundKind",
    "BoundResult",
    "SuiteConfig",
    "TABLE_CONVENTION",
    "LgDiscrepancy",
    "trivial_lower",
    "lower_lb1",
    "lower_lbt2",
    "lower_lbt_bs",
    "lower_lbt_lg",
    "upper_ub1",
    "upper_ubt_bs",
    "best_lower_t",
    "best_upper_t",
    "comonotonic_sum_quantile",
    "lbt_lg_discrepancy",
    "bound_suite",
]

QuantileRoot = Literal["literal", "generalized"]
Anchor = Literal["start", "base"]

_ROOT_CFG = RootConfig(abs_tol=1e-15, max_iter=400)
_Z_ROOT = 30.0
_DATE_TOL = 1e-9


class BoundKind(str, Enum):
    TRIVIAL_LOWER = "TrivialLower"
    LOWER_1 = "Lower1"
    LOWER_T2 = "LowerT2"
    LOWER_T_BS = "LowerTBS"
    LOWER_T_LG = "LowerTLG"
    UPPER_T1_BS = "UpperT1BS"
    UPPER_1 = "Upper1"

    @property
    def is_lower(self) -> bool:
        return self.value.startswith("Lower") or self is BoundKind.TRIVIAL_LOWER

    @property
    def label(self) -> str:
        return _LABELS[self]

    @property
    def order(self) -> int:
        return list(BoundKind).index(self)


_LABELS = {
    BoundKind.TRIVIAL_LOWER: "SWLB0",
    BoundKind.LOWER_1: "SWLB1",
    BoundKind.LOWER_T2: "SWLBt2",
    BoundKind.LOWER_T_BS: "SWLBtBS",
    BoundKind.LOWER_T_LG: "SWLBtLG",
    BoundKind.UPPER_T1_BS: "SWUBtBS",
    BoundKind.UPPER_1: "SWUB1",
}


@dataclass(frozen=True)
class BoundResult:
    """One bound: call-side value, the bond-side value after parity, diagnostics.

    ``clamped`` marks an upper bound whose bond-side value was floored at
    zero by the parity transform. ``pinned`` marks a quantile root that hit
    the end of its search range.
    """

    kind: BoundKind
    call_side: float
    put_side: float | None
    G: float | None = None
    t_star: float | None = None
    root_x: float | None = None
    model_id: str = ""
    clamped: bool = False
    pinned: bool = False


@dataclass(frozen=True)
class SuiteConfig:
    """Numerical settings for :func:`bound_suite`."""

    grid_n: int = 64
    nodes: int = 128
    t_min_fraction: float = 1e-3
    ub1_root: QuantileRoot = "generalized"
    ubt_root: QuantileRoot = "generalized"
    lg_form: Literal["closed", "quadrature", "literal"] = "closed"
    anchor: Anchor = "start"


# Settings that reproduce the reference tables of the ``table`` command.
TABLE_CONVENTION = SuiteConfig(ub1_root="literal", anchor="base")


def _finish(kind, call_side, G, model, **extra) -> BoundResult:
    put = None if G is None else call_to_put_bound(call_side, G)
    clamped = bool(G is not None and not kind.is_lower and call_side - G < 0)
    return BoundResult(kind=kind, call_side=float(call_side), put_side=put, G=G,
                       model_id=getattr(model, "kind", ""), clamped=clamped, **extra)


def _check_rate(model: MortalityModel | None, terms: BondTerms) -> None:
    if model is not None and abs(model.r - terms.rate) > 1e-15:
        raise ConfigError(f"model rate {model.r} differs from contract rate {terms.rate}")


def _root_up(f: Callable[[float], float], target: float, lo: float = 0.0, hi: float = 2.0) -> float:
    """Root of a nondecreasing ``f`` on ``[lo, inf)``, growing the upper end."""
    for _ in range(200):
        if f(hi) >= target:
            return solve_monotone_root(f, Interval(lo, hi), target, _ROOT_CFG)
        hi *= 2.0
    raise NumericalError("could not bracket the threshold equation")


def _anchor_level(model: MortalityModel, terms: BondTerms, anchor: Anchor) -> float:
    if anchor == "start":
        return model.q0
    if anchor == "base":
        return terms.q0
    raise ConfigError(f"unknown anchor {anchor!r}")


def _split(terms: BondTerms, t: float) -> int:
    """Index of the first monitoring date at or after ``t``."""
    for j, ti in enumerate(terms.dates):
        if ti >= t - _DATE_TOL:
            return j
    return terms.n


# -- lower bounds ------------------------------------------------------------

def trivial_lower(terms: BondTerms, model: MortalityModel | None = None, G: float | None = None) -> BoundResult:
    """Jensen bound ``C e^{-rT}(sum_i m (E[q_i]/q0 - k1)^+ - 1)^+``.

    Without a model the index is assumed to start at the contract base, so
    ``E[q_i] = q0 e^{r t_i}``.
    """
    _check_rate(model, terms)
    if G is None and model is not None:
        G = parity_adjustment_G(model, terms)
    r = terms.rate
    total = 0.0
    for t in terms.dates:
        mean = model.mean_at(t) if model is not None else terms.q0 * math.exp(r * t)
        total += terms.scale * max(mean / terms.q0 - terms.k1, 0.0)
    call = terms.principal * terms.discount(terms.maturity) * max(total - 1.0, 0.0)
    return _finish(BoundKind.TRIVIAL_LOWER, call, G, model)


def lower_lb1(model: MortalityModel, terms: BondTerms, G: float | None = None) -> BoundResult:
    """Conditioning on the first observation: calls at ``t_1`` only."""
    _check_rate(model, terms)
    if G is None:
        G = parity_adjustment_G(model, terms)
    r, t1, k1 = terms.rate, terms.dates[0], terms.k1
    growth = [math.exp(r * (t - t1)) for t in terms.dates]

    def f(x):
        return sum(max(g * x - k1, 0.0) for g in growth)

    x = _root_up(f, terms.width)
    T = terms.maturity
    total = sum(
        math.exp(-r * (T - t)) * model.european_call(terms.q0 * max(x, k1 / g), t1)
        for t, g in zip(terms.dates, growth)
    )
    call = terms.scale * terms.D * total
    return _finish(BoundKind.LOWER_1, call, G, model, t_star=t1, root_x=x)


def _threshold_equation(
    model: MortalityModel, terms: BondTerms, t: float, j: int, bridge: Callable[[float], float], level: float
):
    """Left side of the threshold equation at conditioning time ``t``.

    ``bridge(t_i)`` is the constant multiplying ``rho^{1-a} x^a`` for the
    dates before ``t`` (1 for the model-free bound), ``rho = level / q0``.
    """
    r, k1 = terms.rate, terms.k1
    rho = level / terms.q0
    early = [(ti / t, rho ** (1.0 - ti / t) * bridge(ti)) for ti in terms.dates[:j]]
    late = [math.exp(r * (ti - t)) for ti in terms.dates[j:]]

    def f(x):
        s = sum(max(c * x**a - k1, 0.0) for a, c in early)
        return s + sum(max(g * x - k1, 0.0) for g in late)

    return f, early, late


def _late_legs(model, terms, t, x, late) -> float:
    r, k1 = terms.rate, terms.k1
    total = 0.0
    for ti, g in zip(terms.dates[len(terms.dates) - len(late):], late):
        total += math.exp(r * ti) * model.european_call(terms.q0 * max(x, k1 / g), t)
    return total


def _geometric_leg_quadrature(model: MortalityModel, t: float, a: float, K: float, level: float) -> float:
    """``E[(level^{1-a} q_t^a - K)^+]`` by quadrature over the normal score of ``q_t``."""
    coef = level ** (1.0 - a)
    q_star = (K / coef) ** (1.0 / a)
    z_star = float(model.score(t, q_star))
    if z_star >= Z_MAX:
        return 0.0
    lo = max(z_star, -Z_MAX)

    def f(z):
        q = model.quantile_z(t, z)
        return (coef * q**a - K) * std_normal_pdf(z)

    return max(integrate(f, Interval(lo, Z_MAX), rel_tol=1e-12, abs_tol=1e-20), 0.0)


def lower_lbt2(
    model: MortalityModel, terms: BondTerms, t: float, G: float | None = None, anchor: Anchor = "start"
) -> BoundResult:
    """Model-independent bound conditioning on ``q_t``.

    Dates before ``t`` are interpolated geometrically, ``s0^{1-a} q_t^a`` with
    ``a = t_i/t``; dates at or after ``t`` use the forward ``q_t e^{r(t_i - t)}``.
    The geometric legs are integrated numerically, the others are calls at ``t``.
    """
    _check_rate(model, terms)
    model.check_time(t)
    if t > terms.maturity + _DATE_TOL:
        raise ConfigError(f"conditioning time {t} is after maturity")
    if G is None:
        G = parity_adjustment_G(model, terms)
    level = _anchor_level(model, terms, anchor)
    j = _split(terms, t)
    f, early, late = _threshold_equation(model, terms, t, j, lambda ti: 1.0, level)
    x = _root_up(f, terms.width)
    total = 0.0
    for a, c in early:
        K = terms.q0 * max(c * x**a, terms.k1)
        total += _geometric_leg_quadrature(model, t, a, K, level)
    total += _late_legs(model, terms, t, x, late)
    call = terms.scale * terms.D * terms.discount(terms.maturity) * total
    return _finish(BoundKind.LOWER_T2, call, G, model, t_star=t, root_x=x)


def lower_lbt_bs(
    model: BlackScholesModel, terms: BondTerms, t: float, G: float | None = None, anchor: Anchor = "start"
) -> BoundResult:
    """Lower bound using the exact lognormal bridge ``E[q_{t_i} | q_t]``.

    For ``t_i < t`` the conditional mean is lognormal with forward
    ``s0 e^{r t_i}`` and volatility ``sigma t_i / sqrt(t)``, so every leg is
    a Black-Scholes price.
    """
    _check_rate(model, terms)
    if not 0 < t <= terms.maturity + _DATE_TOL:
        raise ConfigError(f"conditioning time must lie in (0, T], got {t}")
    if G is None:
        G = parity_adjustment_G(model, terms)
    sig, r = model.sigma, terms.rate
    j = _split(terms, t)

    def bridge(ti):
        return math.exp(sig * sig * ti * (t - ti) / (2.0 * t))

    level = _anchor_level(model, terms, anchor)
    f, early, late = _threshold_equation(model, terms, t, j, bridge, level)
    x = _root_up(f, terms.width)
    total = 0.0
    for ti, (a, c) in zip(terms.dates[:j], early):
        K = terms.q0 * max(c * x**a, terms.k1)
        fwd = model.q0 * (level / model.q0) ** (1.0 - a) * math.exp(r * ti)
        vol = sig * ti / math.sqrt(t)
        if vol == 0:
            total += max(fwd - K, 0.0)
            continue
        d2 = (math.log(fwd / K) - 0.5 * vol * vol) / vol
        total += fwd * std_normal_cdf(d2 + vol) - K * std_normal_cdf(d2)
    total += _late_legs(model, terms, t, x, late)
    call = terms.scale * terms.D * terms.discount(terms.maturity) * total
    return _finish(BoundKind.LOWER_T_BS, call, G, model, t_star=t, root_x=x)


def _lbt_lg_closed(model: LogGammaModel, terms: BondTerms, t: float, anchor: Anchor = "start") -> tuple[float, float]:
    """Incomplete-gamma form of the ``q_t``-conditioned bound under log-gamma."""
    level = _anchor_level(model, terms, anchor)
    j = _split(terms, t)
    f, early, late = _threshold_equation(model, terms, t, j, lambda ti: 1.0, level)
    x = _root_up(f, terms.width)
    i = model.date_index(t)
    p, mu, s = model.p[i], model.mu[i], model.scale[i]
    total = 0.0
    for a, c in early:
        K = terms.q0 * max(c * x**a, terms.k1)
        A = level ** (1.0 - a) * math.exp(a * mu)
        cs = a * s
        y0 = max(math.log(K / A) / cs, 0.0)
        total += A * math.exp(-p * math.log1p(-cs)) * special.gammaincc(p, y0 * (1.0 - cs))
        total -= K * special.gammaincc(p, y0)
    total += _late_legs(model, terms, t, x, late)
    return terms.scale * terms.D * terms.discount(terms.maturity) * total, x


def _lbt_lg_printed(model: LogGammaModel, terms: BondTerms, t: float) -> tuple[float, float]:
    """The compact log-gamma expression evaluated symbol by symbol as printed.

    Kept for comparison only: the scale ``sigma'`` carries a positive
    exponent ``1/p``, ``d2'`` divides by the fitted ``sigma`` and ``d1``
    divides by ``q0 e^{rt - mu} - 1``. These do not reproduce the
    conditional expectation and the result differs from the quadrature.
    """
    r, k1, m = terms.rate, terms.k1, terms.scale
    q0 = terms.q0
    j = _split(terms, t)
    i = model.date_index(t)
    p, mu, sig = model.p[i], model.mu[i], model.sigma[i]

    def f(x):
        s = sum(max(x ** (ti / t) - k1, 0.0) for ti in terms.dates[:j])
        return s + sum(max(x * math.exp(r * (ti - t)) - k1, 0.0) for ti in terms.dates[j:])

    x = _root_up(f, terms.width)
    anchor = model.q0 * math.exp(r * t - mu)
    s1 = 1.0 - anchor ** (1.0 / p)
    total = 0.0
    for ti in terms.dates[:j]:
        a = ti / t
        s2 = 1.0 - s1 * a
        d1p = q0 * (k1 + max(x**a - k1, 0.0)) ** (1.0 / a)
        K1 = d1p**a
        d2p = max((math.log(d1p) - mu) / sig, 0.0)
        lead = math.exp(a * mu) / s2**p * special.gammaincc(p, s2 * d2p)
        total += q0 ** (-a) * (lead - K1 * special.gammaincc(p, d2p))
    for ti in terms.dates[j:]:
        g = math.exp(-r * (ti - t))
        K2 = q0 * (k1 * g + max(x - k1 * g, 0.0))
        d1 = (math.log(K2) - mu) / (anchor - 1.0)
        d2 = d1 + math.log(K2) - mu
        body = model.q0 * math.exp(r * t) * special.gammaincc(p, max(d1, 0.0))
        body -= K2 * special.gammaincc(p, max(d2, 0.0))
        total += math.exp(r * (ti - t)) / q0 * body
    return m * terms.principal * math.exp(-r * terms.maturity) * total, x


def lower_lbt_lg(
    model: LogGammaModel,
    terms: BondTerms,
    t: float,
    G: float | None = None,
    form: Literal["closed", "quadrature", "literal"] = "closed",
    anchor: Anchor = "start",
) -> BoundResult:
    """``q_t``-conditioned bound for log-gamma marginals.

    ``form="closed"`` uses incomplete gamma functions, ``"quadrature"`` the
    generic :func:`lower_lbt2` route and ``"literal"`` the printed compact
    expression (see :func:`lbt_lg_discrepancy`).
    """
    _check_rate(model, terms)
    model.check_time(t)
    if G is None:
        G = parity_adjustment_G(model, terms)
    if form == "quadrature":
        res = lower_lbt2(model, terms, t, G, anchor)
        return replace(res, kind=BoundKind.LOWER_T_LG)
    if form == "closed":
        call, x = _lbt_lg_closed(model, terms, t, anchor)
    elif form == "literal":
        call, x = _lbt_lg_printed(model, terms, t)
    else:
        raise ConfigError(f"unknown log-gamma form {form!r}")
    return _finish(BoundKind.LOWER_T_LG, call, G, model, t_star=t, root_x=x)


@dataclass(frozen=True)
class LgDiscrepancy:
    """Comparison of the three log-gamma evaluations at one conditioning date."""

    t: float
    closed: float
    quadrature: float
    literal: float

    @property
    def closed_gap(self) -> float:
        return self.closed - self.quadrature

    @property
    def literal_gap(self) -> float:
        return self.literal - self.quadrature

    @property
    def literal_agrees(self) -> bool:
        return abs(self.literal_gap) <= 1e-6 * max(abs(self.quadrature), 1e-300)


def lbt_lg_discrepancy(model: LogGammaModel, terms: BondTerms, anchor: Anchor = "start") -> list[LgDiscrepancy]:
    """Call-side values of the log-gamma bound by closed form, quadrature and printed form."""
    out = []
    for t in terms.dates:
        closed, _ = _lbt_lg_closed(model, terms, t, anchor)
        quad = lower_lbt2(model, terms, t, G=0.0, anchor=anchor).call_side
        try:
            literal, _ = _lbt_lg_printed(model, terms, t)
        except (ValueError, OverflowError, ZeroDivisionError):
            literal = math.nan
        out.append(LgDiscrepancy(t=t, closed=closed, quadrature=quad, literal=literal))
    return out


# -- upper bounds ------------------------------------------------------------

def comonotonic_sum_quantile(model: MortalityModel, terms: BondTerms, z):
    """Quantile of the comonotonic sum ``S^c`` at normal score ``z``: ``sum_i F_{S_i}^{-1}``."""
    z = np.asarray(z, dtype=float)
    total = np.zeros_like(z)
    for t in terms.dates:
        total = total + terms.scale * np.maximum(model.quantile_z(t, z) - terms.k1 * terms.q0, 0.0)
    return total if total.ndim else float(total)


def upper_ub1(
    model: MortalityModel,
    terms: BondTerms,
    G: float | None = None,
    root: QuantileRoot = "generalized",
    anchor: Anchor = "start",
) -> BoundResult:
    """Comonotonic upper bound: calls struck at the common quantile level.

    The root is searched in normal-score space; ``root_x`` reports the
    probability level. If the quantile sum cannot reach the target the level
    is pinned to the end of the range and ``pinned`` is set. With
    ``anchor="base"`` the strikes are quantiles of the index started at the
    contract base while the calls are priced under ``model``.
    """
    _check_rate(model, terms)
    if G is None:
        G = parity_adjustment_G(model, terms)
    qc, k1 = terms.q0, terms.k1
    split = model.with_start(_anchor_level(model, terms, anchor))
    if root == "literal":
        target = qc * (terms.width + k1 * terms.n)

        def f(z):
            return float(sum(split.quantile_z(t, z) for t in terms.dates))
    elif root == "generalized":
        target = terms.width * qc

        def f(z):
            return float(sum(max(split.quantile_z(t, z) - k1 * qc, 0.0) for t in terms.dates))
    else:
        raise ConfigError(f"unknown quantile root {root!r}")

    pinned = False
    excess = 0.0
    if f(_Z_ROOT) < target:
        z, pinned = _Z_ROOT, True
    elif f(-_Z_ROOT) > target:
        z, pinned = -_Z_ROOT, True
        # retention below the smallest attainable sum: the stop-loss is linear
        excess = f(z) - target
    else:
        z = solve_monotone_root(f, Interval(-_Z_ROOT, _Z_ROOT), target, _ROOT_CFG)
    r = terms.rate
    total = excess * math.exp(r * terms.maturity)
    for t in terms.dates:
        K = float(split.quantile_z(t, z))
        if root == "generalized":
            K = max(K, k1 * qc)
        total += math.exp(r * t) * model.european_call(K, t)
    call = terms.scale * terms.D * terms.discount(terms.maturity) * total
    return _finish(BoundKind.UPPER_1, call, G, model, root_x=float(std_normal_cdf(z)), pinned=pinned)


_SCAN = np.linspace(-Z_MAX, Z_MAX, 481)


def _sign_changes(h: Callable[[np.ndarray], np.ndarray]) -> list[float]:
    """Zeros of ``h`` on ``[-Z_MAX, Z_MAX]`` located by a grid scan and refined."""
    vals = h(_SCAN)
    out = []
    for i in np.flatnonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0):
        a, b = float(_SCAN[i]), float(_SCAN[i + 1])
        sgn = 1.0 if vals[i] < 0 else -1.0
        g = lambda z: sgn * float(h(np.array([z]))[0])
        out.append(solve_monotone_root(g, Interval(a, b), 0.0, _ROOT_CFG))
    return out


def _ubt_outer_rule(
    loc0: np.ndarray, slope: np.ndarray, sd: np.ndarray, terms: BondTerms, nodes: int, root: QuantileRoot
) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights in the normal score ``z`` of ``W_t`` for the outer integral.

    The inner value is piecewise smooth in ``z``. It kinks where a date
    known given ``W_t`` crosses the trigger, where the known legs alone
    cover the retention and, for the generalized root, where a date enters
    or leaves the set of strikes above the trigger. Gauss-Legendre panels
    are placed between those points.
    """
    qc, k1 = terms.q0, terms.k1
    trig = math.log(k1 * qc)
    known = sd == 0
    kinks = [(trig - a) / b for a, b in zip(loc0[known], slope[known])]
    if known.any():
        def covered(z):
            lv = np.exp(loc0[known][None, :] + slope[known][None, :] * z[:, None])
            return np.sum(terms.scale * np.maximum(lv - k1 * qc, 0.0), axis=1) - qc

        kinks += _sign_changes(covered)
    if root == "generalized":
        for i in np.flatnonzero(~known):
            def active(z, i=i):
                # spread sum when date i sits exactly at the trigger
                y = (trig - loc0[i] - slope[i] * z) / sd[i]
                with np.errstate(over="ignore"):
                    lv = np.exp(loc0[None, :] + slope[None, :] * z[:, None] + sd[None, :] * y[:, None])
                    return np.sum(np.maximum(lv - k1 * qc, 0.0), axis=1) - terms.width * qc

            kinks += _sign_changes(active)
    edges = sorted({-Z_MAX, Z_MAX, *(k for k in kinks if -Z_MAX < k < Z_MAX)})
    per = max(nodes // (len(edges) - 1), 24)
    x, w = np.polynomial.legendre.leggauss(per)
    zs, ws = [], []
    for a, b in zip(edges, edges[1:]):
        half = 0.5 * (b - a)
        z = a + half * (x + 1.0)
        zs.append(z)
        ws.append(half * w * std_normal_pdf(z))
    return np.concatenate(zs), np.concatenate(ws)


def upper_ubt_bs(
    model: BlackScholesModel,
    terms: BondTerms,
    t: float,
    G: float | None = None,
    nodes: int = 128,
    root: QuantileRoot = "generalized",
) -> BoundResult:
    """Conditional comonotonic upper bound given ``W_t`` under Black-Scholes.

    For each outer node ``w`` the conditional laws of ``q_{t_i}`` are
    lognormal; the strikes are their conditional quantiles at the level
    solving the quantile-sum equation, and the conditional calls are
    averaged over ``w``.
    """
    _check_rate(model, terms)
    if not 0 < t <= terms.maturity + _DATE_TOL:
        raise ConfigError(f"conditioning time must lie in (0, T], got {t}")
    if root not in ("literal", "generalized"):
        raise ConfigError(f"unknown quantile root {root!r}")
    if G is None:
        G = parity_adjustment_G(model, terms)
    sig, r, s0 = model.sigma, terms.rate, model.q0
    qc, k1 = terms.q0, terms.k1
    dates = np.asarray(terms.dates)

    frac = np.minimum(dates, t) / t
    gap = np.where(dates < t, dates * (t - dates) / t, dates - t)
    sd = sig * np.sqrt(np.maximum(gap, 0.0))
    sd[np.abs(dates - t) <= _DATE_TOL] = 0.0
    # conditional log-mean is loc0 + slope * z with z the normal score of W_t
    loc0 = math.log(s0) + (r - 0.5 * sig * sig) * dates
    slope = sig * frac * math.sqrt(t)
    z, wts = _ubt_outer_rule(loc0, slope, sd, terms, nodes, root)
    loc = loc0[None, :] + slope[None, :] * z[:, None]
    n_out = z.size

    def quantiles(y):
        return np.exp(loc + sd[None, :] * y[:, None])

    if root == "literal":
        target = np.full(n_out, qc * (terms.width + k1 * terms.n))

        def f(y):
            return quantiles(y).sum(axis=1)
    else:
        target = np.full(n_out, terms.width * qc)

        def f(y):
            return np.maximum(quantiles(y) - k1 * qc, 0.0).sum(axis=1)

    y, pinned = solve_monotone_roots(f, -40.0, 40.0, target, RootConfig(abs_tol=1e-14, max_iter=400))
    K = quantiles(y)
    if root == "generalized":
        K = np.maximum(K, k1 * qc)
    A = np.exp(loc)
    with np.errstate(divide="ignore", invalid="ignore"):
        sdm = np.broadcast_to(sd, A.shape)
        d2 = np.log(A / K) / sdm
        smooth = A * np.exp(0.5 * sdm * sdm) * std_normal_cdf(d2 + sdm) - K * std_normal_cdf(d2)
    legs = np.where(sdm > 0, smooth, np.maximum(A - K, 0.0)).sum(axis=1)
    # retention below the smallest attainable sum: the stop-loss is linear
    legs = legs + np.where(pinned < 0, f(y) - target, 0.0)
    total = float(np.dot(wts, legs))
    call = terms.scale * terms.D * terms.discount(terms.maturity) * total
    return _finish(BoundKind.UPPER_T1_BS, call, G, model, t_star=t, pinned=bool(np.any(pinned)))


# -- optimisation over t -----------------------------------------------------

def best_lower_t(
    model: MortalityModel,
    terms: BondTerms,
    G: float | None = None,
    cfg: SuiteConfig = SuiteConfig(),
) -> BoundResult:
    """Best conditioning-time lower bound for the model family.

    Black-Scholes: :func:`lower_lbt_bs` maximised over ``(0, T]``.
    Log-gamma: :func:`lower_lbt_lg` maximised over the monitoring dates.
    Otherwise: :func:`lower_lbt2` maximised over the monitoring dates.
    """
    if G is None:
        G = parity_adjustment_G(model, terms)
    if isinstance(model, BlackScholesModel):
        lo = cfg.t_min_fraction * terms.maturity
        t, _ = optimize_scalar(
            lambda s: lower_lbt_bs(model, terms, s, G, cfg.anchor).call_side,
            Interval(lo, terms.maturity), "maximize", cfg.grid_n,
        )
        return lower_lbt_bs(model, terms, t, G, cfg.anchor)
    if isinstance(model, LogGammaModel):
        cands = [lower_lbt_lg(model, terms, t, G, cfg.lg_form, cfg.anchor) for t in terms.dates]
    else:
        cands = [lower_lbt2(model, terms, t, G, cfg.anchor) for t in terms.dates]
    return max(cands, key=lambda b: b.call_side)


def best_upper_t(
    model: BlackScholesModel,
    terms: BondTerms,
    G: float | None = None,
    cfg: SuiteConfig = SuiteConfig(),
) -> BoundResult:
    """:func:`upper_ubt_bs` minimised over ``(0, T]``."""
    if G is None:
        G = parity_adjustment_G(model, terms)
    lo = cfg.t_min_fraction * terms.maturity
    t, _ = optimize_scalar(
        lambda s: upper_ubt_bs(model, terms, s, G, cfg.nodes, cfg.ubt_root).call_side,
        Interval(lo, terms.maturity), "minimize", cfg.grid_n,
    )
    return upper_ubt_bs(model, terms, t, G, cfg.nodes, cfg.ubt_root)


def bound_suite(model: MortalityModel, terms: BondTerms, cfg: SuiteConfig = SuiteConfig()) -> list[BoundResult]:
    """Every bound available for the model family, sharing one ``G``.

    Results are ordered from the trivial lower bound to the comonotonic
    upper bound.
    """
    G = parity_adjustment_G(model, terms)
    lower_t = BoundKind.LOWER_T_BS if isinstance(model, BlackScholesModel) else (
        BoundKind.LOWER_T_LG if isinstance(model, LogGammaModel) else BoundKind.LOWER_T2
    )
    jobs = [
        (BoundKind.TRIVIAL_LOWER, lambda: trivial_lower(terms, model, G)),
        (BoundKind.LOWER_1, lambda: lower_lb1(model, terms, G)),
        (lower_t, lambda: best_lower_t(model, terms, G, cfg)),
    ]
    if isinstance(model, BlackScholesModel):
        jobs.append((BoundKind.UPPER_T1_BS, lambda: best_upper_t(model, terms, G, cfg)))
    jobs.append((BoundKind.UPPER_1, lambda: upper_ub1(model, terms, G, cfg.ub1_root, cfg.anchor)))
    out = []
    for kind, job in jobs:
        try:
            out.append(job())
        except NumericalError as exc:
            raise NumericalError(f"{kind.label}: {exc}") from exc
    return sorted(out, key=lambda b: b.kind.order)
