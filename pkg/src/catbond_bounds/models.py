"""Laws of the mortality index and European calls written on it.

Three families are provided: geometric Brownian motion (continuous in time)
and the year-wise fitted Johnson S_U and log-gamma marginals. Every model
exposes the index law through a normal-score parameterisation: the quantile
at score ``z`` is the quantile at probability ``Phi(z)``. Working with scores
keeps tail quantiles accurate where ``u`` itself would round to 0 or 1.

The fitted families are by default recentred so that ``E[q_t] = q0 e^{r t}``
at each date (``calibrate=True``). For S_U the location ``mu`` is solved
per date; for log-gamma the scale multiplying the Gamma(p, 1) variable is.
Pass ``calibrate=False`` to use the published parameters unchanged.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np
from scipy import special

from .contract import BondTerms, read_flat_config
from .errors import ConfigError
from .numerics import (
    Interval,
    integrate,
    std_normal_cdf,
    std_normal_pdf,
    std_normal_quantile,
    std_normal_sf,
)

__all__ = [
    "MortalityModel",
    "BlackScholesModel",
    "JohnsonSuModel",
    "LogGammaModel",
    "PRESETS",
    "preset_model",
    "preset_terms",
    "model_from_mapping",
    "load_model_config",
    "bs_marginal_quantile",
    "bs_european_call",
    "bs_conditional_mean",
    "bs_conditional_quantile_given_W",
    "su_marginal_quantile",
    "su_european_call",
    "lg_marginal_quantile",
    "lg_european_call",
]

# Scores beyond this carry less than 1e-32 of normal mass.
Z_MAX = 12.0
_DATE_TOL = 1e-9


def _as_float(x):
    return x if np.ndim(x) else float(x)


class MortalityModel(ABC):
    """Common interface: marginal laws at the monitoring dates and calls.

    Subclasses implement the score-based primitives; the index-based
    ``marginal_*`` accessors and the quadrature call price are derived.
    """

    q0: float
    r: float
    dates: tuple[float, ...]
    kind: str = "model"
    continuous_time: bool = False
    positive_support: bool = True

    # -- primitives --------------------------------------------------------
    @abstractmethod
    def quantile_z(self, t: float, z):
        """Index level whose distribution function equals ``Phi(z)``."""

    @abstractmethod
    def score(self, t: float, x):
        """Normal score ``Phi^{-1}(F_t(x))``; ``-inf``/``+inf`` off the support."""

    @abstractmethod
    def density_at(self, t: float, x):
        """Marginal density of the index at time ``t``."""

    @abstractmethod
    def mean_at(self, t: float) -> float:
        """``E[q_t]`` under the pricing measure."""

    # -- derived -----------------------------------------------------------
    def date_index(self, t: float) -> int:
        for i, d in enumerate(self.dates):
            if abs(d - t) <= _DATE_TOL:
                return i
        raise ConfigError(f"{self.kind} marginals exist only at dates {self.dates}, not t={t}")

    def check_time(self, t: float) -> None:
        if self.continuous_time:
            if not t > 0:
                raise ConfigError(f"time must be positive, got {t}")
        else:
            self.date_index(t)

    def cdf_at(self, t: float, x):
        return _as_float(std_normal_cdf(self.score(t, x)))

    def quantile_at(self, t: float, u):
        return self.quantile_z(t, std_normal_quantile(u))

    def european_call(self, K: float, t: float) -> float:
        """Discounted call ``e^{-rt} E[(q_t - K)^+]``."""
        return self.european_call_quadrature(K, t)

    def european_call_quadrature(self, K: float, t: float, rel_tol: float = 1e-11) -> float:
        """Call price by quadrature of ``(F^{-1}(Phi(z)) - K)^+`` against ``phi(z)``."""
        self.check_time(t)
        disc = math.exp(-self.r * t)
        if K <= 0 and self.positive_support:
            return disc * (self.mean_at(t) - K)
        zk = float(self.score(t, K))
        if zk >= Z_MAX:
            return 0.0
        lo = max(zk, -Z_MAX)

        def f(z):
            return (self.quantile_z(t, z) - K) * std_normal_pdf(z)

        val = integrate(f, Interval(lo, Z_MAX), rel_tol=rel_tol, abs_tol=1e-18)
        return disc * max(val, 0.0)

    def marginal_cdf(self, i: int, x):
        return self.cdf_at(self.dates[i], x)

    def marginal_quantile(self, i: int, u):
        return self.quantile_at(self.dates[i], u)

    def marginal_density(self, i: int, x):
        return self.density_at(self.dates[i], x)

    def mean(self, i: int) -> float:
        return self.mean_at(self.dates[i])

    def with_rate(self, r: float) -> "MortalityModel":
        """Same parameters at another interest rate (recalibrated if applicable)."""
        return dataclasses.replace(self, r=r)

    def with_start(self, q0: float) -> "MortalityModel":
        return dataclasses.replace(self, q0=q0)


def _check_dates(dates) -> tuple[float, ...]:
    dates = tuple(float(t) for t in dates)
    if not dates or any(t <= 0 for t in dates) or any(b <= a for a, b in zip(dates, dates[1:])):
        raise ConfigError(f"dates must be positive and strictly increasing, got {dates}")
    return dates


@dataclass(frozen=True)
class BlackScholesModel(MortalityModel):
    """Geometric Brownian motion ``dq = r q dt + sigma q dW`` started at ``q0``."""

    q0: float = 0.008453
    r: float = 0.0
    sigma: float = 0.0388
    dates: tuple[float, ...] = (1.0, 2.0, 3.0)
    kind: str = field(default="bs", init=False)
    continuous_time: bool = field(default=True, init=False)

    def __post_init__(self):
        object.__setattr__(self, "dates", _check_dates(self.dates))
        if not self.q0 > 0:
            raise ConfigError(f"q0 must be positive, got {self.q0}")
        if not self.sigma >= 0:
            raise ConfigError(f"sigma must be nonnegative, got {self.sigma}")

    def _drift(self, t):
        return (self.r - 0.5 * self.sigma**2) * t

    def quantile_z(self, t, z):
        z = np.asarray(z, dtype=float)
        return _as_float(self.q0 * np.exp(self._drift(t) + self.sigma * math.sqrt(t) * z))

    def score(self, t, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            logm = np.log(np.where(x > 0, x, np.nan) / self.q0) - self._drift(t)
            if self.sigma == 0:
                out = np.where(logm >= 0, np.inf, -np.inf)
            else:
                out = logm / (self.sigma * math.sqrt(t))
        out = np.where(x > 0, out, -np.inf)
        return _as_float(out)

    def density_at(self, t, x):
        x = np.asarray(x, dtype=float)
        sd = self.sigma * math.sqrt(t)
        with np.errstate(divide="ignore", invalid="ignore"):
            z = (np.log(np.where(x > 0, x, np.nan) / self.q0) - self._drift(t)) / sd
            out = np.where(x > 0, std_normal_pdf(z) / (x * sd), 0.0)
        return _as_float(out)

    def mean_at(self, t):
        return self.q0 * math.exp(self.r * t)

    def european_call(self, K, t):
        """Black-Scholes call ``q0 Phi(d1) - K e^{-rt} Phi(d2)``."""
        if not t > 0:
            raise ConfigError(f"time must be positive, got {t}")
        disc = math.exp(-self.r * t)
        if K <= 0:
            return self.q0 - K * disc
        sd = self.sigma * math.sqrt(t)
        if sd == 0:
            return max(self.q0 - K * disc, 0.0)
        d1 = (math.log(self.q0 / K) + (self.r + 0.5 * self.sigma**2) * t) / sd
        return float(self.q0 * std_normal_cdf(d1) - K * disc * std_normal_cdf(d1 - sd))

    def conditional_mean(self, t_i: float, t: float, q_t):
        """``E[q_{t_i} | q_t]``: geometric bridge before ``t``, forward after."""
        q_t = np.asarray(q_t, dtype=float)
        if t_i < t:
            a = t_i / t
            c = self.sigma**2 * t_i * (t - t_i) / (2.0 * t)
            return _as_float(self.q0 * (q_t / self.q0) ** a * math.exp(c))
        return _as_float(q_t * math.exp(self.r * (t_i - t)))

    def conditional_quantile_given_w(self, t_i: float, t: float, w, x):
        """Quantile of ``q_{t_i}`` given ``W_t = w`` at probability ``x``."""
        w = np.asarray(w, dtype=float)
        z = std_normal_quantile(x)
        base = self._drift(t_i)
        if t_i < t:
            loc = self.sigma * (t_i / t) * w
            spread = math.sqrt(t_i * (t - t_i) / t)
        else:
            loc = self.sigma * w
            spread = math.sqrt(t_i - t)
        return _as_float(self.q0 * np.exp(base + loc + self.sigma * spread * z))


@dataclass(frozen=True)
class JohnsonSuModel(MortalityModel):
    """Year-wise Johnson S_U marginals ``q = alpha + beta sinh(mu + sigma Z)``.

    With ``calibrate=True`` each ``mu`` is replaced by the value that gives
    ``E[q_t] = q0 e^{r t}``; the supplied ``mu`` is then ignored.
    """

    alpha: tuple[float, ...] = (0.008399, 0.008169, 0.007905)
    beta: tuple[float, ...] = (0.000298, 0.000613, 0.000904)
    mu: tuple[float, ...] = (0.70780, 0.58728, 0.58743)
    sigma: tuple[float, ...] = (0.67281, 0.50654, 0.42218)
    q0: float = 0.008453
    r: float = 0.0
    dates: tuple[float, ...] = (1.0, 2.0, 3.0)
    calibrate: bool = True
    kind: str = field(default="su", init=False)
    positive_support: bool = field(default=False, init=False)
    location: tuple[float, ...] = field(default=(), init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "dates", _check_dates(self.dates))
        n = len(self.dates)
        for name in ("alpha", "beta", "mu", "sigma"):
            row = tuple(float(v) for v in getattr(self, name))
            if len(row) != n:
                raise ConfigError(f"S_U parameter {name} needs {n} entries, got {len(row)}")
            object.__setattr__(self, name, row)
        if any(b <= 0 for b in self.beta) or any(s <= 0 for s in self.sigma):
            raise ConfigError("S_U beta and sigma must be positive")
        if self.calibrate:
            if not self.q0 > 0:
                raise ConfigError(f"q0 must be positive, got {self.q0}")
            loc = tuple(
                math.asinh((self.q0 * math.exp(self.r * t) - a) / (b * math.exp(0.5 * s * s)))
                for t, a, b, s in zip(self.dates, self.alpha, self.beta, self.sigma)
            )
        else:
            loc = self.mu
        object.__setattr__(self, "location", loc)

    def _params(self, t):
        i = self.date_index(t)
        return self.alpha[i], self.beta[i], self.location[i], self.sigma[i]

    def quantile_z(self, t, z):
        a, b, m, s = self._params(t)
        return _as_float(a + b * np.sinh(m + s * np.asarray(z, dtype=float)))

    def score(self, t, x):
        a, b, m, s = self._params(t)
        return _as_float((np.arcsinh((np.asarray(x, dtype=float) - a) / b) - m) / s)

    def density_at(self, t, x):
        a, b, m, s = self._params(t)
        x = np.asarray(x, dtype=float)
        z = (np.arcsinh((x - a) / b) - m) / s
        return _as_float(std_normal_pdf(z) / (s * np.hypot(x - a, b)))

    def mean_at(self, t):
        a, b, m, s = self._params(t)
        return a + b * math.exp(0.5 * s * s) * math.sinh(m)

    def european_call(self, K, t):
        """Closed form from the lognormal pieces of ``sinh``."""
        a, b, m, s = self._params(t)
        z0 = (math.asinh((K - a) / b) - m) / s
        up = math.exp(m + 0.5 * s * s) * std_normal_sf(z0 - s)
        down = math.exp(-m + 0.5 * s * s) * std_normal_sf(z0 + s)
        value = 0.5 * b * (up - down) + (a - K) * std_normal_sf(z0)
        return math.exp(-self.r * t) * max(float(value), 0.0)


@dataclass(frozen=True)
class LogGammaModel(MortalityModel):
    """Year-wise log-gamma marginals ``ln q = mu + s Y`` with ``Y ~ Gamma(p, 1)``.

    Uncalibrated, the scale is ``s = sigma / a`` (``a`` read as a rate). With
    ``calibrate=True`` it is ``s = 1 - (q0 e^{r t - mu})^{-1/p}``, which is
    the unique scale giving ``E[q_t] = q0 e^{r t}``; ``a`` and ``sigma`` are
    then unused.
    """

    p: tuple[float, ...] = (61.6326, 64.2902, 71.8574)
    a: tuple[float, ...] = (0.0103, 0.0098, 0.0080)
    mu: tuple[float, ...] = (-5.2452, -5.4600, -5.7238)
    sigma: tuple[float, ...] = (7.4e-5, 9.5e-5, 9.4e-5)
    q0: float = 0.0088
    r: float = 0.0
    dates: tuple[float, ...] = (1.0, 2.0, 3.0)
    calibrate: bool = True
    kind: str = field(default="lg", init=False)
    scale: tuple[float, ...] = field(default=(), init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "dates", _check_dates(self.dates))
        n = len(self.dates)
        for name in ("p", "a", "mu", "sigma"):
            row = tuple(float(v) for v in getattr(self, name))
            if len(row) != n:
                raise ConfigError(f"log-gamma parameter {name} needs {n} entries, got {len(row)}")
            object.__setattr__(self, name, row)
        if any(v <= 0 for v in self.p + self.a + self.sigma):
            raise ConfigError("log-gamma p, a and sigma must be positive")
        if self.calibrate:
            if not self.q0 > 0:
                raise ConfigError(f"q0 must be positive, got {self.q0}")
            sc = []
            for t, p, m in zip(self.dates, self.p, self.mu):
                ratio = self.q0 * math.exp(self.r * t - m)
                if ratio <= 1.0:
                    raise ConfigError(
                        f"cannot calibrate log-gamma at t={t}: mean {self.q0 * math.exp(self.r * t)} "
                        f"is not above the support floor e^mu={math.exp(m)}"
                    )
                sc.append(-math.expm1(-math.log(ratio) / p))
            scale = tuple(sc)
        else:
            scale = tuple(s / a for s, a in zip(self.sigma, self.a))
            if any(s >= 1 for s in scale):
                raise ConfigError("log-gamma scale sigma/a must be below 1 for a finite mean")
        object.__setattr__(self, "scale", scale)

    def _params(self, t):
        i = self.date_index(t)
        return self.p[i], self.mu[i], self.scale[i]

    def gamma_score_quantile(self, t, z):
        """Gamma(p, 1) quantile at score ``z``, using the upper tail for ``z > 0``."""
        p, _, _ = self._params(t)
        z = np.asarray(z, dtype=float)
        lower = special.gammaincinv(p, std_normal_cdf(np.minimum(z, 0.0)))
        upper = special.gammainccinv(p, std_normal_sf(np.maximum(z, 0.0)))
        return np.where(z <= 0, lower, upper)

    def quantile_z(self, t, z):
        _, m, s = self._params(t)
        return _as_float(np.exp(m + s * self.gamma_score_quantile(t, z)))

    def score(self, t, x):
        p, m, s = self._params(t)
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            y = np.where(x > math.exp(m), (np.log(np.where(x > 0, x, 1.0)) - m) / s, 0.0)
        lower = special.gammainc(p, y)
        upper = special.gammaincc(p, y)
        with np.errstate(divide="ignore"):
            z = np.where(lower < 0.5, special.ndtri(lower), -special.ndtri(upper))
        z = np.where(x > math.exp(m), z, -np.inf)
        return _as_float(z)

    def density_at(self, t, x):
        p, m, s = self._params(t)
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            y = (np.log(np.where(x > 0, x, 1.0)) - m) / s
            logf = (p - 1.0) * np.log(y) - y - special.gammaln(p)
            out = np.where(y > 0, np.exp(logf) / (s * x), 0.0)
        return _as_float(out)

    def mean_at(self, t):
        p, m, s = self._params(t)
        return math.exp(m - p * math.log1p(-s))

    def european_call(self, K, t):
        """Closed form via regularised upper incomplete gamma functions."""
        p, m, s = self._params(t)
        disc = math.exp(-self.r * t)
        mean = self.mean_at(t)
        if K <= 0:
            return disc * (mean - K)
        y0 = max((math.log(K) - m) / s, 0.0)
        value = mean * special.gammaincc(p, y0 * (1.0 - s)) - K * special.gammaincc(p, y0)
        return disc * max(float(value), 0.0)


# -- spec-level convenience functions ----------------------------------------

def bs_marginal_quantile(model: BlackScholesModel, t: float, u):
    return model.quantile_at(t, u)


def bs_european_call(model: BlackScholesModel, K: float, t: float) -> float:
    return model.european_call(K, t)


def bs_conditional_mean(model: BlackScholesModel, t_i: float, t: float, q_t):
    return model.conditional_mean(t_i, t, q_t)


def bs_conditional_quantile_given_W(model: BlackScholesModel, t_i: float, t: float, w, x):
    return model.conditional_quantile_given_w(t_i, t, w, x)


def su_marginal_quantile(model: JohnsonSuModel, i: int, u):
    return model.marginal_quantile(i, u)


def su_european_call(model: JohnsonSuModel, K: float, i: int) -> float:
    return model.european_call(K, model.dates[i])


def lg_marginal_quantile(model: LogGammaModel, i: int, u):
    return model.marginal_quantile(i, u)


def lg_european_call(model: LogGammaModel, K: float, i: int) -> float:
    return model.european_call(K, model.dates[i])


# -- presets and config ------------------------------------------------------

PRESETS: dict[str, dict] = {
    "lin2007": {"kind": "bs", "base": 0.008453, "params": {"q0": 0.008453, "sigma": 0.0388}},
    "tsai-su": {
        "kind": "su",
        "base": 0.008453,
        "params": {
            "q0": 0.008453,
            "alpha": (0.008399, 0.008169, 0.007905),
            "beta": (0.000298, 0.000613, 0.000904),
            "mu": (0.70780, 0.58728, 0.58743),
            "sigma": (0.67281, 0.50654, 0.42218),
        },
    },
    "cheng-lg": {
        "kind": "lg",
        "base": 0.0088,
        "params": {
            "q0": 0.0088,
            "p": (61.6326, 64.2902, 71.8574),
            "a": (0.0103, 0.0098, 0.0080),
            "mu": (-5.2452, -5.4600, -5.7238),
            "sigma": (7.4e-5, 9.5e-5, 9.4e-5),
        },
    },
}

_KINDS = {"bs": BlackScholesModel, "su": JohnsonSuModel, "lg": LogGammaModel}


def _preset(name: str) -> dict:
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}") from None


def preset_model(name: str, r: float = 0.0, q0: float | None = None, calibrate: bool = True) -> MortalityModel:
    """Model for a named preset at rate ``r``, optionally started at ``q0``."""
    spec = _preset(name)
    params = dict(spec["params"], r=r)
    if q0 is not None:
        params["q0"] = q0
    if spec["kind"] != "bs":
        params["calibrate"] = calibrate
    return _KINDS[spec["kind"]](**params)


def preset_terms(name: str, r: float = 0.0, **overrides) -> BondTerms:
    """Contract terms matching a preset: base level from the preset, given rate."""
    spec = _preset(name)
    kwargs = {"q0": spec["base"], "rate": r}
    kwargs.update(overrides)
    return BondTerms(**kwargs)


def _floats(value: str) -> tuple[float, ...]:
    parts = [p for p in value.replace(";", ",").split(",") if p.strip()]
    try:
        return tuple(float(p) for p in parts)
    except ValueError:
        raise ConfigError(f"cannot parse numbers from {value!r}") from None


def model_from_mapping(raw: Mapping[str, str]) -> tuple[MortalityModel, BondTerms]:
    """Build a model and contract terms from flat string key-value pairs.

    Keys: ``model`` (``bs``/``su``/``lg``), ``r``, ``q0`` (model start),
    ``base`` (contract base, defaults to ``q0``), ``k1``, ``k2``, ``dates``,
    ``principal``, ``calibrate`` and the family parameters (``sigma`` for
    ``bs``; ``alpha, beta, mu, sigma`` for ``su``; ``p, a, mu, sigma`` for
    ``lg``) as comma-separated per-date rows.
    """
    raw = {k.strip().lower(): v.strip() for k, v in raw.items()}
    kind = raw.pop("model", None)
    if kind is None:
        preset = raw.pop("preset", None)
        if preset is None:
            raise ConfigError("config needs a 'model' or 'preset' key")
        spec = _preset(preset)
        kind = spec["kind"]
        merged = {k: (",".join(map(str, v)) if isinstance(v, tuple) else str(v)) for k, v in spec["params"].items()}
        merged.setdefault("base", str(spec["base"]))
        merged.update(raw)
        raw = merged
    if kind not in _KINDS:
        raise ConfigError(f"unknown model kind {kind!r}")

    def num(key, default=None):
        if key not in raw:
            if default is None:
                raise ConfigError(f"config is missing {key!r}")
            return default
        vals = _floats(raw[key])
        if len(vals) != 1:
            raise ConfigError(f"{key!r} must be a single number")
        return vals[0]

    r = num("r", 0.0)
    q0 = num("q0")
    dates = _floats(raw["dates"]) if "dates" in raw else (1.0, 2.0, 3.0)
    calibrate = raw.get("calibrate", "true").lower() in ("1", "true", "yes", "on")
    if kind == "bs":
        model = BlackScholesModel(q0=q0, r=r, sigma=num("sigma"), dates=dates)
    else:
        names = ("alpha", "beta", "mu", "sigma") if kind == "su" else ("p", "a", "mu", "sigma")
        missing = [k for k in names if k not in raw]
        if missing:
            raise ConfigError(f"config is missing {', '.join(missing)}")
        rows = {k: _floats(raw[k]) for k in names}
        model = _KINDS[kind](q0=q0, r=r, dates=dates, calibrate=calibrate, **rows)
    terms = BondTerms(
        q0=num("base", q0), k1=num("k1", 1.3), k2=num("k2", 1.5), dates=dates,
        principal=num("principal", 1.0), rate=r,
    )
    return model, terms


def load_model_config(path: str | Path) -> tuple[MortalityModel, BondTerms]:
    return model_from_mapping(read_flat_config(path))
