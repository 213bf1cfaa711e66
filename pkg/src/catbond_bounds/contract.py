"""Cash-flow mechanics of the mortality catastrophe bond.

Index construction, tranche loss, principal payoff in both its loss-ratio
and Asian-put forms, the call counterpart, the coupon leg, the put-call
parity adjustment ``G`` and the call-to-put bound transform.
"""

from __future__ import annotations

import configparser
import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import ConfigError, DataError

__all__ = [
    "BondTerms",
    "IndexWeights",
    "CouponLeg",
    "SWISS_RE_WEIGHTS",
    "RATES_HEADER",
    "build_index",
    "read_rates_csv",
    "read_weights_config",
    "loss_ratio",
    "principal_payoff",
    "principal_payoff_asian",
    "asian_spread",
    "call_counterpart_payoff",
    "coupon_leg_value",
    "parity_adjustment_G",
    "call_to_put_bound",
]

RATES_HEADER = ("country", "age_band", "gender", "rate")
_WEIGHT_TOL = 1e-9


@dataclass(frozen=True)
class BondTerms:
    """Contract descriptor.

    ``q0`` is the contract base level that fixes the trigger ``k1*q0`` and
    exhaustion ``k2*q0``. It is not necessarily the starting level of the
    index model, which each model carries separately.
    """

    q0: float = 0.008453
    k1: float = 1.3
    k2: float = 1.5
    dates: tuple[float, ...] = (1.0, 2.0, 3.0)
    principal: float = 1.0
    rate: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "dates", tuple(float(t) for t in self.dates))
        if not self.q0 > 0:
            raise ConfigError(f"base level q0 must be positive, got {self.q0}")
        if not 1.0 < self.k1 < self.k2:
            raise ConfigError(f"need 1 < k1 < k2, got k1={self.k1}, k2={self.k2}")
        if not self.dates:
            raise ConfigError("at least one monitoring date is required")
        if any(t <= 0 for t in self.dates) or any(
            b <= a for a, b in zip(self.dates, self.dates[1:])
        ):
            raise ConfigError(f"dates must be positive and strictly increasing, got {self.dates}")
        if not self.principal > 0:
            raise ConfigError(f"principal must be positive, got {self.principal}")
        if not math.isfinite(self.rate):
            raise ConfigError(f"rate must be finite, got {self.rate}")

    @property
    def maturity(self) -> float:
        return self.dates[-1]

    @property
    def n(self) -> int:
        return len(self.dates)

    @property
    def scale(self) -> float:
        """Tranche leverage ``1/(k2 - k1)``; 5 for the 1.3/1.5 tranche."""
        return 1.0 / (self.k2 - self.k1)

    @property
    def width(self) -> float:
        return self.k2 - self.k1

    @property
    def D(self) -> float:
        return self.principal / self.q0

    def discount(self, t: float) -> float:
        return math.exp(-self.rate * t)


@dataclass(frozen=True)
class IndexWeights:
    """Country, age-band and gender weights of the composite index."""

    country_weights: tuple[tuple[str, float], ...]
    age_weights: tuple[tuple[str, float], ...]
    gender_weights: tuple[float, float]

    def __post_init__(self):
        object.__setattr__(self, "country_weights", tuple((str(k), float(w)) for k, w in self.country_weights))
        object.__setattr__(self, "age_weights", tuple((str(k), float(w)) for k, w in self.age_weights))
        object.__setattr__(self, "gender_weights", tuple(float(w) for w in self.gender_weights))
        for name, pairs in (("country", self.country_weights), ("age", self.age_weights)):
            if not pairs:
                raise ConfigError(f"{name} weights are empty")
            if any(w < 0 for _, w in pairs):
                raise ConfigError(f"{name} weights must be nonnegative")
            if abs(sum(w for _, w in pairs) - 1.0) > _WEIGHT_TOL:
                raise ConfigError(f"{name} weights sum to {sum(w for _, w in pairs)!r}, expected 1")
            labels = [k for k, _ in pairs]
            if len(set(labels)) != len(labels):
                raise ConfigError(f"duplicate {name} labels")
        if len(self.gender_weights) != 2 or any(w < 0 for w in self.gender_weights):
            raise ConfigError("gender weights must be a nonnegative (male, female) pair")
        if abs(sum(self.gender_weights) - 1.0) > _WEIGHT_TOL:
            raise ConfigError(f"gender weights sum to {sum(self.gender_weights)!r}, expected 1")


SWISS_RE_WEIGHTS = IndexWeights(
    country_weights=(("US", 0.70), ("UK", 0.15), ("France", 0.075), ("Italy", 0.05), ("Switzerland", 0.025)),
    age_weights=(("all", 1.0),),
    gender_weights=(0.65, 0.35),
)


@dataclass(frozen=True)
class CouponLeg:
    """Quarterly floating coupons: ``(spread + libor_j)/4`` per unit principal."""

    spread: float = 0.0135
    libor: tuple[float, ...] = field(default_factory=lambda: (0.0,) * 12)
    frequency: int = 4

    def __post_init__(self):
        object.__setattr__(self, "libor", tuple(float(x) for x in self.libor))
        if self.spread < 0 or any(x < 0 for x in self.libor):
            raise ConfigError("coupon rates must be nonnegative")
        if self.frequency < 1:
            raise ConfigError("coupon frequency must be positive")


# -- index -------------------------------------------------------------------

_GENDERS = {"m": 0, "male": 0, "f": 1, "female": 1}


def build_index(
    rates_by_cell: Mapping[tuple[str, str, str], float],
    weights: IndexWeights,
    scale: float = 1.0,
) -> float:
    """Weighted composite index ``sum_j C_j sum_k A_k (Gm q^m + Gf q^f)``.

    ``rates_by_cell`` maps ``(country, age_band, gender)`` to a rate, gender
    being ``m``/``f`` or ``male``/``female``. ``scale`` converts units, e.g.
    ``1e-5`` for rates quoted per 100,000.
    """
    table: dict[tuple[str, str, int], float] = {}
    for (country, age, gender), rate in rates_by_cell.items():
        g = _GENDERS.get(str(gender).strip().lower())
        if g is None:
            raise DataError(f"unknown gender {gender!r} in cell ({country}, {age})")
        table[(str(country), str(age), g)] = float(rate)

    gm, gf = weights.gender_weights
    total = 0.0
    for country, cw in weights.country_weights:
        for age, aw in weights.age_weights:
            try:
                qm = table[(country, age, 0)]
                qf = table[(country, age, 1)]
            except KeyError as exc:
                sex = "male" if exc.args[0][2] == 0 else "female"
                raise DataError(f"missing rate for cell ({country}, {age}, {sex})") from None
            total += cw * aw * (gm * qm + gf * qf)
    return total * scale


def read_rates_csv(path: str | Path) -> dict[tuple[str, str, str], float]:
    """Read a ``country,age_band,gender,rate`` file into a cell mapping."""
    path = Path(path)
    try:
        fh = path.open(newline="")
    except OSError as exc:
        raise DataError(f"cannot open rates file {path}: {exc}") from None
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != RATES_HEADER:
            raise DataError(f"rates file {path} must start with header {','.join(RATES_HEADER)}")
        out: dict[tuple[str, str, str], float] = {}
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 4:
                raise DataError(f"{path}:{lineno}: expected 4 fields, got {len(row)}")
            country, age, gender, rate = (c.strip() for c in row)
            try:
                value = float(rate)
            except ValueError:
                raise DataError(f"{path}:{lineno}: rate {rate!r} is not a number") from None
            if not math.isfinite(value) or value < 0:
                raise DataError(f"{path}:{lineno}: rate must be finite and nonnegative")
            key = (country, age, gender)
            if key in out:
                raise DataError(f"{path}:{lineno}: duplicate cell {key}")
            out[key] = value
    return out


def read_flat_config(path: str | Path) -> dict[str, str]:
    """Parse a flat ``key = value`` file (``#`` comments allowed)."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string("[root]\n" + text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from None
    return dict(parser["root"])


def read_weights_config(path: str | Path) -> IndexWeights:
    """Load weights from ``country.X``, ``age.Y``, ``gender.male``/``gender.female`` keys."""
    raw = read_flat_config(path)
    countries, ages, gender = [], [], {}
    for key, value in raw.items():
        try:
            w = float(value)
        except ValueError:
            raise ConfigError(f"weight {key} = {value!r} is not a number") from None
        group, _, label = key.partition(".")
        if not label:
            raise ConfigError(f"weight key {key!r} needs a group prefix")
        if group == "country":
            countries.append((label, w))
        elif group == "age":
            ages.append((label, w))
        elif group == "gender" and label in ("male", "female"):
            gender[label] = w
        else:
            raise ConfigError(f"unknown weight key {key!r}")
    if set(gender) != {"male", "female"}:
        raise ConfigError("both gender.male and gender.female are required")
    return IndexWeights(tuple(countries), tuple(ages), (gender["male"], gender["female"]))


# -- payoff ------------------------------------------------------------------

def loss_ratio(q, terms: BondTerms):
    """Fraction of principal lost in one year, clipped to ``[0, 1]``."""
    x = (np.asarray(q, dtype=float) - terms.k1 * terms.q0) / (terms.width * terms.q0)
    out = np.clip(x, 0.0, 1.0)
    return out if out.ndim else float(out)


def _check_path(path, terms: BondTerms) -> np.ndarray:
    arr = np.asarray(path, dtype=float)
    if arr.shape[-1:] != (terms.n,):
        raise DataError(f"path has {arr.shape[-1] if arr.ndim else 0} dates, contract has {terms.n}")
    return arr


def principal_payoff(path, terms: BondTerms):
    """Principal repaid at maturity, ``C (1 - sum L_i)^+``.

    ``path`` holds index levels at the monitoring dates along the last axis.
    """
    arr = _check_path(path, terms)
    losses = loss_ratio(arr, terms)
    out = terms.principal * np.maximum(1.0 - np.sum(losses, axis=-1), 0.0)
    return out if np.ndim(out) else float(out)


def asian_spread(q, terms: BondTerms):
    """Scaled exceedance ``m (q - k1 q0)^+`` with ``m = 1/(k2 - k1)``."""
    out = terms.scale * np.maximum(np.asarray(q, dtype=float) - terms.k1 * terms.q0, 0.0)
    return out if out.ndim else float(out)


def principal_payoff_asian(path, terms: BondTerms):
    """Same payoff written as an Asian put, ``D (q0 - S)^+``."""
    arr = _check_path(path, terms)
    s = np.sum(asian_spread(arr, terms), axis=-1)
    out = terms.D * np.maximum(terms.q0 - s, 0.0)
    return out if np.ndim(out) else float(out)


def call_counterpart_payoff(path, terms: BondTerms):
    """Undiscounted call counterpart ``D (S - q0)^+``."""
    arr = _check_path(path, terms)
    s = np.sum(asian_spread(arr, terms), axis=-1)
    out = terms.D * np.maximum(s - terms.q0, 0.0)
    return out if np.ndim(out) else float(out)


# -- coupons -----------------------------------------------------------------

def coupon_leg_value(leg: CouponLeg, terms: BondTerms, expected_principal_fraction: float) -> float:
    """Discounted coupons plus expected principal, nominal periodic compounding.

    The principal fraction is paid together with the last coupon and
    discounted with it.
    """
    periods = leg.frequency * terms.maturity
    if abs(periods - round(periods)) > 1e-9:
        raise ConfigError("maturity is not a whole number of coupon periods")
    periods = int(round(periods))
    if len(leg.libor) != periods:
        raise ConfigError(f"expected {periods} coupon rates, got {len(leg.libor)}")
    if not 0.0 <= expected_principal_fraction <= 1.0:
        raise ConfigError("expected principal fraction must lie in [0, 1]")
    c = terms.principal
    growth = 1.0 + terms.rate / leg.frequency
    value = 0.0
    for i, libor in enumerate(leg.libor, start=1):
        flow = (leg.spread + libor) / leg.frequency * c
        if i == periods:
            flow += expected_principal_fraction * c
        value += flow / growth**i
    return value


# -- parity ------------------------------------------------------------------

def parity_adjustment_G(model, terms: BondTerms) -> float:
    """Constant ``G`` with ``P = P1 - G``.

    ``G = D e^{-rT} [m sum_i e^{r t_i} C(k1 q0, t_i) - q0]`` where ``C`` is the
    discounted European call on the index supplied by ``model``.
    """
    r = terms.rate
    strike = terms.k1 * terms.q0
    legs = sum(math.exp(r * t) * model.european_call(strike, t) for t in terms.dates)
    return terms.D * terms.discount(terms.maturity) * (terms.scale * legs - terms.q0)


def call_to_put_bound(call_side_value: float, G: float) -> float:
    """Map a bound on the call counterpart to a bound on the bond: ``(x - G)^+``."""
    return max(call_side_value - G, 0.0)
