"""Monte Carlo valuation of the bond and of its call counterpart.

Draws are organised in batches. Batch ``k`` reads from a Philox stream whose
key is the seed and whose counter starts at ``k`` in its top word, so every
batch sees the same numbers whichever thread evaluates it. Per-batch
moments are merged in a fixed pairwise tree, which makes the estimate
bit-for-bit independent of the worker count. The batch size is part of the
reproducibility key.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .contract import BondTerms, call_counterpart_payoff, parity_adjustment_G, principal_payoff
from .errors import ConfigError
from .models import BlackScholesModel, MortalityModel
from .numerics import std_normal_quantile

__all__ = [
    "McConfig",
    "McEstimate",
    "ParityCheck",
    "simulate_bs_path",
    "sample_marginal_path",
    "estimate_price",
    "estimate_parity",
]

Target = Literal["P", "P1", "both"]
Coupling = Literal["independent", "comonotonic"]

_SEED_MASK = (1 << 64) - 1
# rounding allowance when the parity deviation and its error are both ~0
_PARITY_FLOOR = 1e-12


@dataclass(frozen=True)
class McConfig:
    """Simulation settings.

    ``iterations`` counts payoff evaluations, so an antithetic run of
    ``2N`` iterations uses ``N`` independent draws and their reflections.
    ``coupling`` only matters for models given by yearly marginals.
    """

    iterations: int = 100_000
    seed: int = 20240101
    antithetic: bool = True
    batch: int = 1 << 17
    workers: int = 1
    coupling: Coupling = "independent"

    def __post_init__(self):
        if self.iterations < 2:
            raise ConfigError(f"iterations must be at least 2, got {self.iterations}")
        if self.batch < 2:
            raise ConfigError(f"batch must be at least 2, got {self.batch}")
        if self.antithetic and (self.iterations % 2 or self.batch % 2):
            raise ConfigError("antithetic sampling needs an even iteration count and batch size")
        if self.workers < 1:
            raise ConfigError(f"workers must be positive, got {self.workers}")
        if not 0 <= self.seed <= _SEED_MASK:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.coupling not in ("independent", "comonotonic"):
            raise ConfigError(f"unknown coupling {self.coupling!r}")


@dataclass(frozen=True)
class McEstimate:
    price: float
    std_error: float
    iterations: int
    seed: int
    elapsed: float


@dataclass(frozen=True)
class ParityCheck:
    """``P1 - P`` against ``G`` on common random numbers."""

    deviation: float
    std_error: float
    G: float
    P: McEstimate
    P1: McEstimate

    @property
    def passed(self) -> bool:
        return abs(self.deviation) < 4.0 * self.std_error + _PARITY_FLOOR


# -- paths -------------------------------------------------------------------

def simulate_bs_path(model: BlackScholesModel, terms: BondTerms, normals) -> np.ndarray:
    """Geometric Brownian index levels at the monitoring dates.

    ``normals`` carries one standard normal per date along the last axis;
    leading axes index independent paths.
    """
    z = np.asarray(normals, dtype=float)
    dates = np.asarray(terms.dates)
    if z.shape[-1:] != dates.shape:
        raise ConfigError(f"need {dates.size} normals per path, got shape {z.shape}")
    dt = np.diff(dates, prepend=0.0)
    steps = (model.r - 0.5 * model.sigma**2) * dt + model.sigma * np.sqrt(dt) * z
    return model.q0 * np.exp(np.cumsum(steps, axis=-1))


def sample_marginal_path(model: MortalityModel, uniforms, terms: BondTerms | None = None) -> np.ndarray:
    """Index levels from per-date uniforms through the marginal quantiles."""
    u = np.asarray(uniforms, dtype=float)
    return _marginal_path_z(model, std_normal_quantile(u), terms)


def _marginal_path_z(model: MortalityModel, z, terms: BondTerms | None = None) -> np.ndarray:
    dates = terms.dates if terms is not None else model.dates
    z = np.asarray(z, dtype=float)
    if z.shape[-1:] != (len(dates),):
        raise ConfigError(f"need {len(dates)} draws per path, got shape {z.shape}")
    cols = [np.asarray(model.quantile_z(t, z[..., i]), dtype=float) for i, t in enumerate(dates)]
    return np.stack(cols, axis=-1)


# -- moments -----------------------------------------------------------------

@dataclass(frozen=True)
class _Moments:
    count: int
    mean: np.ndarray
    m2: np.ndarray

    @classmethod
    def of(cls, samples: np.ndarray) -> "_Moments":
        mean = samples.mean(axis=0)
        dev = samples - mean
        return cls(samples.shape[0], mean, np.einsum("ij,ij->j", dev, dev))

    def merge(self, other: "_Moments") -> "_Moments":
        n = self.count + other.count
        delta = other.mean - self.mean
        mean = self.mean + delta * (other.count / n)
        m2 = self.m2 + other.m2 + delta * delta * (self.count * other.count / n)
        return _Moments(n, mean, m2)


def _tree_merge(parts: list[_Moments]) -> _Moments:
    while len(parts) > 1:
        nxt = [parts[i].merge(parts[i + 1]) for i in range(0, len(parts) - 1, 2)]
        if len(parts) % 2:
            nxt.append(parts[-1])
        parts = nxt
    return parts[0]


# -- estimation --------------------------------------------------------------

def _stream(seed: int, k: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, 0, k]))


def _batch(model: MortalityModel, terms: BondTerms, cfg: McConfig, k: int, size: int) -> _Moments:
    rng = _stream(cfg.seed, k)
    n = terms.n
    draws = size // 2 if cfg.antithetic else size
    shared = not isinstance(model, BlackScholesModel) and cfg.coupling == "comonotonic"
    z = rng.standard_normal((draws, 1) if shared else (draws, n))
    if shared:
        z = np.repeat(z, n, axis=1)
    if cfg.antithetic:
        z = np.concatenate([z, -z])
    if isinstance(model, BlackScholesModel):
        path = simulate_bs_path(model, terms, z)
    else:
        path = _marginal_path_z(model, z, terms)
    disc = terms.discount(terms.maturity)
    p = disc * principal_payoff(path, terms)
    p1 = disc * call_counterpart_payoff(path, terms)
    cols = np.column_stack([p, p1, p1 - p])
    if cfg.antithetic:
        cols = 0.5 * (cols[:draws] + cols[draws:])
    return _Moments.of(cols)


def _simulate(model: MortalityModel, terms: BondTerms, cfg: McConfig) -> tuple[_Moments, float]:
    if abs(model.r - terms.rate) > 1e-15:
        raise ConfigError(f"model rate {model.r} differs from contract rate {terms.rate}")
    sizes = [cfg.batch] * (cfg.iterations // cfg.batch)
    if cfg.iterations % cfg.batch:
        sizes.append(cfg.iterations % cfg.batch)
    start = time.perf_counter()
    if cfg.workers == 1:
        parts = [_batch(model, terms, cfg, k, s) for k, s in enumerate(sizes)]
    else:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            parts = list(pool.map(lambda ks: _batch(model, terms, cfg, *ks), enumerate(sizes)))
    return _tree_merge(parts), time.perf_counter() - start


def _estimate(mom: _Moments, j: int, cfg: McConfig, elapsed: float) -> McEstimate:
    var = mom.m2[j] / (mom.count - 1) if mom.count > 1 else 0.0
    se = math.sqrt(max(var, 0.0) / mom.count)
    return McEstimate(float(mom.mean[j]), se, cfg.iterations, cfg.seed, elapsed)


def estimate_price(
    model: MortalityModel,
    terms: BondTerms,
    cfg: McConfig = McConfig(),
    target: Target = "P",
) -> McEstimate | tuple[McEstimate, McEstimate]:
    """Discounted mean of the bond principal (``"P"``), of the call
    counterpart (``"P1"``) or of both on the same paths (``"both"``).

    Under antithetic sampling the standard error treats pair means as the
    independent samples.
    """
    if target not in ("P", "P1", "both"):
        raise ConfigError(f"unknown target {target!r}")
    mom, elapsed = _simulate(model, terms, cfg)
    if target == "P":
        return _estimate(mom, 0, cfg, elapsed)
    if target == "P1":
        return _estimate(mom, 1, cfg, elapsed)
    return _estimate(mom, 0, cfg, elapsed), _estimate(mom, 1, cfg, elapsed)


def estimate_parity(
    model: MortalityModel,
    terms: BondTerms,
    cfg: McConfig = McConfig(),
    G: float | None = None,
) -> ParityCheck:
    """Compare the simulated ``P1 - P`` with ``G`` (computed from ``model`` unless given)."""
    if G is None:
        G = parity_adjustment_G(model, terms)
    mom, elapsed = _simulate(model, terms, cfg)
    diff = _estimate(mom, 2, cfg, elapsed)
    return ParityCheck(
        deviation=diff.price - G,
        std_error=diff.std_error,
        G=G,
        P=_estimate(mom, 0, cfg, elapsed),
        P1=_estimate(mom, 1, cfg, elapsed),
    )
