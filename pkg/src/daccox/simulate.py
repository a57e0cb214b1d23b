"""Simulated survival data for the four benchmark scenarios.

Scenarios I-III: time-independent equicorrelated Gaussian covariates, Weibull
(shape 2) event times with scale {0.5 exp(b'Z)}^{-1/2}, exponential censoring
with rate exp(0.5).

Scenario IV: p_ind fixed covariates plus p_dep covariates that are redrawn on
each of the intervals [0,1), [1,2), [2,3), [3,inf); cumulative hazard
0.05 exp(b'Z(t)) t^2 accumulated piecewise; administrative censoring at 4.

Randomness comes from Philox streams keyed by (seed, block), one stream per
fixed-size block of subjects, so output does not depend on worker count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .data import SurvivalDataset

__all__ = [
    "ScenarioConfig",
    "TrueBeta",
    "true_beta",
    "covariance",
    "gen_time_independent",
    "gen_time_dependent",
    "generate",
    "piecewise_cumhaz",
    "invert_piecewise_cumhaz",
    "BLOCK_SIZE",
    "TD_BOUNDARIES",
    "TD_BASE_RATE",
    "TD_CENSOR_TIME",
]

BLOCK_SIZE = 4096
TI_BASE_RATE = 0.5
TI_CENSOR_RATE = float(np.exp(0.5))
TD_BOUNDARIES = (0.0, 1.0, 2.0, 3.0)
TD_BASE_RATE = 0.05
TD_CENSOR_TIME = 4.0

_PATTERNS = {
    "I": [(0.8, 3), (0.4, 3), (0.2, 3)],
    "II": [(0.4, 4), (0.2, 4), (0.1, 4), (0.05, 4)],
    "III": [(1.0, 1), (0.5, 1), (0.2, 2), (0.1, 2), (0.05, 2), (0.035, 3)],
    "IV": [(0.08, 3), (0.04, 3), (0.02, 3)],
}


def _expand(pattern, length: int) -> np.ndarray:
    head = np.concatenate([np.full(k, v) for v, k in pattern])
    if length < head.size:
        raise ValueError(f"dimension {length} too small for a pattern with {head.size} nonzeros")
    return np.concatenate([head, np.zeros(length - head.size)])


@dataclass(frozen=True)
class TrueBeta:
    values: np.ndarray

    @property
    def active_set(self) -> np.ndarray:
        return np.flatnonzero(self.values)


def true_beta(scenario: str, p: int | None = None, p_ind: int | None = None, p_dep: int | None = None) -> TrueBeta:
    """Published coefficient pattern for a scenario, zero-padded to the requested size."""
    if scenario not in _PATTERNS:
        raise ValueError(f"unknown scenario {scenario!r}")
    if scenario == "IV":
        if p_ind is None or p_dep is None:
            raise ValueError("scenario IV needs p_ind and p_dep")
        pat = _PATTERNS["IV"]
        return TrueBeta(np.concatenate([_expand(pat, p_ind), _expand(pat, p_dep)]))
    if p is None:
        raise ValueError("p is required")
    return TrueBeta(_expand(_PATTERNS[scenario], p))


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str
    n0: int
    v: float
    seed: int
    p: Optional[int] = None
    p_ind: Optional[int] = None
    p_dep: Optional[int] = None
    beta_override: Optional[tuple[float, ...]] = field(default=None)

    def __post_init__(self):
        if self.scenario not in _PATTERNS:
            raise ValueError(f"unknown scenario {self.scenario!r}")
        if self.n0 < 2:
            raise ValueError("n0 must be >= 2")
        if not 0.0 <= self.v < 1.0:
            raise ValueError("v must lie in [0, 1)")
        if self.scenario == "IV":
            if self.p_ind is None or self.p_dep is None:
                object.__setattr__(self, "p_ind", 50 if self.p_ind is None else self.p_ind)
                object.__setattr__(self, "p_dep", 50 if self.p_dep is None else self.p_dep)
            object.__setattr__(self, "p", self.p_ind + self.p_dep)
        elif self.p is None:
            raise ValueError("p is required for scenarios I-III")
        if self.beta_override is not None:
            if len(self.beta_override) != self.p:
                raise ValueError("beta_override has the wrong length")
            object.__setattr__(self, "beta_override", tuple(float(b) for b in self.beta_override))
        else:
            self.beta  # validates dimensions

    @property
    def beta(self) -> np.ndarray:
        if self.beta_override is not None:
            return np.array(self.beta_override)
        return true_beta(self.scenario, self.p, self.p_ind, self.p_dep).values

    def to_dict(self) -> dict:
        d = asdict(self)
        d["beta_override"] = None if self.beta_override is None else list(self.beta_override)
        return d


def covariance(config: ScenarioConfig) -> np.ndarray:
    """Covariance of the model covariate vector Z(t): (1-v) I + v 11'."""
    p = config.p
    return (1.0 - config.v) * np.eye(p) + config.v * np.ones((p, p))


def _block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(block)])))


def _equicorrelated(rng: np.random.Generator, n: int, dim: int, v: float) -> np.ndarray:
    eps = rng.standard_normal((n, dim))
    common = rng.standard_normal(n)
    return np.sqrt(1.0 - v) * eps + np.sqrt(v) * common[:, None]


def _blocks(n0: int):
    for b, lo in enumerate(range(0, n0, BLOCK_SIZE)):
        yield b, lo, min(lo + BLOCK_SIZE, n0)


def _map_blocks(fn, n0: int, workers: int):
    blocks = list(_blocks(n0))
    if workers <= 1:
        return [fn(*blk) for blk in blocks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda blk: fn(*blk), blocks))


def gen_time_independent(config: ScenarioConfig, workers: int = 1) -> SurvivalDataset:
    if config.scenario == "IV":
        raise ValueError("scenario IV is time-dependent; use gen_time_independent for I-III")
    beta = config.beta

    def block(b, lo, hi):
        rng = _block_rng(config.seed, b)
        n = hi - lo
        z = _equicorrelated(rng, n, config.p, config.v)
        e = rng.standard_exponential(n)
        c = rng.exponential(1.0 / TI_CENSOR_RATE, n)
        t = np.sqrt(e / (TI_BASE_RATE * np.exp(z @ beta)))
        return z, np.minimum(t, c), t <= c

    parts = _map_blocks(block, config.n0, workers)
    z = np.concatenate([p[0] for p in parts])
    x = np.concatenate([p[1] for p in parts])
    delta = np.concatenate([p[2] for p in parts])
    ids = np.arange(config.n0, dtype=np.int64)
    return SurvivalDataset.from_arrays(ids, None, x, delta, z)


def piecewise_cumhaz(t: np.ndarray, rates: np.ndarray, boundaries=TD_BOUNDARIES) -> np.ndarray:
    """Cumulative hazard sum_m rate_m (min(t,b_{m+1})^2 - b_m^2)_+ for t^2-shaped pieces.

    ``rates`` has shape (n, M) with M = len(boundaries); the last piece is open-ended.
    """
    t = np.asarray(t, dtype=float)
    lower = np.asarray(boundaries, dtype=float)
    upper = np.append(lower[1:], np.inf)
    hi = np.minimum(t[:, None], upper[None, :])
    seg = np.clip(hi**2 - lower[None, :] ** 2, 0.0, None)
    seg = np.where(t[:, None] > lower[None, :], seg, 0.0)
    return np.sum(rates * seg, axis=1)


def invert_piecewise_cumhaz(e: np.ndarray, rates: np.ndarray, boundaries=TD_BOUNDARIES) -> np.ndarray:
    """Time T with piecewise_cumhaz(T) == e."""
    e = np.asarray(e, dtype=float)
    lower = np.asarray(boundaries, dtype=float)
    widths = np.diff(lower**2)
    at_bounds = np.concatenate(
        [np.zeros((e.size, 1)), np.cumsum(rates[:, :-1] * widths[None, :], axis=1)], axis=1
    )
    piece = np.sum(at_bounds[:, 1:] <= e[:, None], axis=1)
    rows = np.arange(e.size)
    a = lower[piece]
    return np.sqrt(a**2 + (e - at_bounds[rows, piece]) / rates[rows, piece])


def gen_time_dependent(config: ScenarioConfig, workers: int = 1) -> SurvivalDataset:
    if config.scenario != "IV":
        raise ValueError("time-dependent generation is scenario IV only")
    p_ind, p_dep = config.p_ind, config.p_dep
    beta = config.beta
    b_ind, b_dep = beta[:p_ind], beta[p_ind:]
    n_pieces = len(TD_BOUNDARIES)
    lower = np.asarray(TD_BOUNDARIES)
    upper = np.append(lower[1:], np.inf)

    def block(b, lo, hi):
        rng = _block_rng(config.seed, b)
        n = hi - lo
        draw = _equicorrelated(rng, n, p_ind + n_pieces * p_dep, config.v)
        e = rng.standard_exponential(n)
        z_ind = draw[:, :p_ind]
        z_dep = draw[:, p_ind:].reshape(n, n_pieces, p_dep)
        eta = (z_ind @ b_ind)[:, None] + z_dep @ b_dep
        t = invert_piecewise_cumhaz(e, TD_BASE_RATE * np.exp(eta))
        x = np.minimum(t, TD_CENSOR_TIME)
        delta = t <= TD_CENSOR_TIME
        entered = lower[None, :] < x[:, None]
        subj, piece = np.nonzero(entered)
        start = lower[piece]
        stop = np.minimum(upper[piece], x[subj])
        last = stop == x[subj]
        event = last & delta[subj]
        z = np.concatenate([z_ind[subj], z_dep[subj, piece]], axis=1)
        return subj + lo, start, stop, event, z

    parts = _map_blocks(block, config.n0, workers)
    cols = [np.concatenate([p[i] for p in parts]) for i in range(5)]
    return SurvivalDataset.from_arrays(*cols)


def generate(config: ScenarioConfig, workers: int = 1) -> SurvivalDataset:
    if config.scenario == "IV":
        return gen_time_dependent(config, workers)
    return gen_time_independent(config, workers)
