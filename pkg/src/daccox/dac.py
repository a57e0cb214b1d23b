"""Divide-and-conquer one-step updates of the unpenalized estimator.

Step (i) maximizes the partial likelihood on shard 0.  Step (ii) repeatedly
applies the averaged one-step update

    beta <- beta + A_dac(beta)^{-1} * mean_k U_k(beta),   A_dac = mean_k A_k,

where U_k and A_k are shard-level scores and information matrices.  Shard
derivatives are computed in a thread pool; the reduction always sums in shard
index order, so results do not depend on the worker count.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .data import ShardPlan, SurvivalDataset, split_dataset
from .mple import NewtonConfig, fit_mple, solve_spd
from .partial_likelihood import PLDerivatives, pl_derivatives

__all__ = ["DacUnpenalized", "shard_derivatives", "dac_onestep_round", "fit_dac_unpenalized"]


@dataclass
class DacUnpenalized:
    beta_tilde: np.ndarray
    info_dac: np.ndarray
    iterate_history: list[np.ndarray]
    k_shards: int
    n_iter: int
    n0: int
    d0: int
    timings: dict[str, float] = field(default_factory=dict)


def shard_derivatives(
    shards: Sequence[SurvivalDataset], beta: np.ndarray, threads: int = 1, order: int = 2
) -> list[PLDerivatives]:
    """Per-shard derivatives, returned in shard order."""
    if threads <= 1 or len(shards) == 1:
        return [pl_derivatives(s, beta, order) for s in shards]
    with ThreadPoolExecutor(max_workers=min(threads, len(shards))) as pool:
        return list(pool.map(lambda s: pl_derivatives(s, beta, order), shards))


def _average(derivs: Sequence[PLDerivatives]) -> tuple[np.ndarray, np.ndarray]:
    k = len(derivs)
    score = np.zeros_like(derivs[0].score)
    info = np.zeros_like(derivs[0].info)
    for d in derivs:
        score += d.score
        info += d.info
    return score / k, info / k


def dac_onestep_round(
    dataset: SurvivalDataset | None,
    plan: ShardPlan | None,
    beta: np.ndarray,
    *,
    shards: Sequence[SurvivalDataset] | None = None,
    threads: int = 1,
    ridge: float = 1e-8,
) -> tuple[np.ndarray, np.ndarray]:
    """One averaged one-step update from ``beta``.

    Returns ``(beta_next, info_dac)`` with ``info_dac`` evaluated at ``beta``.
    Pass pre-split ``shards`` to avoid re-splitting the dataset each round.
    """
    if shards is None:
        shards = split_dataset(dataset, plan)
    beta = np.asarray(beta, dtype=float)
    score, info = _average(shard_derivatives(shards, beta, threads))
    return beta + solve_spd(info, score, ridge), info


def fit_dac_unpenalized(
    dataset: SurvivalDataset,
    plan: ShardPlan,
    n_iter: int = 2,
    newton_config: NewtonConfig | None = None,
    threads: int = 1,
) -> DacUnpenalized:
    if n_iter < 1:
        raise ValueError("n_iter must be >= 1")
    newton_config = newton_config or NewtonConfig()
    timings: dict[str, float] = {}

    t0 = time.perf_counter()
    shards = split_dataset(dataset, plan)
    timings["split"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    beta = fit_mple(shards[0], newton_config).beta
    timings["step_i"] = time.perf_counter() - t0
    history = [beta]

    for it in range(n_iter):
        t0 = time.perf_counter()
        beta, _ = dac_onestep_round(None, None, beta, shards=shards, threads=threads,
                                    ridge=newton_config.ridge_fallback)
        timings[f"step_ii_round_{it + 1}"] = time.perf_counter() - t0
        history.append(beta)

    t0 = time.perf_counter()
    _, info = _average(shard_derivatives(shards, beta, threads))
    timings["final_info"] = time.perf_counter() - t0

    return DacUnpenalized(
        beta_tilde=beta,
        info_dac=info,
        iterate_history=history,
        k_shards=plan.k_shards,
        n_iter=n_iter,
        n0=dataset.n_subjects,
        d0=dataset.d0,
        timings=timings,
    )
