"""Shared fixtures: small random datasets and a direct O(n^2) partial likelihood."""

from __future__ import annotations

import numpy as np

from daccox import SurvivalDataset


def random_dataset(rng: np.random.Generator, n: int, p: int, counting: bool = False, ties: bool = False):
    """Small dataset with moderate censoring; ``counting`` gives 1-3 intervals per subject."""
    if not counting:
        z = rng.standard_normal((n, p))
        t = rng.exponential(1.0, n)
        if ties:
            t = np.ceil(t * 5) / 5
        event = rng.random(n) < 0.7
        return SurvivalDataset.from_arrays(np.arange(n), None, t, event, z)
    ids, starts, stops, events, zs = [], [], [], [], []
    for i in range(n):
        k = int(rng.integers(1, 4))
        cuts = np.sort(rng.exponential(1.0, k))
        if ties:
            cuts = np.unique(np.ceil(cuts * 4) / 4)
        lo = 0.0
        for j, hi in enumerate(cuts):
            ids.append(i)
            starts.append(lo)
            stops.append(hi)
            events.append(j == len(cuts) - 1 and rng.random() < 0.7)
            zs.append(rng.standard_normal(p))
            lo = hi
    return SurvivalDataset.from_arrays(
        np.array(ids), np.array(starts), np.array(stops), np.array(events), np.array(zs)
    )


def brute_force_pl(data: SurvivalDataset, beta: np.ndarray):
    """Per-subject-averaged log PL, score and information by explicit risk-set loops."""
    beta = np.asarray(beta, dtype=float)
    eta = data.z @ beta
    ll, score, info = 0.0, np.zeros(data.p), np.zeros((data.p, data.p))
    for i in np.flatnonzero(data.event):
        t = data.stop[i]
        at_risk = (data.start < t) & (data.stop >= t)
        w = np.exp(eta[at_risk])
        zr = data.z[at_risk]
        s0 = w.sum()
        m = w @ zr / s0
        second = (zr * w[:, None]).T @ zr / s0
        ll += eta[i] - np.log(s0)
        score += data.z[i] - m
        info += second - np.outer(m, m)
    n = data.n_subjects
    return ll / n, score / n, info / n


ACCEPTANCE_LINES: list[str] = []


def report(criterion: int, passed: bool, detail: str) -> None:
    """Record and print one pass/fail line for an acceptance criterion."""
    line = f"criterion {criterion:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
