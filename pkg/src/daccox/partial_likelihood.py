"""Cox log partial likelihood with analytic score and information.

All outputs are per-subject averages (divided by the subject count of the
subset), so shard quantities combine by plain averaging.  Ties use Breslow's
convention.  The information matrix is built with the cumulative-hazard
identity

    sum_i d_i S2(t_i)/S0(t_i) = sum_j w_j z_j z_j^T (H(stop_j) - H(start_j)),
    H(t) = sum_{events i, t_i <= t} 1 / S0(t_i),

which keeps memory at O(n p) instead of storing running p x p sums.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import SurvivalDataset
from .errors import NumericalError

__all__ = ["PLDerivatives", "pl_derivatives", "EXP_LIMIT"]

EXP_LIMIT = 700.0


@dataclass(frozen=True)
class PLDerivatives:
    loglik: float
    score: np.ndarray | None
    info: np.ndarray | None
    n_omega: int


def _risk_sums(data: SurvivalDataset, vals: np.ndarray, t_ev: np.ndarray, general: bool) -> np.ndarray:
    """Sum of ``vals`` rows over the risk set {start < t <= stop} of each event."""
    totals = np.cumsum(vals, axis=0)[data._tie_end[data._event_idx]]
    if general:
        late = np.cumsum(vals[data._start_order], axis=0)
        idx = np.searchsorted(data._neg_start_sorted, -t_ev, side="right") - 1
        entered_later = late[np.maximum(idx, 0)]
        none = idx < 0
        if vals.ndim == 1:
            entered_later = np.where(none, 0.0, entered_later)
        else:
            entered_later = np.where(none[:, None], 0.0, entered_later)
        totals = totals - entered_later
    return totals


def pl_derivatives(
    data: SurvivalDataset,
    beta: np.ndarray,
    order: int = 2,
    method: str = "auto",
) -> PLDerivatives:
    """Log partial likelihood and derivatives of ``data`` at ``beta``.

    Parameters
    ----------
    order : 0, 1 or 2
        Highest derivative filled in; lower orders leave ``score``/``info`` as None.
    method : "auto", "general" or "specialized"
        "specialized" ignores start times (valid only when all starts are 0);
        "general" handles counting-process rows.  "auto" picks by data.
    """
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (data.p,):
        raise ValueError(f"beta must have shape ({data.p},), got {beta.shape}")
    if not np.all(np.isfinite(beta)):
        raise ValueError("beta must be finite")
    if method == "auto":
        general = data.counting_process
    elif method in ("general", "specialized"):
        general = method == "general"
        if not general and data.counting_process:
            raise ValueError("specialized path requires start = 0 for all rows")
    else:
        raise ValueError(f"unknown method {method!r}")

    n = data.n_subjects
    eta = data.z @ beta
    if eta.size and np.max(np.abs(eta)) > EXP_LIMIT:
        raise NumericalError("linear predictor overflow")
    shift = float(eta.max())
    w = np.exp(eta - shift)

    ev = data._event_idx
    if ev.size == 0:
        zero = np.zeros(data.p)
        return PLDerivatives(
            0.0,
            zero if order >= 1 else None,
            np.zeros((data.p, data.p)) if order >= 2 else None,
            n,
        )
    t_ev = data.stop[ev]
    s0 = _risk_sums(data, w, t_ev, general)
    loglik = float(np.sum(eta[ev] - shift - np.log(s0))) / n
    if order < 1:
        return PLDerivatives(loglik, None, None, n)

    wz = data.z * w[:, None]
    s1 = _risk_sums(data, wz, t_ev, general)
    mean_z = s1 / s0[:, None]
    score = (data.z[ev] - mean_z).sum(axis=0) / n
    if order < 2:
        return PLDerivatives(loglik, score, None, n)

    # events in ascending time order for the Breslow cumulative hazard H
    asc = np.argsort(t_ev, kind="stable")
    t_asc = t_ev[asc]
    cum_h = np.concatenate(([0.0], np.cumsum(1.0 / s0[asc])))
    c = cum_h[np.searchsorted(t_asc, data.stop, side="right")]
    if general:
        c = c - cum_h[np.searchsorted(t_asc, data.start, side="right")]
    weighted = data.z * (w * c)[:, None]
    info = (data.z.T @ weighted - mean_z.T @ mean_z) / n
    info = 0.5 * (info + info.T)
    return PLDerivatives(loglik, score, info, n)
