"""End-to-end estimators, oracle-property standard errors and confidence intervals.

* :func:`fit_dac` - the three-step divide-and-conquer pipeline.
* :func:`fit_full_adaptive_lasso_oracle` - full-sample MPLE followed by the same
  LSA path (the linearized full-sample estimator); the comparison target.
* :func:`fit_full_penalized_pl` - adaptive LASSO on the exact full-sample
  partial likelihood via proximal Newton, tuned with the log-PL BIC.
"""

from __future__ import annotations

import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy import stats

from .dac import fit_dac_unpenalized
from .data import SurvivalDataset, make_shard_plan
from .errors import ConvergenceError, NumericalError, SingularMatrixError
from .lsa import LsaProblem, PathResult, fit_lsa_path, matrix_sqrt_spd, solve_weighted_lasso
from .mple import NewtonConfig, fit_mple
from .partial_likelihood import pl_derivatives

__all__ = [
    "PathConfig",
    "DacFitResult",
    "oracle_se",
    "bic_v",
    "fit_dac",
    "fit_full_adaptive_lasso_oracle",
    "fit_full_penalized_pl",
]


@dataclass(frozen=True)
class PathConfig:
    n_lambda: int = 100
    lambda_min_ratio: float = 1e-4


@dataclass
class DacFitResult:
    estimator: str
    beta_hat: np.ndarray
    active_set: np.ndarray
    beta_tilde: np.ndarray
    info: np.ndarray
    se: np.ndarray
    ci_lower: np.ndarray
    ci_upper: np.ndarray
    alpha: float
    lambda_selected: float
    path: PathResult
    n0: int
    d0: int
    k_shards: int = 1
    n_iter: int = 0
    iterate_history: list[np.ndarray] = field(default_factory=list)
    timings: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        """JSON-ready representation (see ``schemas/fit_result.schema.json``)."""
        return {
            "estimator": self.estimator,
            "n0": self.n0,
            "d0": self.d0,
            "p": int(self.beta_hat.shape[0]),
            "k_shards": self.k_shards,
            "n_iter": self.n_iter,
            "alpha": self.alpha,
            "beta_hat": self.beta_hat.tolist(),
            "beta_tilde": self.beta_tilde.tolist(),
            "active_set": [int(j) for j in self.active_set],
            "se": self.se.tolist(),
            "ci_lower": self.ci_lower.tolist(),
            "ci_upper": self.ci_upper.tolist(),
            "lambda_selected": self.lambda_selected,
            "path": {
                "lambdas": self.path.lambdas.tolist(),
                "dfs": [int(d) for d in self.path.dfs],
                "bics": self.path.bics.tolist(),
                "selected_index": self.path.selected_index,
            },
            "iterate_history": [b.tolist() for b in self.iterate_history],
            "timings": dict(self.timings),
        }


def oracle_se(
    info: np.ndarray,
    active,
    n0: int,
    alpha: float = 0.05,
    beta_hat: np.ndarray | None = None,
):
    """Standard errors (and CIs if ``beta_hat`` is given) for the active coordinates.

    The covariance of the active estimates is inv(info[active, active]) / n0.
    Returns ``(se, ci_lower, ci_upper)``; the bounds are None without ``beta_hat``.
    """
    active = np.asarray(active, dtype=int)
    if active.size == 0:
        raise ValueError("active set is empty")
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    sub = np.asarray(info, dtype=float)[np.ix_(active, active)]
    try:
        chol = np.linalg.cholesky(sub)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError("active-set information is not positive definite") from exc
    inv_chol = np.linalg.inv(chol)
    var = np.sum(inv_chol**2, axis=0) / n0
    se = np.sqrt(var)
    if beta_hat is None:
        return se, None, None
    z = stats.norm.ppf(1.0 - alpha / 2.0)
    est = np.asarray(beta_hat, dtype=float)[active]
    return se, est - z * se, est + z * se


def _finish(
    estimator: str,
    problem: LsaProblem,
    path: PathResult,
    alpha: float,
    timings: dict[str, float],
    **extra,
) -> DacFitResult:
    beta_hat = path.betas[path.selected_index].copy()
    active = np.flatnonzero(beta_hat)
    if active.size:
        se, lo, hi = oracle_se(problem.info, active, problem.n0, alpha, beta_hat)
    else:
        se = lo = hi = np.zeros(0)
    return DacFitResult(
        estimator=estimator,
        beta_hat=beta_hat,
        active_set=active,
        beta_tilde=problem.beta_tilde,
        info=problem.info,
        se=se,
        ci_lower=lo,
        ci_upper=hi,
        alpha=alpha,
        lambda_selected=path.lambda_selected,
        path=path,
        n0=problem.n0,
        d0=problem.d0,
        timings=timings,
        **extra,
    )


@contextmanager
def _stage(name: str):
    """Prefix numerical failures with the pipeline stage they came from."""
    try:
        yield
    except NumericalError as exc:
        raise type(exc)(f"{name}: {exc}") from exc


def _penalized_step(problem_args, path_config: PathConfig, timings):
    t0 = time.perf_counter()
    with _stage("step (iii)"):
        problem = LsaProblem.from_estimate(*problem_args)
        stage: dict[str, float] = {}
        path = fit_lsa_path(problem, path_config.n_lambda, path_config.lambda_min_ratio, timings=stage)
    timings["step_iii"] = time.perf_counter() - t0 - stage["tuning"]
    timings["tuning"] = stage["tuning"]
    return problem, path


def fit_dac(
    dataset: SurvivalDataset,
    k_shards: int = 10,
    n_iter: int = 2,
    *,
    gamma: float = 1.0,
    alpha: float = 0.05,
    seed: int = 0,
    threads: int = 1,
    newton_config: NewtonConfig | None = None,
    path_config: PathConfig | None = None,
) -> DacFitResult:
    """Divide-and-conquer adaptive LASSO Cox fit."""
    path_config = path_config or PathConfig()
    t_start = time.perf_counter()
    plan = make_shard_plan(dataset, k_shards, seed)
    with _stage("steps (i)-(ii)"):
        unpen = fit_dac_unpenalized(dataset, plan, n_iter, newton_config, threads)
    timings = dict(unpen.timings)
    timings["step_ii"] = sum(v for k, v in timings.items() if k.startswith("step_ii_round"))
    problem, path = _penalized_step(
        (unpen.beta_tilde, unpen.info_dac, dataset.n_subjects, dataset.d0, gamma), path_config, timings
    )
    timings["total"] = time.perf_counter() - t_start
    return _finish(
        "dac", problem, path, alpha, timings,
        k_shards=k_shards, n_iter=n_iter, iterate_history=unpen.iterate_history,
    )


def fit_full_adaptive_lasso_oracle(
    dataset: SurvivalDataset,
    newton_config: NewtonConfig | None = None,
    path_config: PathConfig | None = None,
    *,
    gamma: float = 1.0,
    alpha: float = 0.05,
) -> DacFitResult:
    """Full-sample MPLE and information, then the LSA adaptive LASSO path."""
    path_config = path_config or PathConfig()
    timings: dict[str, float] = {}
    t_start = time.perf_counter()
    with _stage("full-sample MPLE"):
        mple = fit_mple(dataset, newton_config)
    timings["mple"] = time.perf_counter() - t_start
    problem, path = _penalized_step(
        (mple.beta, mple.derivs.info, dataset.n_subjects, dataset.d0, gamma), path_config, timings
    )
    timings["total"] = time.perf_counter() - t_start
    return _finish("full_lin", problem, path, alpha, timings, iterate_history=[mple.beta])


def bic_v(dataset: SurvivalDataset, beta: np.ndarray) -> float:
    """-2 * (summed log partial likelihood) + log(d0) * df."""
    ll = pl_derivatives(dataset, beta, order=0).loglik * dataset.n_subjects
    return float(-2.0 * ll + np.log(dataset.d0) * np.count_nonzero(beta))


def _prox_newton(dataset, beta, weights, lam, tol=1e-8, max_iter=100):
    """Minimize -loglik(b) + lam * sum w_j |b_j| by proximal Newton with backtracking."""
    n = dataset.n_subjects
    free = np.isfinite(weights)
    pen_w = np.where(free, weights, 0.0)

    def objective(b, ll):
        return -ll + lam * float(np.sum(pen_w * np.abs(b)))

    d = pl_derivatives(dataset, beta, order=2)
    f = objective(beta, d.loglik)
    for _ in range(max_iter):
        target = beta + np.linalg.solve(d.info + 1e-12 * np.eye(beta.size), d.score)
        x0 = matrix_sqrt_spd(d.info)
        sub = LsaProblem(x0, x0 @ target, weights, target, d.info, n, dataset.d0)
        cand_full = solve_weighted_lasso(sub, lam, init=beta)
        step = cand_full - beta
        t = 1.0
        for _ in range(30):
            cand = beta + t * step
            try:
                ll = pl_derivatives(dataset, cand, order=0).loglik
            except NumericalError:
                t *= 0.5
                continue
            f_new = objective(cand, ll)
            if f_new <= f + 1e-14 * max(1.0, abs(f)):
                break
            t *= 0.5
        else:
            return beta
        beta, f = cand, f_new
        if np.max(np.abs(t * step)) <= tol:
            return beta
        d = pl_derivatives(dataset, beta, order=2)
    raise ConvergenceError("proximal Newton did not converge")


def fit_full_penalized_pl(
    dataset: SurvivalDataset,
    newton_config: NewtonConfig | None = None,
    path_config: PathConfig | None = None,
    *,
    gamma: float = 1.0,
    alpha: float = 0.05,
) -> DacFitResult:
    """Adaptive LASSO on the exact full-sample partial likelihood.

    Weights come from the full-sample MPLE; lambda is chosen by :func:`bic_v`.
    Standard errors use the full-sample information at the MPLE.
    """
    path_config = path_config or PathConfig()
    timings: dict[str, float] = {}
    t_start = time.perf_counter()
    with _stage("full-sample MPLE"):
        mple = fit_mple(dataset, newton_config)
    timings["mple"] = time.perf_counter() - t_start

    t0 = time.perf_counter()
    problem = LsaProblem.from_estimate(mple.beta, mple.derivs.info, dataset.n_subjects, dataset.d0, gamma)
    w = problem.weights
    free = problem.free
    score0 = pl_derivatives(dataset, np.zeros(dataset.p), order=1).score
    lmax = float(np.max(np.abs(score0[free]) / w[free])) if np.any(free) else 0.0
    if lmax == 0.0:
        lambdas = np.zeros(1)
    else:
        lambdas = lmax * np.logspace(0.0, np.log10(path_config.lambda_min_ratio), path_config.n_lambda)
    betas = np.empty((lambdas.size, dataset.p))
    beta = np.zeros(dataset.p)
    with _stage("penalized PL path"):
        for i, lam in enumerate(lambdas):
            beta = _prox_newton(dataset, beta, w, float(lam))
            betas[i] = beta
    timings["step_iii"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    bics = np.array([bic_v(dataset, b) for b in betas])
    timings["tuning"] = time.perf_counter() - t0
    path = PathResult(lambdas, betas, np.count_nonzero(betas, axis=1), bics, int(np.argmin(bics)))
    timings["total"] = time.perf_counter() - t_start
    return _finish("full", problem, path, alpha, timings, iterate_history=[mple.beta])
