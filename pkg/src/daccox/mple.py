"""Newton-Raphson maximum partial likelihood with step halving."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .data import SurvivalDataset
from .errors import ConvergenceError, NumericalError, SingularMatrixError
from .partial_likelihood import PLDerivatives, pl_derivatives

__all__ = ["NewtonConfig", "MpleResult", "fit_mple", "solve_spd"]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class NewtonConfig:
    max_iter: int = 100
    grad_tol: float = 1e-9
    step_halving_max: int = 20
    ridge_fallback: float = 1e-8

    def __post_init__(self):
        for name in ("max_iter", "grad_tol", "step_halving_max", "ridge_fallback"):
            if not getattr(self, name) > 0:
                raise ValueError(f"NewtonConfig.{name} must be positive")


@dataclass
class MpleResult:
    beta: np.ndarray
    derivs: PLDerivatives
    iterations: int
    loglik_path: list[float] = field(default_factory=list)

    def __iter__(self):
        # allows ``beta, derivs, iterations = fit_mple(...)``
        return iter((self.beta, self.derivs, self.iterations))


def solve_spd(a: np.ndarray, b: np.ndarray, ridge: float = 1e-8) -> np.ndarray:
    """Solve ``a x = b`` for symmetric positive definite ``a``.

    On Cholesky failure retries once with ``ridge * I`` added, then raises
    :class:`SingularMatrixError`.
    """
    try:
        return linalg.cho_solve(linalg.cho_factor(a, lower=True), b)
    except linalg.LinAlgError:
        pass
    try:
        x = linalg.cho_solve(linalg.cho_factor(a + ridge * np.eye(a.shape[0]), lower=True), b)
    except linalg.LinAlgError as exc:
        raise SingularMatrixError("information matrix is singular (separation or collinearity?)") from exc
    log.debug("ridge fallback used in SPD solve")
    return x


def fit_mple(
    data: SurvivalDataset,
    config: NewtonConfig | None = None,
    init: np.ndarray | None = None,
) -> MpleResult:
    """Maximize the partial likelihood of ``data`` by damped Newton iterations.

    Converges when the sup-norm of the score is at most ``config.grad_tol``.
    Each Newton step is halved until the log partial likelihood does not
    decrease (up to a round-off slack).
    """
    config = config or NewtonConfig()
    if data.d0 < 1:
        raise ValueError("cannot fit a Cox model without events")
    beta = np.zeros(data.p) if init is None else np.array(init, dtype=float)
    d = pl_derivatives(data, beta, order=2)
    path = [d.loglik]
    for it in range(config.max_iter + 1):
        if np.max(np.abs(d.score)) <= config.grad_tol:
            return MpleResult(beta, d, it, path)
        if it == config.max_iter:
            break
        step = solve_spd(d.info, d.score, config.ridge_fallback)
        slack = 1e-13 * max(1.0, abs(d.loglik))
        t = 1.0
        for _ in range(config.step_halving_max + 1):
            cand = beta + t * step
            try:
                trial = pl_derivatives(data, cand, order=0)
            except NumericalError:
                t *= 0.5
                continue
            if trial.loglik >= d.loglik - slack:
                break
            t *= 0.5
        else:
            raise ConvergenceError(
                f"step halving failed at iteration {it} (|score|={np.max(np.abs(d.score)):.3g})"
            )
        beta = cand
        d = pl_derivatives(data, beta, order=2)
        path.append(d.loglik)
    raise ConvergenceError(
        f"Newton did not converge in {config.max_iter} iterations "
        f"(|score|={np.max(np.abs(d.score)):.3g})"
    )
