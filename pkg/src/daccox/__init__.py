"""Divide-and-conquer adaptive LASSO Cox regression for large survival datasets."""

__version__ = "0.1.0"

from .data import (  # noqa: E402
    ShardPlan,
    SurvivalDataset,
    SurvivalRecord,
    make_shard_plan,
    read_csv,
    shard_dataset,
    split_dataset,
    validate_dataset,
    write_csv,
)
from .errors import ConvergenceError, DataError, NumericalError, SingularMatrixError  # noqa: E402
from .partial_likelihood import PLDerivatives, pl_derivatives  # noqa: E402
from .mple import NewtonConfig, fit_mple  # noqa: E402
from .dac import DacUnpenalized, dac_onestep_round, fit_dac_unpenalized  # noqa: E402
from .lsa import LsaProblem, PathResult, fit_lsa_path, matrix_sqrt_spd, solve_weighted_lasso  # noqa: E402
from .inference import (  # noqa: E402
    DacFitResult,
    PathConfig,
    fit_dac,
    fit_full_adaptive_lasso_oracle,
    fit_full_penalized_pl,
    oracle_se,
)
from .simulate import ScenarioConfig, TrueBeta, covariance, generate, true_beta  # noqa: E402
