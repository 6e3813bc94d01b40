"""Bivariate conditional copula models with sparse GP-SIM calibration."""

from ._core import (
    Fit,
    cdf,
    cond_expectation_u,
    fit,
    generate_scenario,
    h_function,
    inv_link,
    log_density,
    sa_test,
    sample_pairs,
    split_train_test,
    tau_from_theta,
    theta_from_tau,
    __version__,
)

__all__ = [
    "Fit",
    "cdf",
    "cond_expectation_u",
    "fit",
    "generate_scenario",
    "h_function",
    "inv_link",
    "log_density",
    "sa_test",
    "sample_pairs",
    "split_train_test",
    "tau_from_theta",
    "theta_from_tau",
    "__version__",
]
