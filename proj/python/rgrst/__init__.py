"""RGRST model of hospital charge and length of stay."""

from ._rgrst import (
    CoxianParams,
    DataError,
    Error,
    ParameterError,
    RgrstModel,
    RgrstParams,
    chi_square,
    fit,
    kde,
    log_likelihood,
    set_max_threads,
    simulate,
)

__all__ = [
    "CoxianParams",
    "DataError",
    "Error",
    "ParameterError",
    "RgrstModel",
    "RgrstParams",
    "chi_square",
    "fit",
    "kde",
    "log_likelihood",
    "set_max_threads",
    "simulate",
]
