"""Ergodic capacity of RIS-assisted links: closed forms, asymptotics and oracles."""

from .capacity import (
    CapacityResult,
    Method,
    dropped_terms,
    dropped_terms_log10,
    ec_closed_form,
    ec_high_snr,
    ec_high_snr_high_n,
    ec_quadrature,
    ec_single_ru,
)
from .channel import GammaFitParams, SystemConfig, fit_params, moments
from .montecarlo import McConfig, McEstimate, estimate_ec, estimate_pdf
from .specfun import SeriesControl

__all__ = [
    "CapacityResult",
    "GammaFitParams",
    "McConfig",
    "McEstimate",
    "Method",
    "SeriesControl",
    "SystemConfig",
    "dropped_terms",
    "dropped_terms_log10",
    "ec_closed_form",
    "ec_high_snr",
    "ec_high_snr_high_n",
    "ec_quadrature",
    "ec_single_ru",
    "estimate_ec",
    "estimate_pdf",
    "fit_params",
    "moments",
]

__version__ = "0.1.0"
