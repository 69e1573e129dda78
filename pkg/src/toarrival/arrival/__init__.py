"""Arrival-time distribution, moments, tails, flux and backflow for momentum states."""
from .backflow import backflow_scan, flux, momentum_sign, wavefunction, wavefunction_derivative
from .povm import (
    DistributionResult,
    TailFit,
    TailLaw,
    apply_T_operator,
    arrival_moment,
    fit_tail,
    integration_window,
    interval_probability,
    missing_norm_estimate,
    suggest_time_grid,
    t_operator_expectation,
    tail_exponent,
    tail_law,
    toa_amplitude,
    toa_distribution,
    variance_form,
)
from .states import MomentumState, backflow, custom, from_descriptor, gaussian, monomial, sampled

__all__ = [
    "DistributionResult", "MomentumState", "TailFit", "TailLaw", "apply_T_operator", "arrival_moment",
    "backflow", "backflow_scan", "custom", "fit_tail", "flux", "from_descriptor", "gaussian",
    "integration_window", "interval_probability", "missing_norm_estimate", "momentum_sign", "monomial",
    "sampled", "suggest_time_grid", "t_operator_expectation", "tail_exponent", "tail_law", "toa_amplitude",
    "toa_distribution", "variance_form", "wavefunction", "wavefunction_derivative",
]
