"""Uniformly accurate two-scale spectral integrators for oscillatory PDEs."""

from .spectral import (
    SpatialGrid,
    TauGrid,
    SpatialField,
    TwoScaleField,
    apply_x_multiplier,
    tau_average,
    tau_antiderivative,
    tau_derivative,
    tau_lowpass,
    tau_lowpass_complement,
    evaluate_at_tau,
    hs_norm,
)

__all__ = [
    "SpatialGrid",
    "TauGrid",
    "SpatialField",
    "TwoScaleField",
    "apply_x_multiplier",
    "tau_average",
    "tau_antiderivative",
    "tau_derivative",
    "tau_lowpass",
    "tau_lowpass_complement",
    "evaluate_at_tau",
    "hs_norm",
]
