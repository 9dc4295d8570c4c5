"""Pseudospectral 2D Boussinesq solver with fractional dissipation and a
verification harness for the global a priori bounds of the critical regime."""

from .spectral import (
    FlowParams,
    GridSpec,
    PhysicalField,
    SpectralField,
    biot_savart,
    dealias,
    fractional_laplacian,
    grad,
    lp_norm,
    perp_grad,
    riesz_alpha,
    to_physical,
    to_spectral,
    v_from_theta,
)
from .solver import SimState, StepperConfig, compute_G, initial_data, oss_check, step

__all__ = [
    "FlowParams",
    "GridSpec",
    "PhysicalField",
    "SpectralField",
    "SimState",
    "StepperConfig",
    "biot_savart",
    "compute_G",
    "dealias",
    "fractional_laplacian",
    "grad",
    "initial_data",
    "lp_norm",
    "oss_check",
    "perp_grad",
    "riesz_alpha",
    "step",
    "to_physical",
    "to_spectral",
    "v_from_theta",
]
