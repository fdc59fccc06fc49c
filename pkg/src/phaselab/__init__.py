"""Numerical laboratory for the Allen-Cahn equation with nonlinear diffusion.

Modules by responsibility:

    model      admissible (φ, f) pairs, the double well W, reaction flow
    profiles   standing wave U₀, corrector U₁, transport coefficients
    pde        2D finite-difference time stepping and diagnostics
    geometry   level-set extraction, signed distance, profile comparison
    mcf        curvature-flow reference fronts and the circle law
    harness    experiment orchestration, reports, acceptance summary
"""

from .model import (
    BistableModel,
    ModelValidationError,
    build_model,
    cubic_flux,
    generation_time,
    linear_cubic,
    potential,
    quintic_reaction,
    reaction_flow,
    registry_models,
    validate_model,
)
from .profiles import (
    Corrector,
    StandingWave,
    TransportCoefficients,
    compute_corrector,
    compute_lambda0,
    compute_lambda0_profile,
    compute_mobility,
    compute_standing_wave,
    compute_surface_tension,
    transport_coefficients,
)

__version__ = "0.1.0"
