"""Numerical laboratory for nonlinear gravitational instability of expanding
Newtonian universes: the contrast blowup ODE and its certified envelopes, the
compactified-time diagnostics, exact-solution residual checks of the sourced
fluid system, log-periodic spherically symmetric evolution, and numeric
verification of the singular-system coefficient conditions."""

__version__ = "0.1.0"

from .params import ModelParams, build_params, k_from_iota, params_from_iota3, solve_iota
from .contrast_ode import (BoundReport, OdeTrajectory, ToleranceSpec,
                           blowup_bracket, blowup_ladder, bound_certificates,
                           envelope_constants, estimate_blowup_time,
                           integrate_contrast, rk4_reference, zero_trajectory)
from .timemaps import (TimeMaps, check_G_decay, compute_diagnostics, compute_g,
                       invert_tau, terminal_window)
from .reference import (FluidPoint, ResidualReport, background_state,
                        euler_poisson_residual, homogeneous_state,
                        sample_annulus, source_terms)
from .pde import (EvolveControls, FieldState, MonitorSeries, compute_psi,
                  continuity_residual, entropy_field, evolve, init_from_data, rhs)
from .fuchsian import (ConditionReport, FuchsianEval, GammaConstants,
                       assemble_matrices, find_certified_radius,
                       fuchsian_fields, gamma_constants, q_lower_bound,
                       q_quantity, system_residual, system_rhs_direct,
                       verify_conditions)
