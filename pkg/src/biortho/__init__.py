"""Biorthogonal eigensolvers for dense non-Hermitian matrices.

Two strategies compute eigenpairs (lambda, phi, psi) with A phi = lambda phi,
A^dagger psi = conj(lambda) psi and <psi, phi> = 1: a coupled nonlinear flow
whose equilibria are eigenpairs, and power iteration with Schwartz-quotient
estimates, deflation and shifted inverse iteration. A QR-based oracle and the
closed-form flow solution provide independent reference values.
"""

from .errors import BiorthoError
from .flow import flow_sweep, solve_flow, solve_flow_smallest
from .ode import IntegratorConfig, integrate
from .oracle import closed_form_flow, qr_spectrum
from .power import (
    adjoint_power_iterate,
    deflate_vector,
    full_spectrum,
    power_iterate,
    power_sweep,
    schwartz_quotient,
    shifted_inverse_power,
)
from .structures import BiorthoPair, ConvergenceTrace, FlowResult, Mode, PowerResult, SolverConfig, Status

__all__ = [
    "BiorthoError",
    "BiorthoPair",
    "ConvergenceTrace",
    "FlowResult",
    "IntegratorConfig",
    "Mode",
    "PowerResult",
    "SolverConfig",
    "Status",
    "adjoint_power_iterate",
    "closed_form_flow",
    "deflate_vector",
    "flow_sweep",
    "full_spectrum",
    "integrate",
    "power_iterate",
    "power_sweep",
    "qr_spectrum",
    "schwartz_quotient",
    "shifted_inverse_power",
    "solve_flow",
    "solve_flow_smallest",
]
