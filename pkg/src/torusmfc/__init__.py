"""Fourier-Galerkin solver for mean field optimal control on the torus.

The library approximates the coupled forward-backward PDE system of a mean
field control problem by a closed system of ODEs on Fourier coefficients:
a backward Hamilton-Jacobi hierarchy for the value potential u and a forward
Fokker-Planck hierarchy for the density mu, truncated at band N and coupled
through a Picard fixed point.  From the solution it extracts the optimal
feedback control and the value function, and it ships the measurement
harness that checks the expected spectral convergence rates and structural
inequalities.
"""

from .spectral import (
    GridField,
    ModeIndex,
    SpectralField,
    dirichlet_truncate,
    from_grid,
    gradient,
    is_probability_coeffs,
    l2_error,
    linf_error,
    min_on_grid,
    pair,
    read_field_csv,
    sobolev_norm,
    to_grid,
    write_field_csv,
)

__all__ = [
    "GridField",
    "ModeIndex",
    "SpectralField",
    "dirichlet_truncate",
    "from_grid",
    "gradient",
    "is_probability_coeffs",
    "l2_error",
    "linf_error",
    "min_on_grid",
    "pair",
    "read_field_csv",
    "sobolev_norm",
    "to_grid",
    "write_field_csv",
]

__version__ = "0.1.0"
