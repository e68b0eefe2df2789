"""Eigenvalues and modes of a fixed-end string with variable density.

Solves -psi'' = E rho(x) psi on (-L, L) with psi(+-L) = 0 by collocation,
integral-operator iteration, shooting, perturbation theory and WKB.
"""

__version__ = "0.1.0"

from .density import (  # noqa: E402
    DensityProfile,
    borg,
    constant,
    gottlieb_transform,
    linear,
    parabolic,
    parse_density_spec,
    quadrature_density,
)

__all__ = [
    "DensityProfile", "borg", "constant", "gottlieb_transform", "linear",
    "parabolic", "parse_density_spec", "quadrature_density", "__version__",
]
