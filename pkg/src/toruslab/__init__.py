"""toruslab: Carleson-box norms, semigroup extensions, and mild Navier-Stokes
solutions on the periodic torus, with a property-based theorem harness."""

from toruslab.spectral import (
    Field,
    SpectralField,
    TorusGrid,
    extension_time_derivative,
    forward_transform,
    frac_laplacian_power,
    heat_semigroup,
    inverse_transform,
    laplacian,
    leray_project,
    poisson_semigroup,
    riesz_transform,
    spatial_gradient,
)

__version__ = "0.1.0"

__all__ = [
    "Field",
    "SpectralField",
    "TorusGrid",
    "extension_time_derivative",
    "forward_transform",
    "frac_laplacian_power",
    "heat_semigroup",
    "inverse_transform",
    "laplacian",
    "leray_project",
    "poisson_semigroup",
    "riesz_transform",
    "spatial_gradient",
    "__version__",
]
