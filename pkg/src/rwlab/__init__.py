"""Numerical laboratory for the two-media reduced wave operator.

Discretizes H = -mu(x)^{-1} Laplacian on a box, applies the resolvent
(H - z)^{-1} at complex z, and measures radiation functionals, weighted
resolvent norms, and integral identities against closed-form references.
"""

from .version import VERSION as __version__

from .field import (Field, Grid, WeightProfile, annulus_integral, eval_weight,
                    gradient, interpolate, read_rwf1, sobolev_norm,
                    sphere_integral, starred_norm, weighted_norm, write_rwf1)
from .geometry import (Geometry, MediumPair, check_interface_sign_condition,
                       classify_point, mu_at, mu_node_values, sample_surface,
                       signed_distance)
from .spectral import (BranchCoefficients, DimensionConstants, SpectralParam,
                       branch_coefficients, dimension_constants, k_at)
from .operator import (DiscreteOperator, SolveConfig, SolveReport, SolverError,
                       apply_resolvent, assemble, resolvent_sweep)
from .diagnostics import (IdentityReport, MinusLimit, PlusLimit, RadiationField,
                          SignedK, flux_conservation, identity_residual,
                          mean_radiation_residual, radiation_source_ratio,
                          radiation_term, surface_decay_probe)

__all__ = [
    "__version__",
    "Field", "Grid", "WeightProfile", "annulus_integral", "eval_weight",
    "gradient", "interpolate", "read_rwf1", "sobolev_norm", "sphere_integral",
    "starred_norm", "weighted_norm", "write_rwf1",
    "Geometry", "MediumPair", "check_interface_sign_condition",
    "classify_point", "mu_at", "mu_node_values", "sample_surface",
    "signed_distance",
    "BranchCoefficients", "DimensionConstants", "SpectralParam",
    "branch_coefficients", "dimension_constants", "k_at",
    "DiscreteOperator", "SolveConfig", "SolveReport", "SolverError",
    "apply_resolvent", "assemble", "resolvent_sweep",
    "IdentityReport", "MinusLimit", "PlusLimit", "RadiationField", "SignedK",
    "flux_conservation", "identity_residual", "mean_radiation_residual",
    "radiation_source_ratio", "radiation_term", "surface_decay_probe",
]
