"""KMR minimal graphs over marked strips.

Builds the surfaces ``M(theta, alpha, pi/2)`` from their Weierstrass data,
checks that each piece is a Jenkins-Serrin graph over a strip ``S(h, a)``,
and inverts the map ``(theta, alpha) -> (h, a)``.
"""

__version__ = "0.1.0"

from .curve import (BranchPoints, CurvePoint, FlatChart, TorusParams, build_flat_chart,
                    lambda_of_theta, w_squared, z_of_u)
from .estimator import StripMap
from .exceptions import (BranchProximityError, ConfigurationError, DomainError,
                         InfeasibleStripError, InternalInconsistencyError, KMRError,
                         NonConvergenceError, QuadratureError, SingularPointError)
from .graph import (GraphReport, MarkedStrip, boundary_divergence_check, strip_of_params,
                    verify_graph, x1_along_sigma)
from .limits import limit_probe
from .solver import ParameterDomain, SolveResult, phi, solve_strip
from .surface import Isometry, SurfaceMesh, apply_isometry, build_graph_piece, level_curve
from .weierstrass import (EndPoints, PeriodsReport, SurfaceParams, end_points, flux_along,
                          gauss_map, integrand, integrate_position, normalize_mu,
                          period_T, period_around_end, periods_report,
                          vanishing_period_check)

__all__ = [
    "BranchPoints", "BranchProximityError", "ConfigurationError", "CurvePoint",
    "DomainError", "EndPoints", "FlatChart", "GraphReport", "InfeasibleStripError",
    "InternalInconsistencyError", "Isometry", "KMRError", "MarkedStrip",
    "NonConvergenceError", "ParameterDomain", "PeriodsReport", "QuadratureError",
    "SingularPointError", "SolveResult", "StripMap", "SurfaceMesh", "SurfaceParams",
    "TorusParams", "apply_isometry", "boundary_divergence_check", "build_flat_chart",
    "build_graph_piece", "end_points", "flux_along", "gauss_map", "integrand",
    "integrate_position", "lambda_of_theta", "level_curve", "limit_probe", "normalize_mu",
    "period_T", "period_around_end", "periods_report", "phi", "solve_strip",
    "strip_of_params", "vanishing_period_check", "verify_graph", "w_squared",
    "x1_along_sigma", "z_of_u",
]
