"""Numerical verification of Liouville-equation solutions on conformal surfaces."""
from .errors import (
    CompletenessError,
    DivergenceError,
    DomainError,
    EvaluationError,
    InfiniteTotalCurvatureError,
    LevelSetError,
    ParameterError,
    UsageError,
    VerificationError,
)
from .fields import GridSpec, SampledField, ScalarField, gradient_fd, laplacian_fd, region_integral
from .metrics import (
    ConformalMetric,
    gauss_curvature,
    metric_cylinder_pullback,
    metric_flat,
    metric_gamma,
    metric_spherical,
    parse_metric,
)
from .solutions import (
    LiouvilleSolution,
    cone_order_fit,
    kelvin_solution,
    kelvin_transform,
    parse_solution,
    pde_residual,
    solution_cylinder,
    solution_gamma,
    solution_spherical,
)
from .quadrature import adaptive_quad, alpha_of, integrate_plane, total_gauss_curvature, total_mass
from .geodesics import AvrReport, DistanceField, avr, ball_area, distance_slope, eikonal_distance, radial_distance
from .levelsets import (
    LevelSetProfile,
    extract_levelset,
    f_profile,
    isoperimetric_check,
    metric_area,
    metric_length,
    ode_inequality_check,
)
from .potential import (
    conjugacy_check,
    log_potential,
    mean_value_identity_check,
    potential_upper_bound_check,
    slope_estimate,
)
from .reports import VerificationReport, emit_report
from .campaigns import CampaignConfig, run_campaign

__version__ = "0.1.0"
