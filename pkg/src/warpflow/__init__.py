"""Inverse mean curvature flow of axisymmetric graphs in warped cylinders,
with checks of the Minkowski-type inequality and isoperimetric profiles."""

from .errors import (
    ConstructionError, DomainError, MalformedProfile, NumericalFailure, PreconditionViolation, SpeedUndefined,
    StepCollapse, WarpflowError,
)
from .flows import FlowConfig, FlowTrace, advance, radial_flow_exact, read_trace_csv, run_flow
from .profiles import ProfileTable, bhw_quantity, build_profile, lookup, ode_residual
from .surface import (
    GraphSurface, area, cos_bump, first_variation_oracle, from_profile, offcenter_sphere, quermassintegral,
    radial_sphere, total_mean_curvature, weighted_enclosed_volume,
)
from .verification import (
    Verdict, check_limit_G, check_minkowski, check_monotone_G, fit_asymptotics, isoperimetric_sweep,
)
from .warped_space import WarpedSpace, make_space, parse_space_spec, ricci, validate_assumptions, warp_eval

__version__ = "0.1.0"
