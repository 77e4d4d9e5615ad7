"""Radial solutions of the 1-Laplacian with gradient absorption on balls."""

from .datum import RadialDatum, Term, ball_volume, sphere_area
from .errors import (
    InapplicableDatumError,
    InfeasibleFieldError,
    NonexistenceError,
    ScenarioError,
    TVLaplaceError,
    VerificationError,
)
from .growth import (
    AffinePlus,
    Constant,
    FlatInterval,
    GrowthClass,
    HingePlus,
    PiecewiseLinear,
    Rational1,
    Rational2,
    Trapezoid,
    classify_growth,
    inverse_G,
    primitive_G,
)
from .lorentz import (
    decreasing_rearrangement,
    distribution_function,
    dual_norm_bounds,
    norm_lorentz_q1,
    norm_marcinkiewicz,
    quasinorm_marcinkiewicz,
    sobolev_constant,
)
from .solver import (
    boundary_check,
    classify_regime,
    construct_radial_solution,
    envelope_w,
    green_identity,
    potential_Psi,
    total_variation,
    weak_residual,
)

__version__ = "0.1.0"
