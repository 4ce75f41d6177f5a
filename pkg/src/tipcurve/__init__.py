"""tipcurve: rate-induced tipping analysis for scalar concave quadratic ODEs.

The library studies ``x' = -x^2 + q(t) x + p(t) + lambda`` and the
transition equation ``y' = -(y - (2/pi) arctan(c t))^2 + p(t) + lambda``:
extremal bounded solutions, Case A/B/C classification, the saddle-node
value lambda*, the tipping curve lambda*(c) and its zeros.
"""

from .bifurcation import (
    CaseVerdict,
    ClassifierParams,
    CurvePoint,
    LambdaStarResult,
    TippingPoint,
    classify,
    collision_diagnostics,
    find_tipping_points,
    lambda_star,
    lambda_star_curve,
    lambda_star_of_c,
)
from .errors import (
    ConfigError,
    IntegrationError,
    NotHyperbolicError,
    NumericError,
    NumericInconsistencyError,
    OracleInconsistencyError,
    StiffnessError,
    TipcurveError,
)
from .forcing import (
    ArctanRamp,
    CenterClamped,
    Constant,
    Forcing,
    RationalBump,
    Scaled,
    Sinusoid,
    Sum,
    evaluate,
    forcing_from_json,
    forcing_to_json,
    q_c_tail_bound,
    sup_bound,
)
from .integrator import (
    Completed,
    Escaped,
    IntegratorConfig,
    QuadraticRHS,
    Trajectory,
    get_integration_count,
    integrate,
    integrate_threshold,
    integrate_until,
    reset_integration_count,
)
from .riccati import (
    DichotomyEstimate,
    EscapedBefore,
    QuadraticModel,
    TailEstimate,
    TransitionModel,
    approx_a_tail,
    approx_r_tail,
    bound_m,
    compute_tails,
    estimate_dichotomy,
    separation,
    to_x_frame,
    to_y_frame,
)
from .svg import emit_svg

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # forcing
    "Forcing", "Constant", "Sinusoid", "Sum", "Scaled", "ArctanRamp",
    "RationalBump", "CenterClamped", "evaluate", "sup_bound",
    "q_c_tail_bound", "forcing_to_json", "forcing_from_json",
    # integrator
    "IntegratorConfig", "QuadraticRHS", "Trajectory", "Completed", "Escaped",
    "integrate", "integrate_threshold", "integrate_until",
    "get_integration_count", "reset_integration_count",
    # models and tails
    "QuadraticModel", "TransitionModel", "TailEstimate", "DichotomyEstimate",
    "EscapedBefore", "bound_m", "approx_a_tail", "approx_r_tail",
    "compute_tails", "separation", "estimate_dichotomy",
    "to_x_frame", "to_y_frame",
    # bifurcation analysis
    "ClassifierParams", "CaseVerdict", "LambdaStarResult", "TippingPoint",
    "CurvePoint", "classify", "lambda_star", "lambda_star_of_c",
    "lambda_star_curve", "find_tipping_points", "collision_diagnostics",
    # output
    "emit_svg",
    # errors
    "TipcurveError", "ConfigError", "IntegrationError", "StiffnessError",
    "NumericError", "NumericInconsistencyError", "NotHyperbolicError",
    "OracleInconsistencyError",
]
