"""Exception types shared across the package."""


class TipcurveError(Exception):
    """Base class for all tipcurve errors."""


class ConfigError(TipcurveError):
    """Invalid run configuration (schema violation, missing/unknown keys)."""


class IntegrationError(TipcurveError):
    """Base class for integration failures."""


class StiffnessError(IntegrationError):
    """Step size underflowed h_min without an accepted step."""


class NumericError(IntegrationError):
    """NaN/Inf encountered in the right-hand side or step budget exhausted."""


class NumericInconsistencyError(TipcurveError):
    """A numerical result contradicts an exact structural property
    (e.g. crossing a/r probes that the comparison theorems forbid)."""


class NotHyperbolicError(TipcurveError):
    """Dichotomy fit produced a non-positive decay rate."""


class OracleInconsistencyError(TipcurveError):
    """Classifier verdicts along a bisection bracket are not monotone."""
