"""Exception hierarchy shared across the toolkit.

Two families matter for scripting: validation problems (bad inputs, bad
config, malformed logs) and numerical failures (divergence, degenerate
algebra). The CLI maps them to exit codes 2 and 3 respectively.
"""


class ValidationError(ValueError):
    """Invalid input data, configuration, or log structure."""


class SchemaError(ValidationError):
    """Config document violates the schema (unknown/missing/ill-typed key)."""


class NumericalError(RuntimeError):
    """Numerical failure: divergence, loss of positive definiteness, poles."""


class DegenerateParameterError(NumericalError):
    """Parameter algebra hit a pole (e.g. zero-slip point at the front axle)."""


class TurnSlipSingularError(NumericalError):
    """Turn slip is undefined at (near) standstill contact speed."""


class ConvergenceError(NumericalError):
    """Iterative procedure did not settle within its budget."""


class CovarianceError(NumericalError):
    """Filter covariance lost symmetry or positive definiteness."""
