"""parkloc: dead-reckoning localization toolkit for parking maneuvers.

Simulates planar low-speed vehicle motion with turn-slip and Ackermann-
deviation tire effects, runs a strapdown EKF with pluggable lateral-
velocity pseudo-measurements, calibrates the lateral model from ground
truth, and quantifies localization error both in closed form and on
synthetic maneuvers.
"""

from .core import (AckermannDeviationMap, GroundTruthSample, ManeuverLog,
                   SensorSample, TireParams, VehicleParams,
                   driving_direction_sign, transfer_planar_velocity)
from .errors import (ConvergenceError, CovarianceError, DegenerateParameterError,
                     NumericalError, SchemaError, TurnSlipSingularError,
                     ValidationError)
from .lateral import (LateralModelKind, LateralModelParams, beta_delta_model,
                      k_from_x, select_parameter, vy_omega_model, x_from_k)

__version__ = "0.1.0"

__all__ = [
    "AckermannDeviationMap", "GroundTruthSample", "ManeuverLog", "SensorSample",
    "TireParams", "VehicleParams", "driving_direction_sign",
    "transfer_planar_velocity", "LateralModelKind", "LateralModelParams",
    "beta_delta_model", "k_from_x", "select_parameter", "vy_omega_model",
    "x_from_k", "ValidationError", "SchemaError", "NumericalError",
    "DegenerateParameterError", "TurnSlipSingularError", "ConvergenceError",
    "CovarianceError", "__version__",
]
