"""Dual-quaternion hand-eye calibration with unknown translation scales.

Two solvers share one problem formulation: ``"fast"`` (local SQP with a
globality certificate) and ``"global"`` (Lagrangian dual SDP with null-space
primal recovery).
"""

from .calibrate import CalibrationSolution, calibrate, solve_problem
from .dq_core import DualQuaternion, Quaternion, dq_from_pose, dq_mul, dq_to_pose
from .errors import CalibrationError, NullSpaceDimension
from .metrics import ErrorReport, calibration_errors
from .problem import (
    CalibrationProblem,
    ConstraintSet,
    MotionPair,
    ScaledSensor,
    accumulate_cost,
    constraint_matrices,
)
from .solver_fast import SqpSettings, solve_fast
from .solver_global import SdpSettings, solve_global

__all__ = [
    "CalibrationError", "CalibrationProblem", "CalibrationSolution", "ConstraintSet",
    "DualQuaternion", "ErrorReport", "MotionPair", "NullSpaceDimension", "Quaternion",
    "ScaledSensor", "SdpSettings", "SqpSettings", "accumulate_cost", "calibrate",
    "calibration_errors", "constraint_matrices", "dq_from_pose", "dq_mul", "dq_to_pose",
    "solve_fast", "solve_global", "solve_problem",
]

__version__ = "0.1.0"
