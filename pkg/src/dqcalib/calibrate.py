"""One entry point over both solvers, producing a uniform result record."""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .dq_core import DualQuaternion
from .problem import (
    CalibrationProblem,
    ConstraintSet,
    MotionPair,
    ScaledSensor,
    accumulate_cost,
    extract_calibration,
    project_feasible,
)
from .solver_fast import SqpSettings, solve_fast_problem
from .solver_global import SdpSettings, solve_global_problem

SOLVERS = ("fast", "global")


@dataclass(frozen=True)
class CalibrationSolution:
    calibration: DualQuaternion
    alphas: tuple[float, ...]
    cost: float
    solver: str
    x: np.ndarray = field(repr=False, default=None)
    dual_value: float | None = None
    gap: float | None = None
    certified: bool | None = None
    wall_time: float = 0.0                # seconds
    projection_distance: float = 0.0
    parallel_misfit: float = 0.0          # radians between r and the worst s_j
    warnings: tuple[str, ...] = ()

    @property
    def translation(self) -> np.ndarray:
        return self.calibration.translation()


def _finish(problem: CalibrationProblem, x, solver, t0, caught, **extra) -> CalibrationSolution:
    x, dist = project_feasible(x, problem.m)
    dq, alphas, misfit = extract_calibration(x, problem.m)
    return CalibrationSolution(
        calibration=dq, alphas=tuple(alphas), cost=problem.cost(x), solver=solver, x=x,
        wall_time=time.perf_counter() - t0, projection_distance=dist, parallel_misfit=misfit,
        warnings=tuple(str(w.message) for w in caught), **extra)


def solve_problem(problem: CalibrationProblem, solver: str = "fast",
                  sqp_settings: SqpSettings = SqpSettings(),
                  sdp_settings: SdpSettings = SdpSettings()) -> CalibrationSolution:
    """Run one solver on an assembled problem.

    Wall time covers optimisation and recovery, not problem assembly.
    """
    if solver not in SOLVERS:
        raise ValueError(f"unknown solver {solver!r}; expected one of {SOLVERS}")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        t0 = time.perf_counter()
        if solver == "fast":
            sol = solve_fast_problem(problem, sqp_settings)
            cert = sol.certificate
            return _finish(problem, sol.x, "fast", t0, caught,
                           dual_value=float(cert.lam[0]), gap=cert.gap,
                           certified=cert.certified)
        sol = solve_global_problem(problem, sdp_settings)
        return _finish(problem, sol.x, "global", t0, caught,
                       dual_value=sol.dual_value, gap=sol.gap, certified=True)


def calibrate(pairs: Sequence[MotionPair], m: int = 1, solver: str = "fast",
              scaled: ScaledSensor = ScaledSensor.SENSOR_B,
              constraint_set: ConstraintSet = ConstraintSet.REDUCED3,
              sqp_settings: SqpSettings = SqpSettings(),
              sdp_settings: SdpSettings = SdpSettings()) -> CalibrationSolution:
    """Estimate the calibration and ``m`` translation scales from motion pairs."""
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        problem = accumulate_cost(pairs, m, scaled, constraint_set)
    sol = solve_problem(problem, solver, sqp_settings, sdp_settings)
    if caught:
        sol = _with_warnings(sol, [str(w.message) for w in caught])
    return sol


def _with_warnings(sol: CalibrationSolution, extra: list[str]) -> CalibrationSolution:
    return replace(sol, warnings=tuple(extra) + sol.warnings)
