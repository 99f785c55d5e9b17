"""Monte Carlo noise sweeps, scale sweeps and solver timing on synthetic rigs."""

from __future__ import annotations

import csv
import io
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .calibrate import calibrate, solve_problem
from .metrics import calibration_errors
from .problem import ConstraintSet, ScaledSensor, accumulate_cost
from .synth import NoiseSpec, add_noise, generate, random_rig

DEFAULT_GRID = (0.0, 0.05, 0.1, 0.15, 0.2)
SWEEP_COLUMNS = ("p_a", "p_b", "median_eps_t", "median_eps_r", "median_eps_alpha", "trials")


@dataclass(frozen=True)
class Trial:
    seed: int
    p_a: float
    p_b: float
    alphas: tuple[float, ...] = (1.0,)
    n: int = 100
    solver: str = "global"
    scaled: ScaledSensor = ScaledSensor.SENSOR_B


def run_trial(trial: Trial) -> tuple[float, float, float]:
    """``(eps_t, eps_r, max eps_alpha)`` of one noisy synthetic calibration.

    Failed solves count as infinite error so medians stay honest.
    """
    rig = random_rig(trial.seed, trial.alphas, trial.n, trial.scaled)
    pairs, gt = generate(rig)
    pairs = add_noise(pairs, NoiseSpec(trial.p_a, trial.p_b), seed=trial.seed)
    try:
        sol = calibrate(pairs, len(trial.alphas), trial.solver, trial.scaled)
    except Exception:  # noqa: BLE001 - any solver failure is scored, not raised
        return np.inf, np.inf, np.inf
    err = calibration_errors((sol.calibration, sol.alphas), (gt.q_T, gt.alphas))
    return err.eps_t, err.eps_r, max(err.eps_alpha)


def _map(fn, items, jobs: int):
    if jobs <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items, chunksize=4))


def noise_sweep(grid: Sequence[float] = DEFAULT_GRID, trials: int = 10, seed: int = 0,
                n: int = 100, alpha: float = 1.0, solver: str = "global",
                scaled: ScaledSensor = ScaledSensor.SENSOR_B, jobs: int = 1) -> list[dict]:
    """Median errors for every ``(p_a, p_b)`` cell of ``grid x grid``.

    Trial ``k`` of every cell uses rig seed ``seed + k``, so cells differ only
    in the noise levels.  Results do not depend on ``jobs``.
    """
    cells = [(pa, pb) for pa in grid for pb in grid]
    items = [Trial(seed + k, pa, pb, (alpha,), n, solver, scaled)
             for pa, pb in cells for k in range(trials)]
    errs = np.array(_map(run_trial, items, jobs)).reshape(len(cells), trials, 3)
    rows = []
    for (pa, pb), e in zip(cells, errs):
        med = np.median(e, axis=0)
        rows.append({"p_a": pa, "p_b": pb, "median_eps_t": float(med[0]),
                     "median_eps_r": float(med[1]), "median_eps_alpha": float(med[2]),
                     "trials": trials})
    return rows


def scale_sweep(alphas: Sequence[float], trials: int = 10, seed: int = 0, n: int = 100,
                noise: float = 0.05, solver: str = "global", jobs: int = 1) -> list[dict]:
    """Median errors as a function of the true scale, at equal noise on both sensors."""
    items = [Trial(seed + k, noise, noise, (a,), n, solver) for a in alphas for k in range(trials)]
    errs = np.array(_map(run_trial, items, jobs)).reshape(len(alphas), trials, 3)
    rows = []
    for a, e in zip(alphas, errs):
        med = np.median(e, axis=0)
        rows.append({"alpha": a, "median_eps_t": float(med[0]), "median_eps_r": float(med[1]),
                     "median_eps_alpha": float(med[2]), "trials": trials})
    return rows


def rows_to_csv(rows: Sequence[dict], columns: Sequence[str] = SWEEP_COLUMNS) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()


def bench(n: int = 200, iterations: int = 100, seed: int = 0, noise: float = 0.05,
          solvers: Sequence[str] = ("fast", "global"),
          constraint_set: ConstraintSet = ConstraintSet.REDUCED3) -> dict:
    """Wall time of each solver on one fixed instance, in milliseconds.

    Problem assembly happens once outside the timed region.
    """
    rig = random_rig(seed, (1.0,), n)
    pairs, _ = generate(rig)
    pairs = add_noise(pairs, NoiseSpec(noise, noise), seed=seed)
    problem = accumulate_cost(pairs, 1, constraint_set=constraint_set)
    report = {"n_pairs": n, "iterations": iterations, "seed": seed, "noise": noise, "solvers": {}}
    for name in solvers:
        times = np.empty(iterations)
        for i in range(iterations):
            t0 = time.perf_counter()
            solve_problem(problem, name)
            times[i] = time.perf_counter() - t0
        report["solvers"][name] = {"mean_ms": 1e3 * float(times.mean()),
                                   "min_ms": 1e3 * float(times.min()),
                                   "iterations": iterations}
    return report
