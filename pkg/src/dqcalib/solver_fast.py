"""Local solution of the calibration QCQP by SQP, plus a globality certificate.

The SQP works on the problem with ``Q`` divided by ``trace(Q) / dim`` so that
tolerances are independent of the data magnitude.  The certificate estimates
the multipliers at the local solution from the first-order conditions and
checks that ``Z(lambda_hat)`` is positive semidefinite; if it is, and the
dual bound ``lambda_1`` matches the cost, no feasible point has lower cost.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import NoConvergence, RankDeficientGradients
from .problem import (
    CalibrationProblem,
    ConstraintMatrices,
    ConstraintSet,
    MotionPair,
    ScaledSensor,
    accumulate_cost,
    assemble_Z,
    constraint_matrices,
    d_slice,
    join_state,
    project_feasible,
    s_slice,
)


@dataclass(frozen=True)
class SqpSettings:
    max_iter: int = 100
    kkt_tol: float = 1e-10
    feas_tol: float = 1e-8
    step_damping: float = 0.5
    multistart: tuple[str, ...] = ("data", "perturbed", "perturbed", "perturbed", "perturbed")
    seed: int = 0
    # a certified start is globally optimal, so later starts cannot improve on it
    stop_when_certified: bool = True

    def __post_init__(self):
        if self.max_iter < 1 or self.kkt_tol <= 0 or self.feas_tol <= 0:
            raise ValueError("SQP tolerances and iteration count must be positive")
        if not 0.0 < self.step_damping <= 1.0:
            raise ValueError("step_damping must lie in (0, 1]")
        if not self.multistart:
            raise ValueError("need at least one initialization strategy")


@dataclass(frozen=True)
class GlobalityCertificate:
    lam: np.ndarray
    min_eig_Z: float
    certified: bool
    gap: float = float("nan")        # J(x) - lambda_1
    residual: float = float("nan")   # |2 Z(lambda) x|


@dataclass(frozen=True)
class FastSolution:
    x: np.ndarray
    cost: float
    certificate: GlobalityCertificate
    projection_distance: float = 0.0
    iterations: tuple[int, ...] = field(default=(), repr=False)


def _data_scale(Q: np.ndarray) -> float:
    c = float(np.trace(Q)) / Q.shape[0]
    return c if c > 0.0 else 1.0


def _dual_seed(Qn, r, s, m):
    """Best ``d`` orthogonal to ``r`` for fixed ``r`` and ``s``."""
    dim = Qn.shape[0]
    x0 = join_state(r, s, np.zeros(4))
    # orthonormal basis of the complement of r
    basis = np.linalg.svd(r.reshape(1, 4))[2][1:].T
    B = np.zeros((dim, 3))
    B[d_slice(m)] = basis
    y = np.linalg.lstsq(B.T @ Qn @ B, -(B.T @ Qn @ x0), rcond=None)[0]
    return basis @ y


def initial_points(problem: CalibrationProblem, settings: SqpSettings) -> list[np.ndarray]:
    """Deterministic starting points in multistart order."""
    m = problem.m
    Qn = problem.Q / _data_scale(problem.Q)
    r0 = np.asarray(problem.rotation_seed if problem.rotation_seed is not None
                    else np.array([1.0, 0, 0, 0]), dtype=float)
    r0 = r0 / np.linalg.norm(r0)
    a0 = np.array(problem.scale_hint if problem.scale_hint else [1.0] * m, dtype=float)
    rng = np.random.default_rng(settings.seed)
    starts = []
    for strategy in settings.multistart:
        if strategy == "data":
            r, a = r0, a0
        elif strategy == "perturbed":
            r = r0 + 0.3 * rng.standard_normal(4)
            a = a0 * np.exp(0.5 * rng.standard_normal(m))
        elif strategy == "random":
            r = rng.standard_normal(4)
            a = np.exp(rng.standard_normal(m))
        else:
            raise ValueError(f"unknown initialization strategy {strategy!r}")
        r = r / np.linalg.norm(r)
        s = [aj * r for aj in a]
        starts.append(join_state(r, s, _dual_seed(Qn, r, s, m)))
    return starts


def _null_basis(A: np.ndarray, dim: int) -> np.ndarray:
    _, sv, vt = np.linalg.svd(A)
    rank = int(np.sum(sv > 1e-12 * max(1.0, sv[0] if sv.size else 1.0)))
    return vt[rank:].T


def _sqp_single(Qn, C: ConstraintMatrices, x0, settings: SqpSettings):
    """One SQP run. Returns ``(x, converged, iterations)``."""
    dim = Qn.shape[0]
    k = len(C)
    x = np.array(x0, dtype=float)
    lam = np.zeros(k)
    tau0 = 1e-10 * max(float(np.trace(Qn)), 1.0)

    def merit(y, rho):
        return float(y @ Qn @ y) + rho * float(np.abs(C.evaluate(y)).sum())

    for it in range(settings.max_iter):
        g = C.evaluate(x)
        A = C.jacobian(x)
        grad = 2.0 * Qn @ x
        lam_ls = np.linalg.lstsq(A.T, -grad, rcond=None)[0]
        stat = np.linalg.norm(grad + A.T @ lam_ls)
        if np.abs(g).max() <= settings.feas_tol and stat <= settings.kkt_tol * (1.0 + np.linalg.norm(Qn @ x)):
            return x, True, it

        H = 2.0 * (Qn + np.tensordot(lam, C.P, axes=1))
        N = _null_basis(A, dim)
        if N.shape[1]:
            # reflect negative curvature of the reduced Hessian, floor at tau0
            Hr = N.T @ H @ N
            e, V = np.linalg.eigh(Hr)
            if e[0] <= tau0:
                e_mod = np.maximum(np.abs(e), tau0)
                H = H + N @ ((V * (e_mod - e)) @ V.T) @ N.T

        K = np.zeros((dim + k, dim + k))
        K[:dim, :dim] = H
        K[:dim, dim:] = A.T
        K[dim:, :dim] = A
        sol = np.linalg.lstsq(K, np.concatenate([-grad, -g]), rcond=None)[0]
        p, lam_new = sol[:dim], sol[dim:]

        # penalty follows the current multipliers so one bad iterate cannot freeze it
        rho = 2.0 * float(np.abs(lam_new).max(initial=0.0)) + 1e-8
        phi0 = merit(x, rho)
        dphi = float(grad @ p) - rho * float(np.abs(g).sum())
        t = 1.0
        accepted = False
        while t > 1e-10:
            xt = x + t * p
            if merit(xt, rho) <= phi0 + 1e-4 * t * min(dphi, 0.0):
                accepted = True
                break
            if t == 1.0:
                # second-order correction against the Maratos effect
                At = C.jacobian(xt)
                corr = -np.linalg.lstsq(At, C.evaluate(xt), rcond=None)[0]
                xc = xt + corr
                if merit(xc, rho) <= phi0 + 1e-4 * min(dphi, 0.0):
                    xt = xc
                    accepted = True
                    break
            t *= settings.step_damping
        if not accepted:
            xt = x + t * p
        step = np.linalg.norm(xt - x)
        x = xt
        lam = lam + t * (lam_new - lam) if accepted else lam_new
        if step <= 1e-15 * (1.0 + np.linalg.norm(x)):
            g = C.evaluate(x)
            return x, bool(np.abs(g).max() <= settings.feas_tol), it + 1
    g = C.evaluate(x)
    return x, False, settings.max_iter


def _variable_scaling(problem: CalibrationProblem) -> np.ndarray:
    """Diagonal scaling putting each ``s_j`` block at unit magnitude."""
    D = np.ones(problem.dim)
    for j, h in enumerate(problem.scale_hint):
        if h > 0 and np.isfinite(h):
            D[s_slice(problem.m, j)] = h
    return D


def solve_sqp(problem: CalibrationProblem, constraints: ConstraintMatrices,
              settings: SqpSettings = SqpSettings(), return_iterations: bool = False):
    """Lowest-cost feasible local minimizer over all starts.

    The iteration runs in variables ``y = x / D`` where ``D`` rescales each
    ``s_j`` block by its seed scale, which keeps very large or very small
    scales well conditioned.  Raises :class:`NoConvergence` when no start
    reaches a feasible stationary point; the exception's ``best`` attribute
    is the least infeasible iterate.
    """
    D = _variable_scaling(problem)
    Qs = D[:, None] * problem.Q * D[None, :]
    Qs = Qs / _data_scale(Qs)
    Cs = ConstraintMatrices(P=D[None, :, None] * constraints.P * D[None, None, :],
                            offset=constraints.offset, m=constraints.m,
                            constraint_set=constraints.constraint_set)
    results = []
    for x0 in initial_points(problem, settings):
        y, ok, its = _sqp_single(Qs, Cs, x0 / D, settings)
        results.append((D * y, ok, its))
        if ok and settings.stop_when_certified and _is_certified(D * y, problem, constraints):
            break
    Qn = problem.Q / _data_scale(problem.Q)

    feasible = [(float(x @ Qn @ x), i) for i, (x, ok, _) in enumerate(results) if ok]
    if not feasible:
        viol = [np.abs(constraints.evaluate(x)).max() for x, _, _ in results]
        best = results[int(np.argmin(viol))][0]
        raise NoConvergence("SQP did not converge from any start", best=best)
    _, i = min(feasible)
    x = results[i][0]
    if return_iterations:
        return x, tuple(its for _, _, its in results)
    return x


def _is_certified(x, problem, constraints) -> bool:
    x = project_feasible(x, problem.m)[0]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RankDeficientGradients)
        lam = estimate_dual_variables(x, problem, constraints)
    return certify(x, lam, problem, constraints).certified


def estimate_dual_variables(x, problem: CalibrationProblem,
                            constraints: ConstraintMatrices) -> np.ndarray:
    """Least-squares multipliers from ``2 Q x + sum_i lambda_i 2 P_i x = 0``.

    Warns with :class:`RankDeficientGradients` when the constraint gradients
    span fewer than ``2 + 3m`` directions (the number of independent
    constraints at a point with ``s_j`` parallel to ``r``); the minimum-norm
    solution is returned either way.
    """
    x = np.asarray(x, dtype=float)
    A = constraints.jacobian(x)
    grad = 2.0 * problem.Q @ x
    lam, _, rank, _ = np.linalg.lstsq(A.T, -grad, rcond=None)
    if rank < 2 + 3 * problem.m:
        warnings.warn(f"constraint gradients have rank {rank} < {2 + 3 * problem.m}",
                      RankDeficientGradients, stacklevel=2)
    return lam


def certify(x, lam, problem: CalibrationProblem, constraints: ConstraintMatrices,
            eps_psd: float = 1e-8, gap_tol: float = 1e-6) -> GlobalityCertificate:
    """Check dual feasibility ``Z(lam) >= 0`` and a vanishing duality gap at ``x``.

    PSD-ness alone only bounds the optimum from below by ``lam[0]``; requiring
    ``J(x) - lam[0]`` to vanish as well is what makes ``x`` provably optimal.
    """
    x = np.asarray(x, dtype=float)
    lam = np.asarray(lam, dtype=float)
    Z = assemble_Z(problem, constraints, lam)
    min_eig = float(np.linalg.eigvalsh(Z)[0])
    scale = 1.0 + float(np.trace(problem.Q)) / problem.dim
    J = problem.cost(x)
    gap = J - float(lam[0])
    residual = float(np.linalg.norm(2.0 * Z @ x))
    certified = (min_eig >= -eps_psd * scale
                 and abs(gap) <= gap_tol * (1.0 + abs(J))
                 and np.abs(constraints.evaluate(x)).max() <= 1e-6)
    return GlobalityCertificate(lam=lam, min_eig_Z=min_eig, certified=bool(certified),
                                gap=float(gap), residual=residual)


def solve_fast(pairs: Sequence[MotionPair], m: int = 1,
               scaled: ScaledSensor = ScaledSensor.SENSOR_B,
               constraint_set: ConstraintSet = ConstraintSet.REDUCED3,
               settings: SqpSettings = SqpSettings()) -> FastSolution:
    problem = accumulate_cost(pairs, m, scaled, constraint_set)
    return solve_fast_problem(problem, settings)


def solve_fast_problem(problem: CalibrationProblem,
                       settings: SqpSettings = SqpSettings()) -> FastSolution:
    C = constraint_matrices(problem.m, problem.constraint_set)
    x, its = solve_sqp(problem, C, settings, return_iterations=True)
    x, dist = project_feasible(x, problem.m)
    lam = estimate_dual_variables(x, problem, C)
    cert = certify(x, lam, problem, C)
    return FastSolution(x=x, cost=problem.cost(x), certificate=cert,
                        projection_distance=dist, iterations=its)
