"""Globally optimal calibration through the Lagrangian dual SDP.

The dual problem is ``max lambda_1  s.t.  Z(lambda) >= 0``.  It is solved by a
small dense log-det barrier method: for a decreasing barrier weight ``mu`` we
minimise ``-lambda_1 - mu * logdet(Z(lambda) + shift * I)`` with damped
Newton steps.  Matrices are at most ``24 x 24`` for four scales, so everything
is dense.

Noise-free data make every feasible ``Z`` singular along ``[0, ..., 0, r]``
(that vector lies in the kernel of ``Q`` and no multiplier acts on it), so
the barrier runs on ``Z + shift * I`` with a tiny shift in normalised units.

The primal optimum is read off the kernel of ``Z(lambda*)``.  A one-
dimensional kernel is normalised on its rotation block.  A two-dimensional
kernel, which is what exact data produce, is resolved by also imposing
``r . d = 0``; any larger kernel is reported as a failure.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dq_core import DualQuaternion, Quaternion, canonicalize_sign
from .errors import ConstraintViolation, IllConditioned, NullSpaceDimension, Unbounded
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
    project_feasible,
    s_slice,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SdpSettings:
    barrier_init: float = 1.0
    barrier_decay: float = 0.2
    newton_tol: float = 1e-12
    outer_tol: float = 1e-10
    max_outer: int = 60
    max_newton: int = 50
    nullspace_abs_tol: float = 1e-6
    nullspace_ratio: float = 1e4
    psd_shift: float = 1e-10

    def __post_init__(self):
        for name in ("barrier_init", "newton_tol", "outer_tol", "nullspace_abs_tol",
                     "nullspace_ratio"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 < self.barrier_decay < 1.0:
            raise ValueError("barrier_decay must lie in (0, 1)")
        if self.psd_shift < 0:
            raise ValueError("psd_shift must be non-negative")


@dataclass(frozen=True)
class GlobalSolution:
    x: np.ndarray
    lam: np.ndarray
    dual_value: float
    primal_cost: float
    gap: float
    nullspace_dim: int
    spectrum: np.ndarray = field(default=None, repr=False)

    @property
    def calibration(self) -> DualQuaternion:
        r = self.x[0:4]
        m = (self.x.size - 8) // 4
        return canonicalize_sign(DualQuaternion(Quaternion.from_vec(r),
                                                Quaternion.from_vec(self.x[d_slice(m)])))


def _normalisation(problem: CalibrationProblem):
    """Diagonal congruence ``D`` and scale ``c`` with ``Zs = D Z D / c``."""
    D = np.ones(problem.dim)
    for j, h in enumerate(problem.scale_hint):
        if h > 0 and np.isfinite(h):
            D[s_slice(problem.m, j)] = h
    Qs = D[:, None] * problem.Q * D[None, :]
    c = float(np.trace(Qs)) / problem.dim
    return D, (c if c > 0.0 else 1.0)


def _barrier_terms(W_chol_inv, P):
    """Gradient pieces ``tr(W^-1 P_i)`` and Hessian ``tr(W^-1 P_i W^-1 P_j)``."""
    B = W_chol_inv @ P @ W_chol_inv.T
    g = np.trace(B, axis1=1, axis2=2)
    H = np.einsum("iab,jab->ij", B, B)
    return g, H


def _chol(W):
    try:
        return np.linalg.cholesky(W)
    except np.linalg.LinAlgError:
        return None


def solve_dual(problem: CalibrationProblem, constraints: ConstraintMatrices,
               settings: SdpSettings = SdpSettings(), primal_point=None) -> np.ndarray:
    """Maximise ``lambda_1`` subject to ``Z(lambda) >= 0``.

    ``primal_point``, a feasible state vector, enables the weak-duality check
    ``lambda_1 <= J(x)`` (up to the shift) after every outer iteration.
    """
    if len(constraints) and constraints.P.shape[1] != problem.dim:
        raise ValueError("constraint matrices do not match the problem dimension")
    D, c = _normalisation(problem)
    Qs = D[:, None] * problem.Q * D[None, :] / c
    Ps = D[None, :, None] * constraints.P * D[None, None, :]
    k, dim = len(constraints), problem.dim
    base = Qs + settings.psd_shift * np.eye(dim)

    bound = None
    if primal_point is not None:
        xp = np.asarray(primal_point, dtype=float)
        yp = xp / D
        bound = (problem.cost(xp) / c + settings.psd_shift * float(yp @ yp))

    lam = np.zeros(k)
    lam[0] = -1.0
    mu = settings.barrier_init

    def objective(lam_, L_):
        # -lambda_1 / mu - logdet(W)
        return -lam_[0] / mu - 2.0 * np.sum(np.log(np.diag(L_)))

    L = _chol(base + np.tensordot(lam, Ps, axes=1))
    if L is None:
        raise IllConditioned("initial dual point is not strictly feasible")

    for outer in range(settings.max_outer):
        for _ in range(settings.max_newton):
            Linv = np.linalg.inv(L)
            tr, H = _barrier_terms(Linv, Ps)
            grad = -tr
            grad[0] -= 1.0 / mu
            try:
                step = -np.linalg.solve(H, grad)
            except np.linalg.LinAlgError:
                step = -np.linalg.lstsq(H, grad, rcond=None)[0]
            decrement2 = float(-grad @ step)
            if not np.isfinite(decrement2):
                raise IllConditioned("Newton system became singular")
            if decrement2 <= 2.0 * settings.newton_tol:
                break
            f0 = objective(lam, L)
            t = 1.0 if decrement2 < 0.25 else 1.0 / (1.0 + np.sqrt(decrement2))
            while True:
                trial = lam + t * step
                Lt = _chol(base + np.tensordot(trial, Ps, axes=1))
                if Lt is not None and objective(trial, Lt) <= f0 - 0.25 * t * decrement2:
                    break
                t *= 0.5
                if t < 1e-14:
                    Lt = None
                    break
            if Lt is None:
                break
            lam, L = trial, Lt
        if not np.all(np.isfinite(lam)):
            raise Unbounded("dual iterates diverged")
        if bound is not None and lam[0] > bound + 1e-9 * (1.0 + abs(bound)):
            log.warning("weak duality violated: lambda_1 = %.6g > J(x) = %.6g", lam[0] * c, bound * c)
        if dim * mu <= settings.outer_tol * (1.0 + abs(lam[0])):
            break
        mu *= settings.barrier_decay
    log.debug("dual solve finished after %d outer iterations, mu = %.3g", outer + 1, mu)
    return c * lam


def _kernel_dim(w: np.ndarray, settings: SdpSettings) -> int:
    aw = np.abs(w)
    mean = float(aw.mean()) if aw.size else 0.0
    small = int(np.sum(aw <= settings.nullspace_abs_tol * mean))
    if small == 0 or small == w.size:
        return small
    if w[small] < settings.nullspace_ratio * max(float(aw[:small].max()), 1e-300):
        return -small
    return small


def _candidates_2d(V: np.ndarray, m: int):
    """Unit-rotation combinations of two kernel vectors that satisfy ``r . d = 0``."""
    Vr, Vd = V[0:4], V[d_slice(m)]
    B = 0.5 * (Vr.T @ Vd + Vd.T @ Vr)
    beta, U = np.linalg.eigh(B)
    scale = max(abs(beta).max(), 1e-300)
    if abs(beta[0]) <= 1e-12 * scale:
        dirs = [U[:, 0]]
    elif abs(beta[1]) <= 1e-12 * scale:
        dirs = [U[:, 1]]
    elif beta[0] * beta[1] < 0:
        phi = np.arctan(np.sqrt(-beta[0] / beta[1]))
        dirs = [np.cos(phi) * U[:, 0] + np.sin(phi) * U[:, 1],
                np.cos(phi) * U[:, 0] - np.sin(phi) * U[:, 1]]
    else:
        dirs = []
    out = []
    for cvec in dirs:
        v = V @ cvec
        nr = np.linalg.norm(v[0:4])
        if nr > 1e-8 * np.linalg.norm(v):
            out.append(v / nr)
    return out


def _canonical_state(x: np.ndarray) -> np.ndarray:
    r = x[0:4]
    nz = np.flatnonzero(r)
    return -x if nz.size and r[nz[0]] < 0 else x


def recover_primal(problem: CalibrationProblem, constraints: ConstraintMatrices, lam,
                   settings: SdpSettings = SdpSettings()) -> GlobalSolution:
    lam = np.asarray(lam, dtype=float)
    Z = assemble_Z(problem, constraints, lam)
    D, c = _normalisation(problem)
    Zs = D[:, None] * Z * D[None, :] / c
    w, U = np.linalg.eigh(Zs)
    kdim = _kernel_dim(w, settings)
    if kdim <= 0 or kdim > 2:
        dim = abs(kdim)
        log.info("Z(lambda*) spectrum: %s", np.array2string(w * c, precision=3))
        raise NullSpaceDimension(dim, spectrum=w * c,
                                 message=f"could not isolate a usable null space "
                                         f"(dimension {dim}) of Z(lambda*)")
    V = D[:, None] * U[:, :kdim]
    m = problem.m
    if kdim == 1:
        v = V[:, 0]
        nr = np.linalg.norm(v[0:4])
        if nr < 1e-8 * np.linalg.norm(v):
            raise NullSpaceDimension(1, spectrum=w * c,
                                     message="null vector has a vanishing rotation block")
        cands = [v / nr]
    else:
        cands = _candidates_2d(V, m)
        if not cands:
            raise NullSpaceDimension(2, spectrum=w * c,
                                     message="two-dimensional null space admits no feasible point")

    scored = []
    for x in cands:
        viol = float(np.abs(constraints.evaluate(x)).max())
        scored.append((viol, problem.cost(x), len(scored)))
    viol, _, i = min(scored)
    x = _canonical_state(cands[i])
    if viol > 1e-4:
        raise ConstraintViolation(f"recovered primal violates constraints by {viol:.3g}")
    J = problem.cost(x)
    return GlobalSolution(x=x, lam=lam, dual_value=float(lam[0]), primal_cost=J,
                          gap=J - float(lam[0]), nullspace_dim=kdim, spectrum=w * c)


def solve_global_problem(problem: CalibrationProblem,
                         settings: SdpSettings = SdpSettings()) -> GlobalSolution:
    from .solver_fast import SqpSettings, initial_points

    C = constraint_matrices(problem.m, problem.constraint_set)
    probe = project_feasible(initial_points(problem, SqpSettings(multistart=("data",)))[0],
                             problem.m)[0]
    lam = solve_dual(problem, C, settings, primal_point=probe)
    return recover_primal(problem, C, lam, settings)


def solve_global(pairs: Sequence[MotionPair], m: int = 1,
                 scaled: ScaledSensor = ScaledSensor.SENSOR_B,
                 settings: SdpSettings = SdpSettings(),
                 constraint_set: ConstraintSet = ConstraintSet.REDUCED3) -> GlobalSolution:
    """Assemble, solve the dual and recover the primal.

    There is no silent fallback: a :class:`NullSpaceDimension` error propagates
    and the caller may run the local solver instead.
    """
    problem = accumulate_cost(pairs, m, scaled, constraint_set)
    return solve_global_problem(problem, settings)
