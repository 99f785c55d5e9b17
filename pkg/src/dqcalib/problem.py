"""QCQP assembly for scaled hand-eye calibration.

The state vector is ``x = [r, s_1, ..., s_m, d]`` (length ``8 + 4m``) where
``r`` and ``d`` are the real and dual parts of the calibration and
``s_j = alpha_j * r`` carries the unknown translation scale of sequence ``j``.
Each motion pair contributes an 8-row matrix ``M`` with ``M @ x_true = 0``;
the cost is ``J(x) = x^T Q x`` with ``Q = sum M^T M``.

Constraints are written as quadratic forms ``x^T P x`` (plus a constant 1 for
the unit-norm row), which is the shape both solvers work with.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dq_core import DualQuaternion, Quaternion, canonicalize_sign, left_matrix, right_matrix
from .errors import (
    AntiparallelScale,
    BadScaleIndex,
    DimensionMismatch,
    EmptyScaleGroup,
    NonUnitRotation,
    UnobservableWarning,
)


class ScaledSensor(enum.Enum):
    SENSOR_B = "b"
    SENSOR_A = "a"


class ConstraintSet(enum.Enum):
    """Parallelism constraints tying ``s_j`` to ``r``.

    ``REDUCED3`` keeps only the pairs involving ``r_1`` and misses the
    degenerate case ``r_1 = 0`` (a 180 degree calibration rotation);
    ``FULL6`` uses all six ``r_i s_j - r_j s_i`` terms.
    """

    REDUCED3 = 3
    FULL6 = 6


_PAIRS_FULL6 = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))


def parallel_index_pairs(constraint_set: ConstraintSet) -> tuple[tuple[int, int], ...]:
    return _PAIRS_FULL6[: constraint_set.value]


@dataclass(frozen=True)
class MotionPair:
    q_a: DualQuaternion
    q_b: DualQuaternion
    scale_index: int = 0


# --- state vector layout -------------------------------------------------------

def state_dim(m: int) -> int:
    return 8 + 4 * m


def r_slice(m: int) -> slice:
    return slice(0, 4)


def s_slice(m: int, j: int) -> slice:
    if not 0 <= j < m:
        raise BadScaleIndex(f"scale index {j} outside [0, {m})")
    return slice(4 + 4 * j, 8 + 4 * j)


def d_slice(m: int) -> slice:
    return slice(4 + 4 * m, 8 + 4 * m)


def split_state(x, m: int) -> tuple[np.ndarray, list[np.ndarray], np.ndarray]:
    x = np.asarray(x, dtype=float)
    if x.shape != (state_dim(m),):
        raise DimensionMismatch(f"state has shape {x.shape}, expected ({state_dim(m)},)")
    return x[0:4], [x[s_slice(m, j)] for j in range(m)], x[d_slice(m)]


def join_state(r, s: Sequence, d) -> np.ndarray:
    return np.concatenate([np.asarray(r, float)] + [np.asarray(sj, float) for sj in s]
                          + [np.asarray(d, float)])


def true_state(q: DualQuaternion, alphas: Sequence[float]) -> np.ndarray:
    """``[r, alpha_1 r, ..., alpha_m r, d]`` for a known calibration."""
    r = q.real.vec
    return join_state(r, [a * r for a in alphas], q.dual.vec)


# --- motion matrices and cost --------------------------------------------------

def _motion_blocks(ra, da, rb, db):
    """Batched ``(R+_a - R-_b, D+_a, D-_b)``, each ``(n, 4, 4)``."""
    return left_matrix(ra) - right_matrix(rb), left_matrix(da), right_matrix(db)


def _stack_pairs(pairs: Sequence[MotionPair]):
    qa = np.array([p.q_a.vec for p in pairs]).reshape(-1, 8)
    qb = np.array([p.q_b.vec for p in pairs]).reshape(-1, 8)
    # conjugation preserves the scalar part, so both motions of a pair must be
    # taken with the same sign of w; use w >= 0 for both
    qa = np.where(qa[:, :1] < 0.0, -qa, qa)
    qb = np.where(qb[:, :1] < 0.0, -qb, qb)
    idx = np.array([p.scale_index for p in pairs], dtype=int)
    return qa[:, :4], qa[:, 4:], qb[:, :4], qb[:, 4:], idx


def _motion_matrices(ra, da, rb, db, idx, m: int, scaled: ScaledSensor) -> np.ndarray:
    n = ra.shape[0]
    if n and (idx.min() < 0 or idx.max() >= m):
        bad = idx[(idx < 0) | (idx >= m)][0]
        raise BadScaleIndex(f"scale index {bad} outside [0, {m})")
    diff, dpa, dmb = _motion_blocks(ra, da, rb, db)
    M = np.zeros((n, 8, state_dim(m)))
    M[:, 0:4, 0:4] = diff
    ds = d_slice(m)
    M[:, 4:8, ds] = diff
    rows = np.arange(n)[:, None, None]
    out_rows = np.arange(4, 8)[None, :, None]
    s_cols = (4 + 4 * idx)[:, None, None] + np.arange(4)[None, None, :]
    if scaled is ScaledSensor.SENSOR_B:
        M[:, 4:8, 0:4] = dpa
        M[rows, out_rows, s_cols] = -dmb
    else:
        M[:, 4:8, 0:4] = -dmb
        M[rows, out_rows, s_cols] = dpa
    return M


def build_motion_matrix(pair: MotionPair, m: int = 1,
                        scaled: ScaledSensor = ScaledSensor.SENSOR_B) -> np.ndarray:
    """The ``8 x (8 + 4m)`` matrix ``M`` of one motion pair."""
    return _motion_matrices(*_stack_pairs([pair]), m, scaled)[0]


@dataclass(frozen=True)
class CalibrationProblem:
    Q: np.ndarray
    m: int
    constraint_set: ConstraintSet = ConstraintSet.REDUCED3
    scaled: ScaledSensor = ScaledSensor.SENSOR_B
    n_pairs: tuple[int, ...] = ()
    # per-scale median translation-length ratios, used to seed the local solver
    scale_hint: tuple[float, ...] = ()
    rotation_seed: np.ndarray = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return state_dim(self.m)

    @property
    def n_constraints(self) -> int:
        return 2 + self.constraint_set.value * self.m

    def cost(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(x @ self.Q @ x)


def _translation_norms(r, d):
    # |t| = |2 d r^*| = 2 |d| for unit r
    return 2.0 * np.linalg.norm(d, axis=-1) / np.maximum(np.linalg.norm(r, axis=-1) ** 2, 1e-300)


def _check_excitation(ra):
    axes = ra[:, 1:4]
    norms = np.linalg.norm(axes, axis=1)
    keep = norms > 1e-9
    if keep.sum() < 2:
        warnings.warn("fewer than two rotating motions; calibration is unobservable",
                      UnobservableWarning, stacklevel=3)
        return
    sv = np.linalg.svd(axes[keep] / norms[keep, None], compute_uv=False)
    sv = sv / np.sqrt(keep.sum())
    if sv[1] < 1e-3:
        warnings.warn("rotation axes span fewer than two directions; "
                      "calibration is unobservable", UnobservableWarning, stacklevel=3)


def accumulate_cost(pairs: Sequence[MotionPair], m: int = 1,
                    scaled: ScaledSensor = ScaledSensor.SENSOR_B,
                    constraint_set: ConstraintSet = ConstraintSet.REDUCED3,
                    check_excitation: bool = True) -> CalibrationProblem:
    """Sum ``M^T M`` over all pairs into a :class:`CalibrationProblem`."""
    ra, da, rb, db, idx = _stack_pairs(pairs)
    counts = np.bincount(idx, minlength=m) if idx.size else np.zeros(m, dtype=int)
    if idx.size and idx.max() >= m:
        raise BadScaleIndex(f"scale index {idx.max()} outside [0, {m})")
    for j in range(m):
        if counts[j] == 0:
            raise EmptyScaleGroup(j)
    if check_excitation:
        _check_excitation(ra)

    M = _motion_matrices(ra, da, rb, db, idx, m, scaled)
    Q = np.einsum("tij,tik->jk", M, M)
    Q = 0.5 * (Q + Q.T)

    ta = _translation_norms(ra, da)
    tb = _translation_norms(rb, db)
    hints = []
    for j in range(m):
        sel = (idx == j) & (ta > 1e-12) & (tb > 1e-12)
        if not sel.any():
            hints.append(1.0)
            continue
        ratio = ta[sel] / tb[sel] if scaled is ScaledSensor.SENSOR_B else tb[sel] / ta[sel]
        hints.append(float(np.median(ratio)))

    diff = left_matrix(ra) - right_matrix(rb)
    A = np.einsum("tij,tik->jk", diff, diff)
    rot_seed = np.linalg.eigh(A)[1][:, 0]

    return CalibrationProblem(Q=Q, m=m, constraint_set=constraint_set, scaled=scaled,
                              n_pairs=tuple(int(c) for c in counts),
                              scale_hint=tuple(hints), rotation_seed=rot_seed)


def cost(problem: CalibrationProblem, x) -> float:
    return problem.cost(x)


# --- constraints ---------------------------------------------------------------

def eval_unit_constraints(x, m: int = 1) -> np.ndarray:
    """``[1 - |r|^2, 2 r.d]``."""
    r, _, d = split_state(x, m)
    return np.array([1.0 - r @ r, 2.0 * r @ d])


def eval_parallelism_constraints(x, j: int = 0, m: int = 1,
                                 constraint_set: ConstraintSet = ConstraintSet.REDUCED3) -> np.ndarray:
    """``r_i s_k - r_k s_i`` for the index pairs of the constraint set."""
    r, s, _ = split_state(x, m)
    if not 0 <= j < m:
        raise BadScaleIndex(f"scale index {j} outside [0, {m})")
    sj = s[j]
    return np.array([r[a] * sj[b] - r[b] * sj[a] for a, b in parallel_index_pairs(constraint_set)])


def eval_constraints(x, m: int = 1,
                     constraint_set: ConstraintSet = ConstraintSet.REDUCED3) -> np.ndarray:
    """All constraints in multiplier order: unit rows, then (scale, pair)."""
    parts = [eval_unit_constraints(x, m)]
    parts += [eval_parallelism_constraints(x, j, m, constraint_set) for j in range(m)]
    return np.concatenate(parts)


@dataclass(frozen=True)
class ConstraintMatrices:
    """Symmetric ``P_i`` with ``g_i(x) = x^T P_i x + offset_i``.

    ``P[0]`` and ``P[1]`` are the unit-norm and orthogonality rows, the rest
    are the parallelism constraints ordered by scale index then index pair.
    """

    P: np.ndarray          # (k, dim, dim)
    offset: np.ndarray     # (k,)
    m: int
    constraint_set: ConstraintSet

    def __len__(self) -> int:
        return self.P.shape[0]

    @property
    def P_d1(self) -> np.ndarray:
        return self.P[0]

    @property
    def P_d2(self) -> np.ndarray:
        return self.P[1]

    def P_alpha(self, j: int, k: int) -> np.ndarray:
        """Parallelism matrix for scale ``j`` and pair ``k`` (both zero-based)."""
        per = self.constraint_set.value
        return self.P[2 + per * j + k]

    def evaluate(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.einsum("i,kij,j->k", x, self.P, x) + self.offset

    def jacobian(self, x) -> np.ndarray:
        """Rows ``2 P_i x``."""
        return 2.0 * (self.P @ np.asarray(x, dtype=float))


def constraint_matrices(m: int = 1,
                        constraint_set: ConstraintSet = ConstraintSet.REDUCED3) -> ConstraintMatrices:
    if m < 1:
        raise ValueError("need at least one scale")
    dim = state_dim(m)
    rs, ds = r_slice(m), d_slice(m)
    mats = []

    p = np.zeros((dim, dim))
    p[rs, rs] = -np.eye(4)
    mats.append(p)

    p = np.zeros((dim, dim))
    p[rs, ds] = np.eye(4)
    p[ds, rs] = np.eye(4)
    mats.append(p)

    for j in range(m):
        s0 = s_slice(m, j).start
        for a, b in parallel_index_pairs(constraint_set):
            raw = np.zeros((dim, dim))
            raw[a, s0 + b] = 1.0
            raw[b, s0 + a] = -1.0
            mats.append(0.5 * (raw + raw.T))

    offset = np.zeros(len(mats))
    offset[0] = 1.0
    return ConstraintMatrices(P=np.array(mats), offset=offset, m=m, constraint_set=constraint_set)


def assemble_Z(problem: CalibrationProblem, constraints: ConstraintMatrices, lam) -> np.ndarray:
    """``Z(lambda) = Q + sum_i lambda_i P_i``."""
    lam = np.asarray(lam, dtype=float)
    if lam.shape != (len(constraints),):
        raise DimensionMismatch(f"lambda has shape {lam.shape}, expected ({len(constraints)},)")
    if constraints.P.shape[1] != problem.dim:
        raise DimensionMismatch("constraint matrices do not match the problem dimension")
    Z = problem.Q + np.tensordot(lam, constraints.P, axes=1)
    return 0.5 * (Z + Z.T)


# --- solution extraction -------------------------------------------------------

def project_feasible(x, m: int) -> tuple[np.ndarray, float]:
    """Re-project onto ``|r| = 1`` and ``r.d = 0``; returns the moved distance."""
    x = np.asarray(x, dtype=float)
    r, s, d = split_state(x, m)
    n = np.linalg.norm(r)
    if n == 0.0:
        raise NonUnitRotation("rotation block is zero")
    r2 = r / n
    s2 = [sj / n for sj in s]
    d2 = d / n
    d2 = d2 - (r2 @ d2) * r2
    y = join_state(r2, s2, d2)
    return y, float(np.linalg.norm(y - x))


def extract_calibration(x, m: int = 1, tol: float = 1e-3):
    """Calibration, scales ``alpha_j = |s_j|`` and the worst r/s_j angle."""
    r, s, d = split_state(x, m)
    nr = np.linalg.norm(r)
    if abs(nr - 1.0) > tol:
        raise NonUnitRotation(f"rotation block has norm {nr:.6g}")
    alphas = []
    misfit = 0.0
    for j, sj in enumerate(s):
        ns = np.linalg.norm(sj)
        if ns > 0.0:
            c = float(r @ sj) / (nr * ns)
            if c < 0.0:
                raise AntiparallelScale(f"s_{j} points against r (cos = {c:.3g})")
            misfit = max(misfit, float(np.arccos(min(c, 1.0))))
        alphas.append(float(ns))
    rn = r / nr
    d = d - (rn @ d) * rn
    dq = canonicalize_sign(DualQuaternion(Quaternion.from_vec(rn), Quaternion.from_vec(d / nr)))
    return dq, alphas, misfit
