"""Quaternion and dual-quaternion algebra.

Quaternions are stored scalar-first ``(w, x, y, z)`` with the Hamilton
convention ``i*j = k``.  A rigid motion with rotation ``r`` and translation
``t`` is the unit dual quaternion ``r + eps * d`` with ``d = 0.5 * (0, t) * r``.

The array helpers (``left_matrix``, ``right_matrix``, ``qmul``) accept
``Quaternion`` objects or arrays with a trailing axis of length 4 and
broadcast over leading axes, which is what the problem assembly relies on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonPositiveScale, NonUnitRotation, NotRigid

ROTATION_TOL = 1e-6   # user-supplied data
UNIT_TOL = 1e-9       # invariant checks on constructed values


def _as_array(q):
    if isinstance(q, Quaternion):
        return q.vec
    return np.asarray(q, dtype=float)


@dataclass(frozen=True)
class Quaternion:
    w: float
    x: float
    y: float
    z: float

    @classmethod
    def from_vec(cls, v) -> "Quaternion":
        v = np.asarray(v, dtype=float).reshape(4)
        return cls(float(v[0]), float(v[1]), float(v[2]), float(v[3]))

    @classmethod
    def identity(cls) -> "Quaternion":
        return cls(1.0, 0.0, 0.0, 0.0)

    @classmethod
    def pure(cls, t) -> "Quaternion":
        """Pure quaternion ``(0, t)`` for a 3-vector."""
        t = np.asarray(t, dtype=float).reshape(3)
        return cls(0.0, float(t[0]), float(t[1]), float(t[2]))

    @classmethod
    def from_axis_angle(cls, axis, angle: float) -> "Quaternion":
        axis = np.asarray(axis, dtype=float).reshape(3)
        n = np.linalg.norm(axis)
        if n == 0.0:
            return cls.identity()
        axis = axis / n
        h = 0.5 * angle
        return cls.from_vec(np.concatenate([[np.cos(h)], np.sin(h) * axis]))

    @property
    def vec(self) -> np.ndarray:
        return np.array([self.w, self.x, self.y, self.z])

    @property
    def vector_part(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def norm(self) -> float:
        return float(np.linalg.norm(self.vec))

    def normalized(self) -> "Quaternion":
        n = self.norm()
        if n == 0.0:
            raise NonUnitRotation("cannot normalize the zero quaternion")
        return Quaternion.from_vec(self.vec / n)

    def conj(self) -> "Quaternion":
        return Quaternion(self.w, -self.x, -self.y, -self.z)

    def is_unit(self, tol: float = UNIT_TOL) -> bool:
        return abs(self.norm() - 1.0) <= tol

    def rotate(self, v) -> np.ndarray:
        """Rotate a 3-vector by this (unit) quaternion."""
        p = qmul(qmul(self.vec, np.concatenate([[0.0], np.asarray(v, float)])), self.conj().vec)
        return p[1:]

    def as_matrix(self) -> np.ndarray:
        w, x, y, z = self.vec / self.norm()
        return np.array([
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ])

    def __mul__(self, other: "Quaternion") -> "Quaternion":
        return quat_mul(self, other)

    def __neg__(self) -> "Quaternion":
        return Quaternion(-self.w, -self.x, -self.y, -self.z)


def left_matrix(a) -> np.ndarray:
    """Matrix ``L(a)`` with ``L(a) @ vec(b) == vec(a * b)``.

    Broadcasts over leading axes: input ``(..., 4)`` gives ``(..., 4, 4)``.
    """
    a = _as_array(a)
    w, x, y, z = a[..., 0], a[..., 1], a[..., 2], a[..., 3]
    return np.stack([
        np.stack([w, -x, -y, -z], axis=-1),
        np.stack([x, w, -z, y], axis=-1),
        np.stack([y, z, w, -x], axis=-1),
        np.stack([z, -y, x, w], axis=-1),
    ], axis=-2)


def right_matrix(b) -> np.ndarray:
    """Matrix ``R(b)`` with ``R(b) @ vec(a) == vec(a * b)``."""
    b = _as_array(b)
    w, x, y, z = b[..., 0], b[..., 1], b[..., 2], b[..., 3]
    return np.stack([
        np.stack([w, -x, -y, -z], axis=-1),
        np.stack([x, w, z, -y], axis=-1),
        np.stack([y, -z, w, x], axis=-1),
        np.stack([z, y, -x, w], axis=-1),
    ], axis=-2)


def qmul(a, b) -> np.ndarray:
    """Hamilton product on arrays of shape ``(..., 4)``."""
    a = _as_array(a)
    b = _as_array(b)
    aw, ax, ay, az = a[..., 0], a[..., 1], a[..., 2], a[..., 3]
    bw, bx, by, bz = b[..., 0], b[..., 1], b[..., 2], b[..., 3]
    return np.stack([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ], axis=-1)


def qconj(q) -> np.ndarray:
    q = _as_array(q)
    return q * np.array([1.0, -1.0, -1.0, -1.0])


def quat_mul(a: Quaternion, b: Quaternion) -> Quaternion:
    return Quaternion.from_vec(qmul(a.vec, b.vec))


@dataclass(frozen=True)
class DualQuaternion:
    """``real + eps * dual``.

    ``scaled`` marks a dual quaternion whose dual part was multiplied by a
    translation scale, so it is not expected to satisfy ``<real, dual> = 0``.
    """

    real: Quaternion
    dual: Quaternion
    scaled: bool = False

    @classmethod
    def identity(cls) -> "DualQuaternion":
        return cls(Quaternion.identity(), Quaternion(0.0, 0.0, 0.0, 0.0))

    @classmethod
    def from_vec(cls, v, scaled: bool = False) -> "DualQuaternion":
        v = np.asarray(v, dtype=float).reshape(8)
        return cls(Quaternion.from_vec(v[:4]), Quaternion.from_vec(v[4:]), scaled)

    @property
    def vec(self) -> np.ndarray:
        return np.concatenate([self.real.vec, self.dual.vec])

    def conj(self) -> "DualQuaternion":
        """Quaternion conjugate of both parts; the inverse of a unit dual quaternion."""
        return DualQuaternion(self.real.conj(), self.dual.conj(), self.scaled)

    def inverse(self) -> "DualQuaternion":
        return self.conj()

    def is_unit(self, tol: float = UNIT_TOL) -> bool:
        r, d = self.real.vec, self.dual.vec
        return abs(np.linalg.norm(r) - 1.0) <= tol and abs(2.0 * r @ d) <= tol

    def translation(self) -> np.ndarray:
        return dq_to_pose(self)[1]

    def __mul__(self, other: "DualQuaternion") -> "DualQuaternion":
        return dq_mul(self, other)

    def __neg__(self) -> "DualQuaternion":
        return DualQuaternion(-self.real, -self.dual, self.scaled)


def dq_from_pose(r: Quaternion, t) -> DualQuaternion:
    if not isinstance(r, Quaternion):
        r = Quaternion.from_vec(r)
    if abs(r.norm() - 1.0) > ROTATION_TOL:
        raise NonUnitRotation(f"rotation quaternion has norm {r.norm():.9g}")
    tq = np.concatenate([[0.0], np.asarray(t, dtype=float).reshape(3)])
    return DualQuaternion(r, Quaternion.from_vec(0.5 * qmul(tq, r.vec)))


def dq_to_pose(q: DualQuaternion) -> tuple[Quaternion, np.ndarray]:
    r = q.real.vec
    if abs(np.linalg.norm(r) - 1.0) > ROTATION_TOL:
        raise NonUnitRotation(f"real part has norm {np.linalg.norm(r):.9g}")
    tq = 2.0 * qmul(q.dual.vec, qconj(r))
    if abs(tq[0]) > ROTATION_TOL:
        raise NotRigid(f"2*d*r^* has scalar part {tq[0]:.3g}; dual quaternion is not rigid")
    return q.real, tq[1:].copy()


def dq_mul(a: DualQuaternion, b: DualQuaternion) -> DualQuaternion:
    ra, da, rb, db = a.real.vec, a.dual.vec, b.real.vec, b.dual.vec
    return DualQuaternion(
        Quaternion.from_vec(qmul(ra, rb)),
        Quaternion.from_vec(qmul(ra, db) + qmul(da, rb)),
        a.scaled or b.scaled,
    )


def dq_scale_translation(q: DualQuaternion, alpha: float) -> DualQuaternion:
    """``r + eps * alpha * d``: the same rotation with translation scaled by alpha."""
    if not alpha > 0.0:
        raise NonPositiveScale(f"scale must be positive, got {alpha!r}")
    return DualQuaternion(q.real, Quaternion.from_vec(alpha * q.dual.vec), q.scaled)


def canonicalize_sign(q: DualQuaternion) -> DualQuaternion:
    """Pick the representative of ``{q, -q}`` with ``real.w >= 0``.

    Ties at ``real.w == 0`` are broken by the first nonzero real component.
    """
    r = q.real.vec
    nz = np.flatnonzero(r)
    if nz.size and r[nz[0]] < 0.0:
        return -q
    return q
