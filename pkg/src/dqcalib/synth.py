"""Synthetic rigs with known calibration, and the relative noise model.

Ground-truth motion pairs follow the cycle ``V_a * T = T * V_b_metric``: a
metric motion of sensor b is sampled, sensor a's motion is its conjugate by
``T``, and the scaled sensor's translation is divided by ``alpha_j`` so that
``alpha_j`` is the factor restoring metric scale.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dq_core import DualQuaternion, Quaternion, dq_from_pose, dq_mul, dq_to_pose, qmul
from .problem import MotionPair, ScaledSensor


@dataclass(frozen=True)
class RigSpec:
    q_T: DualQuaternion
    alphas: tuple[float, ...] = (1.0,)
    n_per_scale: tuple[int, ...] = (100,)
    rot_range: tuple[float, float] = (0.1, 1.0)      # radians per step
    trans_range: tuple[float, float] = (0.1, 1.0)    # meters per step
    seed: int = 0
    scaled: ScaledSensor = ScaledSensor.SENSOR_B

    def __post_init__(self):
        if len(self.alphas) != len(self.n_per_scale):
            raise ValueError("alphas and n_per_scale must have the same length")
        if any(a <= 0 for a in self.alphas):
            raise ValueError("scales must be positive")
        if any(n < 1 for n in self.n_per_scale):
            raise ValueError("each scale needs at least one pair")

    @property
    def m(self) -> int:
        return len(self.alphas)


@dataclass(frozen=True)
class NoiseSpec:
    p_a: float = 0.0
    p_b: float = 0.0

    def __post_init__(self):
        for p in (self.p_a, self.p_b):
            if not 0.0 <= p < 1.0:
                raise ValueError(f"relative noise level {p} outside [0, 1)")


@dataclass(frozen=True)
class GroundTruth:
    q_T: DualQuaternion
    alphas: tuple[float, ...]
    scaled: ScaledSensor = ScaledSensor.SENSOR_B


def random_unit_vector(rng: np.random.Generator, size=None) -> np.ndarray:
    shape = (3,) if size is None else (size, 3)
    v = rng.standard_normal(shape)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def random_rotation(rng: np.random.Generator) -> Quaternion:
    """Uniformly distributed rotation."""
    q = rng.standard_normal(4)
    q = q / np.linalg.norm(q)
    return Quaternion.from_vec(q if q[0] >= 0 else -q)


def random_calibration(rng: np.random.Generator, trans_scale: float = 1.0) -> DualQuaternion:
    return dq_from_pose(random_rotation(rng), trans_scale * rng.uniform(-1.0, 1.0, 3))


def random_rig(seed: int, alphas: Sequence[float] = (1.0,), n: int | Sequence[int] = 100,
               scaled: ScaledSensor = ScaledSensor.SENSOR_B, **kwargs) -> RigSpec:
    """Rig with a random calibration drawn from ``seed``."""
    rng = np.random.default_rng([seed, 7919])
    alphas = tuple(float(a) for a in alphas)
    ns = (n,) * len(alphas) if np.isscalar(n) else tuple(n)
    return RigSpec(q_T=random_calibration(rng), alphas=alphas, n_per_scale=ns,
                   seed=seed, scaled=scaled, **kwargs)


def _sample_motion(rng, rot_range, trans_range) -> DualQuaternion:
    angle = rng.uniform(*rot_range)
    r = Quaternion.from_axis_angle(random_unit_vector(rng), angle)
    t = random_unit_vector(rng) * rng.uniform(*trans_range)
    return dq_from_pose(r, t)


def _descale(q: DualQuaternion, alpha: float) -> DualQuaternion:
    r, t = dq_to_pose(q)
    return dq_from_pose(r, t / alpha)


def generate(rig: RigSpec) -> tuple[list[MotionPair], GroundTruth]:
    rng = np.random.default_rng(rig.seed)
    T, T_inv = rig.q_T, rig.q_T.inverse()
    pairs = []
    for j, (alpha, n) in enumerate(zip(rig.alphas, rig.n_per_scale)):
        for _ in range(n):
            vb = _sample_motion(rng, rig.rot_range, rig.trans_range)
            va = dq_mul(dq_mul(T, vb), T_inv)
            if rig.scaled is ScaledSensor.SENSOR_B:
                vb = _descale(vb, alpha)
            else:
                va = _descale(va, alpha)
            pairs.append(MotionPair(va, vb, j))
    return pairs, GroundTruth(rig.q_T, tuple(rig.alphas), rig.scaled)


def perturb_motion(q: DualQuaternion, p: float, rng: np.random.Generator) -> DualQuaternion:
    """Relative noise: rotation angle and translation length scaled by ``p``.

    The rotation is post-multiplied by a random-axis rotation whose angle is
    ``|N(0, (p * theta)^2)|``; each translation axis receives ``N(0, sigma^2)``
    with ``sigma = p * |t| / sqrt(3)``.
    """
    r, t = dq_to_pose(q)
    rv = r.vec if r.w >= 0 else -r.vec
    theta = 2.0 * np.arctan2(np.linalg.norm(rv[1:]), rv[0])
    dtheta = abs(rng.normal(0.0, p * theta)) if p * theta > 0 else 0.0
    axis = random_unit_vector(rng)
    dr = Quaternion.from_axis_angle(axis, dtheta).vec
    r_new = qmul(r.vec, dr)
    r_new = r_new / np.linalg.norm(r_new)
    sigma = p * np.linalg.norm(t) / np.sqrt(3.0)
    t_new = t + (rng.normal(0.0, sigma, 3) if sigma > 0 else 0.0)
    return dq_from_pose(Quaternion.from_vec(r_new), t_new)


def add_noise(pairs: Sequence[MotionPair], noise: NoiseSpec, seed: int) -> list[MotionPair]:
    if noise.p_a == 0.0 and noise.p_b == 0.0:
        return list(pairs)
    rng = np.random.default_rng(seed)
    out = []
    for pair in pairs:
        qa = perturb_motion(pair.q_a, noise.p_a, rng) if noise.p_a > 0 else pair.q_a
        qb = perturb_motion(pair.q_b, noise.p_b, rng) if noise.p_b > 0 else pair.q_b
        out.append(MotionPair(qa, qb, pair.scale_index))
    return out
