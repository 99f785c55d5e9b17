"""Rotation, translation and scale errors of an estimated calibration."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dq_core import DualQuaternion, canonicalize_sign, dq_mul
from .errors import ScaleCountMismatch


@dataclass(frozen=True)
class ErrorReport:
    eps_r: float                  # radians
    eps_t: float                  # meters
    eps_alpha: tuple[float, ...]

    @property
    def eps_r_deg(self) -> float:
        return float(np.degrees(self.eps_r))

    def as_dict(self) -> dict:
        return {
            "eps_r_rad": self.eps_r,
            "eps_r_deg": self.eps_r_deg,
            "eps_t_m": self.eps_t,
            "eps_alpha": list(self.eps_alpha),
        }


def error_motion(est: DualQuaternion, gt: DualQuaternion) -> DualQuaternion:
    """``q_gt^-1 * q_est``, sign-canonicalised."""
    est = canonicalize_sign(est)
    gt = canonicalize_sign(gt)
    return canonicalize_sign(dq_mul(gt.inverse(), est))


def calibration_errors(est: tuple[DualQuaternion, Sequence[float]],
                       gt: tuple[DualQuaternion, Sequence[float]]) -> ErrorReport:
    q_est, a_est = est
    q_gt, a_gt = gt
    if len(a_est) != len(a_gt):
        raise ScaleCountMismatch(f"{len(a_est)} estimated scales vs {len(a_gt)} reference scales")
    q_err = error_motion(q_est, q_gt)
    r = q_err.real.vec
    # 2*arccos(w) evaluated as 2*atan2(|v|, w), which stays accurate near w = 1
    eps_r = 2.0 * float(np.arctan2(np.linalg.norm(r[1:]), r[0]))
    # the error motion's translation is R_gt^T (t_est - t_gt); same norm
    eps_t = float(np.linalg.norm(q_est.translation() - q_gt.translation()))
    eps_a = tuple(abs(float(a) - float(b)) for a, b in zip(a_est, a_gt))
    return ErrorReport(eps_r=eps_r, eps_t=eps_t, eps_alpha=eps_a)
