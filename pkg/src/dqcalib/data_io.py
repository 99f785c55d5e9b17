"""Trajectory files in, motion pairs out; calibration results to JSON.

Trajectory files hold one pose per line::

    # timestamp tx ty tz qx qy qz qw
    0.0 0.0 0.0 0.0 0.0 0.0 0.0 1.0

Quaternions are scalar-LAST on disk and scalar-first in memory.  Blank lines
and lines starting with ``#`` are ignored.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.spatial.transform import Rotation, Slerp

from .calibrate import CalibrationSolution
from .dq_core import DualQuaternion, Quaternion, canonicalize_sign, dq_from_pose, dq_mul
from .errors import (
    BadQuaternionNorm,
    NonMonotonicTime,
    NoOverlap,
    ParseError,
    TooFewPairs,
)
from .problem import MotionPair

SCHEMA = "dqcalib/1"
QUAT_NORM_TOL = 1e-3


@dataclass(frozen=True)
class TrajectoryRecord:
    timestamp: float
    t: np.ndarray
    q: Quaternion

    def as_dq(self) -> DualQuaternion:
        return dq_from_pose(self.q, self.t)


@dataclass(frozen=True)
class PairingPolicy:
    stride: int = 1
    max_dt: float | None = None      # None: half the median frame interval of b
    interpolate: bool = True
    min_rotation: float = 0.0        # drop pairs rotating less than this (radians)

    def __post_init__(self):
        if self.stride < 1:
            raise ValueError("stride must be >= 1")
        if self.max_dt is not None and not self.max_dt > 0:
            raise ValueError("max_dt must be positive")


def _parse_line(line: str, lineno: int) -> tuple[float, np.ndarray, np.ndarray]:
    fields = line.split()
    if len(fields) != 8:
        raise ParseError(f"expected 8 fields, got {len(fields)}", lineno)
    try:
        vals = np.array([float(f) for f in fields])
    except ValueError as exc:
        raise ParseError(str(exc), lineno) from None
    if not np.all(np.isfinite(vals)):
        raise ParseError("non-finite value", lineno)
    return vals[0], vals[1:4], vals[4:8]


def parse_trajectory(lines: Iterable[str]) -> list[TrajectoryRecord]:
    records = []
    last = -math.inf
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        ts, t, q_xyzw = _parse_line(line, lineno)
        if not ts > last:
            raise NonMonotonicTime(f"timestamp {ts!r} does not increase", lineno)
        n = float(np.linalg.norm(q_xyzw))
        if abs(n - 1.0) > QUAT_NORM_TOL:
            raise BadQuaternionNorm(f"quaternion norm {n:.6g}", lineno)
        q = np.concatenate([q_xyzw[3:], q_xyzw[:3]])
        # leave quaternions that are unit to machine precision untouched so
        # write/load round trips are bit-stable
        if abs(n - 1.0) > 4 * np.finfo(float).eps:
            q = q / n
        records.append(TrajectoryRecord(float(ts), t, Quaternion.from_vec(q)))
        last = ts
    return records


def load_trajectory(path) -> list[TrajectoryRecord]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_trajectory(fh)


def format_trajectory(records: Sequence[TrajectoryRecord]) -> str:
    lines = ["# timestamp tx ty tz qx qy qz qw"]
    for rec in records:
        q = rec.q.vec
        vals = [rec.timestamp, *rec.t, q[1], q[2], q[3], q[0]]
        lines.append(" ".join(f"{v:.17g}" for v in vals))
    return "\n".join(lines) + "\n"


def write_trajectory(records: Sequence[TrajectoryRecord], path) -> None:
    Path(path).write_text(format_trajectory(records), encoding="utf-8")


def _arrays(traj: Sequence[TrajectoryRecord]):
    ts = np.array([r.timestamp for r in traj])
    t = np.array([r.t for r in traj]).reshape(-1, 3)
    q = np.array([r.q.vec for r in traj]).reshape(-1, 4)
    return ts, t, q


def resample(traj: Sequence[TrajectoryRecord], times, max_dt: float,
             interpolate: bool = True) -> tuple[np.ndarray, list[TrajectoryRecord]]:
    """Poses of ``traj`` at ``times``.

    Returns the indices into ``times`` that could be served and the poses.
    A time is served if a source sample lies within ``max_dt`` and, when
    interpolating, it falls inside the source time range.
    """
    ts, t, q = _arrays(traj)
    times = np.asarray(times, dtype=float)
    pos = np.searchsorted(ts, times)
    lo = np.clip(pos - 1, 0, len(ts) - 1)
    hi = np.clip(pos, 0, len(ts) - 1)
    nearest = np.where(np.abs(ts[lo] - times) <= np.abs(ts[hi] - times), lo, hi)
    ok = np.abs(ts[nearest] - times) <= max_dt * (1.0 + 1e-9)
    if interpolate:
        ok &= (times >= ts[0]) & (times <= ts[-1])
    keep = np.flatnonzero(ok)
    if keep.size == 0:
        return keep, []
    tk = times[keep]
    if interpolate and len(ts) > 1:
        slerp = Slerp(ts, Rotation.from_quat(q[:, [1, 2, 3, 0]]))
        xyzw = slerp(tk).as_quat()
        qk = xyzw[:, [3, 0, 1, 2]]
        # exact source timestamps reproduce the source sample bit for bit
        exact = ts[nearest[keep]] == tk
        qk[exact] = q[nearest[keep][exact]]
        tr = np.column_stack([np.interp(tk, ts, t[:, i]) for i in range(3)])
    else:
        qk = q[nearest[keep]]
        tr = t[nearest[keep]]
    out = [TrajectoryRecord(float(s), tr[i], Quaternion.from_vec(qk[i])) for i, s in enumerate(tk)]
    return keep, out


def relative_motion(p_i: TrajectoryRecord, p_j: TrajectoryRecord) -> DualQuaternion:
    """``pose_i^-1 * pose_j``."""
    return dq_mul(p_i.as_dq().inverse(), p_j.as_dq())


def make_motion_pairs(traj_a: Sequence[TrajectoryRecord], traj_b: Sequence[TrajectoryRecord],
                      policy: PairingPolicy = PairingPolicy(),
                      scale_index: int = 0) -> list[MotionPair]:
    """Relative motions of both sensors over identical time intervals.

    Sensor b is resampled at sensor a's timestamps; pairs span ``stride``
    consecutive matched samples.
    """
    need = policy.stride + 1
    if len(traj_a) < need or len(traj_b) < need:
        raise TooFewPairs(f"need at least {need} poses per trajectory")
    ts_b = np.array([r.timestamp for r in traj_b])
    max_dt = policy.max_dt
    if max_dt is None:
        max_dt = 0.5 * float(np.median(np.diff(ts_b)))
    ts_a = [r.timestamp for r in traj_a]
    keep, poses_b = resample(traj_b, ts_a, max_dt, policy.interpolate)
    if keep.size == 0:
        raise NoOverlap("no sensor-a timestamp can be matched to sensor b")
    poses_a = [traj_a[i] for i in keep]

    pairs = []
    for i in range(len(poses_a) - policy.stride):
        j = i + policy.stride
        va = relative_motion(poses_a[i], poses_a[j])
        vb = relative_motion(poses_b[i], poses_b[j])
        if policy.min_rotation > 0.0:
            w = min(abs(va.real.w), 1.0)
            if 2.0 * math.acos(w) < policy.min_rotation:
                continue
        pairs.append(MotionPair(va, vb, scale_index))
    if len(pairs) < 3:
        raise TooFewPairs(f"only {len(pairs)} motion pairs (need at least 3)")
    return pairs


def trajectories_from_motions(motions: Sequence[DualQuaternion], t0: float = 0.0,
                              dt: float = 0.1,
                              start: DualQuaternion | None = None) -> list[TrajectoryRecord]:
    """Chain relative motions into an absolute trajectory (first pose ``start``)."""
    pose = start if start is not None else DualQuaternion.identity()
    records = []
    for k in range(len(motions) + 1):
        r = pose.real.normalized()
        t = 2.0 * (pose.dual * pose.real.conj()).vector_part
        records.append(TrajectoryRecord(t0 + k * dt, t, r))
        if k < len(motions):
            pose = dq_mul(pose, motions[k])
    return records


# --- results -------------------------------------------------------------------

def _opt_float(v):
    return None if v is None else float(v)


def solution_to_dict(sol: CalibrationSolution) -> dict:
    return {
        "solver": sol.solver,
        "rotation": [float(v) for v in sol.calibration.real.vec],
        "translation": [float(v) for v in sol.translation],
        "alphas": [float(a) for a in sol.alphas],
        "cost": float(sol.cost),
        "dual_value": _opt_float(sol.dual_value),
        "gap": _opt_float(sol.gap),
        "certified": sol.certified,
        "wall_time_ms": 1e3 * float(sol.wall_time),
        "warnings": list(sol.warnings),
    }


def solution_from_dict(doc: dict) -> CalibrationSolution:
    dq = dq_from_pose(Quaternion.from_vec(doc["rotation"]), doc["translation"])
    return CalibrationSolution(
        calibration=dq,
        alphas=tuple(float(a) for a in doc.get("alphas", ())),
        cost=float(doc.get("cost", float("nan"))),
        solver=doc.get("solver", "unknown"),
        dual_value=doc.get("dual_value"),
        gap=doc.get("gap"),
        certified=doc.get("certified"),
        wall_time=1e-3 * float(doc.get("wall_time_ms", 0.0)),
        warnings=tuple(doc.get("warnings", ())),
    )


def result_document(solutions, extra: dict | None = None) -> dict:
    if isinstance(solutions, CalibrationSolution):
        doc = {"schema": SCHEMA, **solution_to_dict(solutions)}
    else:
        doc = {"schema": SCHEMA, "results": [solution_to_dict(s) for s in solutions]}
    if extra:
        doc.update(extra)
    return doc


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def write_result(solutions, path, extra: dict | None = None) -> None:
    """Write one solution, or several (``"results"`` list), as ``dqcalib/1`` JSON."""
    Path(path).write_text(dumps(result_document(solutions, extra)), encoding="utf-8")


def read_results(path) -> list[CalibrationSolution]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("schema") != SCHEMA:
        raise ValueError(f"unsupported schema {doc.get('schema')!r}")
    blocks = doc["results"] if "results" in doc else [doc]
    return [solution_from_dict(b) for b in blocks]


def read_result(path) -> CalibrationSolution:
    return read_results(path)[0]


def write_ground_truth(q: DualQuaternion, alphas: Sequence[float], path,
                       extra: dict | None = None) -> None:
    q = canonicalize_sign(q)
    r, t = q.real.vec, q.translation()
    doc = {"schema": SCHEMA, "solver": "ground_truth", "rotation": [float(v) for v in r],
           "translation": [float(v) for v in t], "alphas": [float(a) for a in alphas]}
    if extra:
        doc.update(extra)
    Path(path).write_text(dumps(doc), encoding="utf-8")
