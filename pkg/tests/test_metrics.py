import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from dqcalib.dq_core import DualQuaternion, Quaternion, dq_from_pose
from dqcalib.errors import ScaleCountMismatch
from dqcalib.metrics import calibration_errors, error_motion

unit4 = arrays(np.float64, 4, elements=st.floats(-1, 1, allow_nan=False)).filter(
    lambda v: np.linalg.norm(v) > 0.1)
vec3 = arrays(np.float64, 3, elements=st.floats(-3, 3, allow_nan=False))


def make(v, t):
    return dq_from_pose(Quaternion.from_vec(v / np.linalg.norm(v)), t)


def test_identical_inputs():
    q = dq_from_pose(Quaternion.from_axis_angle([1, 1, 0], 0.3), [0.1, 0.2, 0.3])
    err = calibration_errors((q, [2.0, 3.0]), (q, [2.0, 3.0]))
    assert err.eps_r == 0.0 and err.eps_t == 0.0 and err.eps_alpha == (0.0, 0.0)


def test_half_turn_about_z():
    est = dq_from_pose(Quaternion(0.0, 0.0, 0.0, 1.0), [0, 0, 0])
    err = calibration_errors((est, [1.0]), (DualQuaternion.identity(), [1.0]))
    assert err.eps_r == np.pi
    assert err.eps_t == 0.0
    assert err.eps_r_deg == 180.0


def test_three_four_five_translation():
    est = dq_from_pose(Quaternion.identity(), [0.03, 0.04, 0.0])
    err = calibration_errors((est, [1.0]), (DualQuaternion.identity(), [1.0]))
    assert err.eps_t == 0.05
    assert err.eps_r == 0.0


def test_scale_count_mismatch():
    e = DualQuaternion.identity()
    with pytest.raises(ScaleCountMismatch):
        calibration_errors((e, [1.0]), (e, [1.0, 2.0]))


@given(unit4, vec3, unit4, vec3)
def test_symmetry_and_sign_invariance(v1, t1, v2, t2):
    a, b = make(v1, t1), make(v2, t2)
    e_ab = calibration_errors((a, [1.0]), (b, [1.0]))
    e_ba = calibration_errors((b, [1.0]), (a, [1.0]))
    assert abs(e_ab.eps_r - e_ba.eps_r) <= 1e-12
    e_neg = calibration_errors((-a, [1.0]), (b, [1.0]))
    assert e_neg == e_ab
    assert 0.0 <= e_ab.eps_r <= np.pi and e_ab.eps_t >= 0.0


@given(unit4, unit4)
def test_rotation_error_matches_trace_oracle(v1, v2):
    a, b = make(v1, np.zeros(3)), make(v2, np.zeros(3))
    R = b.real.as_matrix().T @ a.real.as_matrix()
    cos = np.clip((np.trace(R) - 1.0) / 2.0, -1.0, 1.0)
    angle = np.arccos(cos)
    if 1e-4 < angle < np.pi - 1e-4:   # arccos is ill-conditioned at the ends
        assert abs(calibration_errors((a, [1.0]), (b, [1.0])).eps_r - angle) <= 1e-9


def test_error_motion_is_canonical():
    q = dq_from_pose(Quaternion.from_axis_angle([0, 1, 0], 3.0), [1.0, 0.0, 0.0])
    assert error_motion(q, DualQuaternion.identity()).real.w >= 0.0


@given(unit4, vec3, unit4, vec3)
def test_translation_error_is_error_motion_translation(v1, t1, v2, t2):
    a, b = make(v1, t1), make(v2, t2)
    t_err = error_motion(a, b).translation()
    assert abs(calibration_errors((a, [1.0]), (b, [1.0])).eps_t - np.linalg.norm(t_err)) <= 1e-12
