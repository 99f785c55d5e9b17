import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from dqcalib.dq_core import DualQuaternion, Quaternion, dq_from_pose, left_matrix, right_matrix
from dqcalib.errors import (
    AntiparallelScale,
    BadScaleIndex,
    DimensionMismatch,
    EmptyScaleGroup,
    UnobservableWarning,
)
from dqcalib.problem import (
    ConstraintSet,
    MotionPair,
    ScaledSensor,
    accumulate_cost,
    assemble_Z,
    build_motion_matrix,
    constraint_matrices,
    eval_constraints,
    eval_parallelism_constraints,
    eval_unit_constraints,
    extract_calibration,
    join_state,
    project_feasible,
    true_state,
)

from conftest import make_pairs

finite = st.floats(-5, 5, allow_nan=False, allow_infinity=False)


def hamilton_left(a):
    # columns are a * e_k, written out component by component
    a0, a1, a2, a3 = a
    return np.array([[a0, -a1, -a2, -a3],
                     [a1, a0, -a3, a2],
                     [a2, a3, a0, -a1],
                     [a3, -a2, a1, a0]])


def hamilton_right(b):
    b0, b1, b2, b3 = b
    return np.array([[b0, -b1, -b2, -b3],
                     [b1, b0, b3, -b2],
                     [b2, -b3, b0, b1],
                     [b3, b2, -b1, b0]])


def literal_M(pair):
    """Single-scale 8 x 12 motion matrix written out block by block."""
    qa, qb = pair.q_a.vec, pair.q_b.vec
    qa = -qa if qa[0] < 0 else qa
    qb = -qb if qb[0] < 0 else qb
    diff = hamilton_left(qa[:4]) - hamilton_right(qb[:4])
    M = np.zeros((8, 12))
    M[:4, :4] = diff
    M[4:, :4] = hamilton_left(qa[4:])
    M[4:, 4:8] = -hamilton_right(qb[4:])
    M[4:, 8:] = diff
    return M


def test_hamilton_oracles_match_library(rng):
    a = rng.standard_normal(4)
    assert np.array_equal(hamilton_left(a), left_matrix(a))
    assert np.array_equal(hamilton_right(a), right_matrix(a))


def test_identity_pair_gives_zero_matrix():
    e = DualQuaternion.identity()
    assert not build_motion_matrix(MotionPair(e, e)).any()


def test_true_state_in_null_space_of_every_M():
    for alphas in [(10.0,), (0.01, 3.0, 100.0), (1.0, 2.0, 0.5, 7.0)]:
        pairs, gt = make_pairs(seed=1, alphas=alphas, n=20)
        x = true_state(gt.q_T, gt.alphas)
        for p in pairs:
            M = build_motion_matrix(p, len(alphas))
            assert np.abs(M @ x).max() <= 1e-10 * max(1.0, max(alphas))


def test_sensor_a_variant_null_space():
    pairs, gt = make_pairs(seed=2, alphas=(4.0,), n=20, scaled=ScaledSensor.SENSOR_A)
    x = true_state(gt.q_T, gt.alphas)
    for p in pairs:
        M = build_motion_matrix(p, 1, ScaledSensor.SENSOR_A)
        assert np.abs(M @ x).max() <= 1e-10
        # SensorA puts -D-_b on r and D+_a in the s slot
        assert np.allclose(M[4:, :4], -right_matrix(p.q_b.dual.vec))
        assert np.allclose(M[4:, 4:8], left_matrix(p.q_a.dual.vec))


def test_multi_scale_block_layout():
    pairs, _ = make_pairs(seed=0, alphas=(1.0, 2.0, 3.0), n=2)
    pair = MotionPair(pairs[0].q_a, pairs[0].q_b, scale_index=1)
    M = build_motion_matrix(pair, 3)
    assert M.shape == (8, 20)
    assert not M[4:, 4:8].any() and not M[4:, 12:16].any()
    assert np.array_equal(M[4:, 8:12], -right_matrix(pair.q_b.dual.vec))
    with pytest.raises(BadScaleIndex):
        build_motion_matrix(MotionPair(pair.q_a, pair.q_b, 3), 3)


def test_single_scale_Q_bit_matches_literal_matrix():
    pairs, _ = make_pairs(seed=4, alphas=(2.0,), n=50)
    Ms = np.array([literal_M(p) for p in pairs])
    Q_lit = np.einsum("tij,tik->jk", Ms, Ms)
    Q_lit = 0.5 * (Q_lit + Q_lit.T)
    Q = accumulate_cost(pairs, 1).Q
    assert Q.shape == (12, 12)
    assert np.array_equal(Q, Q_lit)


def test_cost_properties():
    pairs, gt = make_pairs(seed=5, alphas=(0.01,), n=100)
    prob = accumulate_cost(pairs, 1)
    x = true_state(gt.q_T, gt.alphas)
    assert prob.cost(x) <= 1e-16 * np.trace(prob.Q)
    assert np.array_equal(prob.Q, prob.Q.T)
    assert np.linalg.eigvalsh(prob.Q)[0] >= -1e-10 * np.trace(prob.Q)
    # additivity over disjoint pair sets
    qa = accumulate_cost(pairs[:40], 1).Q
    qb = accumulate_cost(pairs[40:], 1).Q
    assert np.allclose(qa + qb, prob.Q, rtol=0, atol=1e-12 * np.abs(prob.Q).max())


def test_pair_sign_does_not_change_cost():
    pairs, _ = make_pairs(seed=6, n=10)
    flipped = [MotionPair(-p.q_a, p.q_b) if k % 2 else MotionPair(p.q_a, -p.q_b)
               for k, p in enumerate(pairs)]
    assert np.array_equal(accumulate_cost(pairs).Q, accumulate_cost(flipped).Q)


def test_single_zero_motion_gives_zero_Q():
    e = DualQuaternion.identity()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UnobservableWarning)
        prob = accumulate_cost([MotionPair(e, e)])
    assert not prob.Q.any()


def test_empty_scale_group():
    pairs, _ = make_pairs(seed=0, n=5)
    with pytest.raises(EmptyScaleGroup) as info:
        accumulate_cost(pairs, 2)
    assert info.value.index == 1


def test_single_axis_motion_warns():
    pairs = []
    for ang in (0.3, 0.6, 0.9):
        q = dq_from_pose(Quaternion.from_axis_angle([0, 0, 1], ang), [0.1, 0.2, 0.0])
        pairs.append(MotionPair(q, q))
    with pytest.warns(UnobservableWarning):
        accumulate_cost(pairs)


def test_unit_constraints_examples():
    q = dq_from_pose(Quaternion.from_axis_angle([1, 2, 3], 0.4), [1.0, -2.0, 0.5])
    x = join_state(q.real.vec, [np.array([3.0, 1.0, 0.0, 2.0])], q.dual.vec)
    assert np.allclose(eval_unit_constraints(x), 0.0, atol=1e-15)
    assert eval_unit_constraints(np.zeros(12))[0] == 1.0


def test_parallelism_examples():
    r = np.array([0.5, 0.5, 0.5, 0.5])
    assert not eval_parallelism_constraints(join_state(r, [2 * r], np.zeros(4))).any()
    x = join_state([1.0, 0, 0, 0], [[0, 1.0, 0, 0]], np.zeros(4))
    assert eval_parallelism_constraints(x).tolist() == [1.0, 0.0, 0.0]
    # r_1 = 0 slips through the reduced set but not the full one
    x = join_state([0, 1.0, 0, 0], [[0, 0, 1.0, 0]], np.zeros(4))
    assert not eval_parallelism_constraints(x).any()
    assert eval_parallelism_constraints(x, constraint_set=ConstraintSet.FULL6).any()


def test_constraint_counts():
    assert len(constraint_matrices(1)) == 5
    assert len(constraint_matrices(3)) == 11
    assert len(constraint_matrices(2, ConstraintSet.FULL6)) == 14
    C = constraint_matrices(1)
    x = join_state([1.0, 0, 0, 0], [[0, 1.0, 0, 0]], np.zeros(4))
    assert x @ C.P_alpha(0, 0) @ x == 1.0


@given(arrays(np.float64, 20, elements=finite), st.sampled_from(list(ConstraintSet)))
def test_quadratic_forms_match_direct_evaluation(x, cset):
    C = constraint_matrices(3, cset)
    assert np.allclose(C.evaluate(x), eval_constraints(x, 3, cset), atol=1e-12 * (1 + x @ x))
    r, d = x[:4], x[16:]
    assert np.isclose(x @ C.P_d1 @ x, -(r @ r), atol=1e-12 * (1 + x @ x))
    assert np.isclose(x @ C.P_d2 @ x, 2 * r @ d, atol=1e-12 * (1 + x @ x))
    for P in C.P:
        assert np.array_equal(P, P.T)


def test_assemble_Z(rng):
    pairs, _ = make_pairs(seed=7, n=30)
    prob = accumulate_cost(pairs)
    C = constraint_matrices(1)
    assert np.array_equal(assemble_Z(prob, C, np.zeros(5)), prob.Q)
    assert prob.dim == 12
    lam = rng.standard_normal(5)
    Z = assemble_Z(prob, C, lam)
    for _ in range(10):
        x = rng.standard_normal(12)
        g = eval_constraints(x)
        lagrangian = prob.cost(x) + lam @ g
        assert np.isclose(x @ Z @ x + lam[0], lagrangian, atol=1e-10 * (1 + abs(lagrangian)))
    with pytest.raises(DimensionMismatch):
        assemble_Z(prob, C, np.zeros(4))


def test_extract_calibration():
    pairs, gt = make_pairs(seed=8, alphas=(10.0,), n=2)
    dq, alphas, misfit = extract_calibration(true_state(gt.q_T, (10.0,)))
    assert alphas == [10.0] and misfit == 0.0
    assert np.allclose(dq.vec, gt.q_T.vec, atol=1e-15) or np.allclose(dq.vec, -gt.q_T.vec, atol=1e-15)
    _, alphas, _ = extract_calibration(true_state(gt.q_T, (0.01,)))
    assert np.isclose(alphas[0], 0.01, rtol=1e-14)
    r = gt.q_T.real.vec
    with pytest.raises(AntiparallelScale):
        extract_calibration(join_state(r, [-2 * r], gt.q_T.dual.vec))


def test_project_feasible(rng):
    x = rng.standard_normal(16)
    y, dist = project_feasible(x, 2)
    assert np.allclose(eval_unit_constraints(y, 2), 0.0, atol=1e-14)
    assert np.isclose(dist, np.linalg.norm(y - x))
