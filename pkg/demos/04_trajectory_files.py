"""
From trajectory files to a calibration
======================================

Writes two synthetic trajectories, reads them back, pairs the relative
motions and stores the result as JSON.
"""

import tempfile
from pathlib import Path

from dqcalib import calibrate
from dqcalib.data_io import (
    load_trajectory,
    make_motion_pairs,
    trajectories_from_motions,
    write_result,
    write_trajectory,
)
from dqcalib.synth import generate, random_rig

pairs, truth = generate(random_rig(seed=4, alphas=(0.3,), n=50))
out = Path(tempfile.mkdtemp())

# absolute poses from chained relative motions
write_trajectory(trajectories_from_motions([p.q_a for p in pairs]), out / "a.txt")
write_trajectory(trajectories_from_motions([p.q_b for p in pairs]), out / "b.txt")
print((out / "a.txt").read_text().splitlines()[:3])

traj_a, traj_b = load_trajectory(out / "a.txt"), load_trajectory(out / "b.txt")
sol = calibrate(make_motion_pairs(traj_a, traj_b), solver="global")
write_result(sol, out / "result.json")
print((out / "result.json").read_text())
print("true alpha:", truth.alphas[0])
