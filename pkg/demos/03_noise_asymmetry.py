"""
Which sensor should be the scaled one?
======================================

Noise on the scaled sensor hurts the scale estimate far more than the same
noise on the metric sensor.  The sweep below prints a small heatmap of the
median scale error.
"""

import numpy as np

from dqcalib.experiments import noise_sweep

grid = (0.0, 0.05, 0.1, 0.2)
rows = noise_sweep(grid, trials=10, solver="fast")
table = np.array([r["median_eps_alpha"] for r in rows]).reshape(len(grid), len(grid))

print("median |alpha_hat - alpha|, rows: noise on a, columns: noise on b (scaled)")
print("        " + "".join(f"{p:>9.2f}" for p in grid))
for pa, row in zip(grid, table):
    print(f"{pa:>6.2f}  " + "".join(f"{v:>9.4f}" for v in row))
