"""One closed-loop run with both filters watching the same trajectory.

The vehicle follows the BE2 sinusoid, steered by the dynamic-model filter.
The kinematic (IMU) filter runs alongside on the same sensor stream, so the
two estimates can be compared sample by sample. Both rows share one driven
path, so their Total column is the same. The run directory holds
every log plus the plot-ready overlay and acceleration CSVs.

    python demos/single_run.py [output_dir]
"""

import sys
from pathlib import Path

import numpy as np

from rovnav import RunConfig, emit_plot_data, run_episode

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_runs") / "BE2_both_seed0"
log = run_episode(RunConfig(course="BE2", backend="both", seed=0))
log.write(out)
emit_plot_data(out)

t = log.truth_array()
print(f"finished in {t[-1, 0]:.1f} s simulated, {len(t)} filter ticks, status {log.status}")
print(f"{'backend':<10} {'total':>8} {'x_kalman':>9} {'y_kalman':>9}")
for b in ("dynamic", "kinematic"):
    m = log.metrics(b)
    print(f"{b:<10} {m.total:8.4f} {m.x_kalman:9.4f} {m.y_kalman:9.4f}")

acc = np.genfromtxt(out / "accel_compare.csv", delimiter=",", skip_header=1)
print("surge acceleration RMS error vs truth: model %.4f, IMU %.4f m/s^2" % (
    np.sqrt(np.mean((acc[:, 1] - acc[:, 3]) ** 2)), np.sqrt(np.mean((acc[:, 2] - acc[:, 3]) ** 2))))
print(f"logs written to {out}")
