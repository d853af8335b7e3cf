"""Per-course error tables in the layout of the published results.

Runs every built-in course with each filter driving the vehicle, over a few
seeds, and prints mean and spread of the three published columns: Total
(mean distance from the driven path to the course), and the X and Y RMSE of
the filter against ground truth. Expect the dynamic filter's Y column to sit
well below the kinematic one; absolute values differ from the published ones
because the courses, noise levels and actuation stack are our own.

    python demos/course_tables.py [seeds] [jobs]
"""

import sys
import tempfile
from pathlib import Path

import numpy as np

from rovnav.config import build_spec
from rovnav.experiment import run_experiments

seeds = int(sys.argv[1]) if len(sys.argv) > 1 else 3
jobs = int(sys.argv[2]) if len(sys.argv) > 2 else 1

with tempfile.TemporaryDirectory() as tmp:
    spec = build_spec({"courses": ["BE1", "BE2", "BE3"], "seed_count": seeds}, output_dir=tmp)
    run_experiments(spec, jobs=jobs)
    rows = [line.split(",") for line in (Path(tmp) / "report.csv").read_text().splitlines()[1:]]

for course in ("BE1", "BE2", "BE3"):
    print(f"\n{course} ({seeds} seeds)")
    print(f"{'':<10} {'Total':>16} {'X Kalman':>16} {'Y Kalman':>16}")
    for backend in ("dynamic", "kinematic"):
        vals = np.array([[float(v) for v in r[5:8]] for r in rows if r[1] == course and r[2] == backend])
        cells = [f"{m:.4f} +- {s:.4f}" for m, s in zip(vals.mean(0), vals.std(0))]
        print(f"{backend:<10} " + " ".join(f"{c:>16}" for c in cells))
