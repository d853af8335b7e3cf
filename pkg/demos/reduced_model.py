"""Why the filter can use a four-axis model.

The RexROV is self-righting and its thrusters produce no roll or pitch
moment, so with roll, pitch and their rates at zero the six-axis equations
collapse to surge, sway, heave and yaw. This script checks that collapse
numerically and prints the handful of hand-checkable numbers the model
rests on.

    python demos/reduced_model.py
"""

import numpy as np

from rovnav import VehicleParams, accel_full, accel_reduced
from rovnav.dynamics import coriolis_added, damping

P = VehicleParams()

print("RexROV: m = %.0f kg, B = %.4f N, W = m g = %.2f N" % (P.m, P.B, P.W))
print("net buoyancy B - W = %.3f N" % (P.B - P.W))

dw = accel_reduced(np.zeros(4), np.zeros(4), P)[2]
print("at rest, zero thrust: heave acceleration %.6f m/s^2" % dw)

print("surge damping at u = 0.3 m/s: %.4f N" % damping([0.3, 0, 0, 0, 0, 0], P)[0])
print("added-mass Coriolis sway term at u = 0.3, r = 0.1: %.4f N"
      % coriolis_added([0.3, 0, 0, 0, 0, 0.1], P)[1])

rng = np.random.default_rng(0)
worst = 0.0
for _ in range(10_000):
    u, v, w, r = rng.normal(size=4)
    tau = rng.normal(size=6) * 300
    tau[3:5] = 0
    full = accel_full([u, v, w, 0, 0, r], np.zeros(6), tau, P)[[0, 1, 2, 5]]
    worst = max(worst, np.abs(full - accel_reduced([u, v, w, r], tau, P)).max())
print("largest full vs reduced difference over 10k level states: %.2e m/s^2" % worst)
