import json
from dataclasses import replace

import numpy as np
import pytest

from rovnav.dynamics import VehicleParams, kinetic_energy
from rovnav.sensors import SensorConfig
from rovnav.simcore import (
    DivergenceError,
    RunConfig,
    RunTimeout,
    TruthState,
    control_wrench,
    integrate_step,
    run_episode,
)

P = VehicleParams()
NEUTRAL = replace(P, W=P.B)
REST = TruthState(np.array([0.0, 0.0, 20.0, 0.0, 0.0, 0.0]), np.zeros(6))


def test_equilibrium_is_fixed_point():
    s = integrate_step(REST, np.zeros(6), NEUTRAL, 0.01)
    np.testing.assert_array_equal(s.pose, REST.pose)
    np.testing.assert_array_equal(s.vel, REST.vel)
    assert s.t == pytest.approx(0.01)


def test_one_step_surge():
    s = integrate_step(REST, [100, 0, 0, 0, 0, 0], NEUTRAL, 0.01)
    assert s.vel[0] == pytest.approx(100 / (1863 + 779.79) * 0.01, rel=1e-12)
    # semi-implicit: the new velocity moves the pose within the same step
    assert s.pose[0] == pytest.approx(s.vel[0] * 0.01, rel=1e-12)


def test_energy_non_increasing_without_thrust():
    rng = np.random.default_rng(0)
    for _ in range(20):
        vel = rng.uniform(-0.5, 0.5, 6)
        vel[3:5] *= 0.1  # modest roll/pitch rates keep the attitude well inside the regular region
        s = TruthState(np.array([0, 0, 20.0, 0, 0, 0]), vel)
        e = kinetic_energy(s.vel, NEUTRAL)
        for _ in range(500):
            s = integrate_step(s, np.zeros(6), NEUTRAL, 0.01)
            e_new = kinetic_energy(s.vel, NEUTRAL)
            assert e_new <= e + 1e-9
            e = e_new


def _propagate(dt, method, t_end=2.0, tau=(50.0, -20.0, 10.0, 0.0, 0.0, 5.0)):
    s = TruthState(np.array([0, 0, 20.0, 0.02, -0.01, 0.3]), np.array([0.3, 0.1, 0.05, 0.02, 0.01, 0.1]))
    tau = np.asarray(tau, dtype=float)
    for _ in range(int(round(t_end / dt))):
        s = integrate_step(s, tau, P, dt, method)
    return np.r_[s.pose, s.vel]


def test_euler_first_order_convergence():
    ref = _propagate(0.0005, "rk4")
    errs = [np.abs(_propagate(dt, "euler") - ref).max() for dt in (0.02, 0.01, 0.005)]
    ratios = [errs[0] / errs[1], errs[1] / errs[2]]
    np.testing.assert_allclose(ratios, 2.0, rtol=0.15)


def test_rk4_fourth_order_convergence():
    # a push that keeps u, v, w, r away from the damping kink at zero velocity
    tau = (300.0, 200.0, 300.0, 50.0, 50.0, 100.0)
    ref = _propagate(0.0025, "rk4", tau=tau)
    errs = [np.abs(_propagate(dt, "rk4", tau=tau) - ref).max() for dt in (0.2, 0.1, 0.05)]
    np.testing.assert_allclose([errs[0] / errs[1], errs[1] / errs[2]], 16.0, rtol=0.15)


def test_divergence_detected():
    with pytest.raises(DivergenceError):
        integrate_step(REST, [1e12, 0, 0, 0, 0, 0], P, 0.01)


def test_unknown_integrator():
    with pytest.raises(ValueError):
        integrate_step(REST, np.zeros(6), P, 0.01, "leapfrog")


def test_depth_hold_has_deadband():
    cfg = RunConfig().controller
    inside = control_wrench(0, 0, 20.0, 20.4, 0, 0, P, cfg)
    outside = control_wrench(0, 0, 20.0, 21.0, 0, 0, P, cfg)
    assert inside[2] == pytest.approx(P.B - P.W)
    assert outside[2] == pytest.approx(P.B - P.W - cfg.heave_gain * 0.5)


def test_noiseless_be1_completes():
    log = run_episode(RunConfig(course="BE1", sensors=SensorConfig.noiseless()))
    assert log.status == "done"
    rep = log.metrics("dynamic")
    assert np.isfinite(rep.total) and rep.total < 1.0


def test_timeout_keeps_partial_log():
    with pytest.raises(RunTimeout) as info:
        run_episode(RunConfig(course="BE1", timeout=1.0))
    log = info.value.log
    assert log.status == "timeout"
    assert len(log.truth) == 11  # ticks at t = 0.0 .. 1.0


def test_invalid_config_rejected():
    with pytest.raises(ValueError, match="integrator"):
        run_episode(RunConfig(integrator="magic"))


def test_run_is_byte_deterministic(tmp_path):
    cfg = RunConfig(course="BE3", backend="both", seed=4)
    a = run_episode(cfg).write(tmp_path / "a")
    b = run_episode(cfg).write(tmp_path / "b")
    for name in ("truth.csv", "sensors.csv", "commands.csv", "est_dynamic.csv", "est_kinematic.csv", "run.meta"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    meta = json.loads((a / "run.meta").read_text())
    assert meta["seed"] == 4 and meta["config"]["params"]["Xuu"] == P.Xuu


def test_both_backends_share_the_sensor_stream():
    single = run_episode(RunConfig(course="BE2", backend="dynamic", seed=2))
    both = run_episode(RunConfig(course="BE2", backend="both", seed=2))
    assert single.sensors == both.sensors
    assert single.estimates["dynamic"] == both.estimates["dynamic"]


def test_roll_pitch_stay_level():
    log = run_episode(RunConfig(course="BE2", backend="kinematic", seed=1))
    truth = log.truth_array()
    assert np.abs(truth[:, 4:6]).max() < 1e-6
    assert log.max_roll_pitch < 1e-6
