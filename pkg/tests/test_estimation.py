import math
from dataclasses import replace

import numpy as np
import pytest

from rovnav.dynamics import VehicleParams
from rovnav.estimation import (
    EstimatorState,
    FilterNoise,
    Localizer,
    PredictInputs,
    SingularInnovationError,
    dynamic_acceleration,
    kinematic_acceleration,
    measurement,
    predict,
    predict_state,
    transition_jacobian,
    update,
)
from rovnav.sensors import SensorConfig, SensorFrame
from rovnav.simcore import RunConfig, run_episode
from rovnav.thrusters import ThrusterLayout, allocate

P = VehicleParams()
Z4 = np.zeros(4)


def inputs(vel=Z4, acc=Z4, acc_prev=None, dt=0.1):
    acc = np.asarray(acc, float)
    return PredictInputs(np.asarray(vel, float), acc, acc if acc_prev is None else np.asarray(acc_prev, float), dt)


def frame(t=0.0, acc=(0, 0, 0), gyro=(0, 0, 0), heading=0.0, dvl=(0, 0, 0), gps=(0, 0), depth=0.0):
    return SensorFrame(t, np.array(acc, float), np.array(gyro, float), heading, np.array(dvl, float),
                       None if gps is None else np.array(gps, float), depth)


def test_predict_at_rest_is_identity():
    x = np.array([1.0, 2.0, 3.0, 0.4])
    np.testing.assert_array_equal(predict_state(x, inputs()), x)


def test_predict_surge():
    assert predict_state([5, 0, 0, 0], inputs(vel=[1, 0, 0, 0]))[0] == pytest.approx(5.1)


def test_predict_rotates_surge_east():
    x = predict_state([5, 7, 0, math.pi / 2], inputs(vel=[1, 0, 0, 0]))
    assert x[0] == pytest.approx(5.0, abs=1e-15)
    assert x[1] == pytest.approx(7.1)


def test_predict_second_order_term():
    x = predict_state(Z4, inputs(vel=[0.3, 0, 0, 0], acc=[0.06, 0, 0, 0]))
    assert x[0] == pytest.approx(0.3 * 0.1 + 0.5 * 0.06 * 0.01)


def test_jacobian_examples():
    np.testing.assert_array_equal(transition_jacobian(inputs(vel=[0.3, 0.1, 0.1, 0.1])), np.eye(4))
    F = transition_jacobian(inputs(vel=[0.3, 0, 0, 0], acc=[0.06, 0, 0, 0], acc_prev=[0.05, 0, 0, 0]))
    assert F[0, 0] == pytest.approx(1 + (0.06 / 0.3) * 0.1 + (0.01 * 0.1) / 0.6)
    assert F[0, 0] == pytest.approx(1.021667, abs=1e-6)
    F = transition_jacobian(inputs(vel=[0.005, 0, 0, 0], acc=[0.06, 0, 0, 0]))
    assert F[0, 0] == 1.0


def test_zero_innovation_update():
    prior = EstimatorState(np.array([1.0, 2, 3, 0.5]), np.eye(4))
    R = 0.5 * np.eye(4)
    post, y = update(prior, prior.x, R)
    np.testing.assert_array_equal(y, Z4)
    np.testing.assert_allclose(post.x, prior.x)
    K = np.eye(4) @ np.linalg.inv(np.eye(4) + R)
    np.testing.assert_allclose(post.P, (np.eye(4) - K) @ np.eye(4))


def test_distrusted_measurement_keeps_prior():
    prior = EstimatorState(np.array([1.0, 2, 3, 0.5]), np.eye(4))
    post, _ = update(prior, [4, 5, 6, 1.0], 1e9 * np.eye(4))
    np.testing.assert_allclose(post.x, prior.x, atol=1e-6)


def test_perfect_measurement_is_adopted():
    prior = EstimatorState(np.array([1.0, 2, 3, 0.5]), np.eye(4))
    z = np.array([4.0, 5, 6, 1.0])
    post, _ = update(prior, z, np.zeros((4, 4)))
    np.testing.assert_array_equal(post.x, z)


def test_singular_innovation_raises():
    with pytest.raises(SingularInnovationError):
        update(EstimatorState(Z4.copy(), np.zeros((4, 4))), Z4, np.zeros((4, 4)))


def test_heading_2pi_invariance():
    prior = EstimatorState(np.array([0.0, 0, 0, 0.1]), np.eye(4))
    R = 0.1 * np.eye(4)
    a, _ = update(prior, [0, 0, 0, 6.2], R)
    b, _ = update(prior, [0, 0, 0, 6.2 + 2 * math.pi], R)
    np.testing.assert_allclose(a.x, b.x, atol=1e-12)
    assert a.x[3] > 6.0  # pulled the short way, across zero


@pytest.mark.parametrize("joseph", [False, True])
def test_covariance_stays_symmetric_psd(joseph):
    rng = np.random.default_rng(42)
    state = EstimatorState(Z4.copy(), np.eye(4))
    for _ in range(10_000):
        A = rng.normal(size=(4, 4)) * 0.1
        Q = A @ A.T
        B = rng.normal(size=(4, 4)) * 0.3
        R = B @ B.T + 1e-6 * np.eye(4)
        inp = inputs(vel=rng.normal(size=4) * 0.3, acc=rng.normal(size=4) * 0.05, acc_prev=rng.normal(size=4) * 0.05)
        state = predict(state, inp, Q)
        state, _ = update(state, rng.normal(size=4), R, joseph)
        np.testing.assert_array_equal(state.P, state.P.T)
        assert np.linalg.eigvalsh(state.P).min() >= -1e-12


def test_dynamic_backend_equilibrium():
    f = frame()
    thrusts = np.zeros(8)
    neutral = replace(P, W=P.B)
    np.testing.assert_array_equal(dynamic_acceleration(f, thrusts, neutral, ThrusterLayout()), Z4)
    assert dynamic_acceleration(f, thrusts, P, ThrusterLayout())[2] == pytest.approx(-0.021359, abs=1e-6)


def test_kinematic_backend():
    np.testing.assert_array_equal(kinematic_acceleration(frame()), Z4)
    a = kinematic_acceleration(frame(acc=(0.1, 0.2, 0.3), gyro=(0, 0, 0.05)), prev_yaw_rate=0.04, dt=0.1)
    np.testing.assert_allclose(a, [0.1, 0.2, 0.3, 0.1])


def test_missing_channels_inflate_r():
    R = np.diag([0.25, 0.25, 0.01, 1e-4])
    z, Rk = measurement(frame(gps=None, depth=None, heading=0.3), [1, 2, 3, 0.2], R)
    np.testing.assert_array_equal(z, [1, 2, 3, 0.3])
    np.testing.assert_array_equal(np.diag(Rk), [1e9, 1e9, 1e9, 1e-4])


def _straight_run(backend, bias, n=100, dt=0.1, u=0.3):
    """Cruise at constant surge with GPS/depth absent after the first frame."""
    noise = FilterNoise(np.zeros((4, 4)), np.diag([1e-6, 1e-6, 1e-6, 1e-6]))
    loc = Localizer(backend, noise, P, dt=dt, P0=1e-12 * np.eye(4))
    tau = [-(P.Xu + P.Xuu * u) * u, 0.0, P.B - P.W, 0.0]
    cmds = allocate(tau, loc.layout)
    for k in range(n + 1):
        f = frame(t=k * dt, acc=(bias, 0, 0), dvl=(u, 0, 0), gps=(u * k * dt, 0.0) if k == 0 else None,
                  depth=0.0 if k == 0 else None)
        loc.step(f, cmds)
    return loc.state.x[0] - u * n * dt


def test_bias_drifts_kinematic_only():
    b, n, dt = 0.05, 100, 0.1
    kin = _straight_run("kinematic", b, n, dt)
    dyn = _straight_run("dynamic", b, n, dt)
    # velocity is re-read from the DVL each step, so the bias enters only the
    # second-order term: n * (b dt^2 / 2), linear in time
    assert kin == pytest.approx(n * 0.5 * b * dt * dt, rel=1e-6)
    assert abs(dyn) < 1e-9


def test_backends_agree_on_straight_noiseless_motion():
    cfg = RunConfig(course="BE1", backend="both", sensors=SensorConfig.noiseless())
    log = run_episode(cfg)
    dyn, kin = log.estimate_array("dynamic"), log.estimate_array("kinematic")
    straight = slice(5, 80)  # first straight leg, after the start-up transient
    np.testing.assert_allclose(dyn[straight, 17], kin[straight, 17], atol=2e-3)
    np.testing.assert_allclose(dyn[straight, 1:3], kin[straight, 1:3], atol=1e-4)


def test_unknown_backend_rejected():
    with pytest.raises(ValueError):
        Localizer("magic", FilterNoise(np.eye(4), np.eye(4)))


def test_first_frame_needs_position():
    loc = Localizer("kinematic", FilterNoise(np.eye(4), np.eye(4)))
    with pytest.raises(ValueError):
        loc.step(frame(gps=None), np.zeros(8))
