import numpy as np
import pytest

from astrosyn.integrate import IntegrationError, Trajectory, pulse, rk4_step, simulate


def test_zero_derivative_is_identity():
    out = rk4_step(np.array([1.0]), lambda t, y: np.zeros_like(y), 0.0, 0.1)
    assert out[0] == 1.0


def test_single_step_matches_exponential():
    # one RK4 step on dy/dt = -y reproduces the 4th-order Taylor value
    # 1 - h + h^2/2 - h^3/6 + h^4/24 = 0.9048375 exactly for h = 0.1
    out = rk4_step(np.array([1.0]), lambda t, y: -y, 0.0, 0.1)
    assert out[0] == pytest.approx(0.9048375, abs=1e-12)
    assert out[0] == pytest.approx(np.exp(-0.1), abs=1e-6)


def test_constant_slope_is_exact():
    out = rk4_step(np.array([0.0]), lambda t, y: np.ones_like(y), 0.0, 1e-4)
    assert out[0] == pytest.approx(1e-4, rel=1e-12)


def test_input_state_not_mutated():
    y0 = np.array([2.0, 3.0])
    rk4_step(y0, lambda t, y: -y, 0.0, 0.1)
    assert y0.tolist() == [2.0, 3.0]


def test_simulate_sample_count_and_values():
    traj = simulate(lambda t, y: np.zeros_like(y), [2.0], duration=1.0, dt=0.1)
    assert traj.n_samples == 11
    assert (traj.states == 2.0).all()
    np.testing.assert_allclose(np.diff(traj.times), 0.1)


def test_simulate_exponential_long_horizon():
    traj = simulate(lambda t, y: -y, [1.0], duration=5.0, dt=1e-4, stride=100)
    assert abs(traj.final_state()[0] - np.exp(-5.0)) < 1e-8


def test_threshold_event_time():
    # dy/dt = +1 from 0 crossing 0.5: first event within one step of t = 0.5
    def handler(y):
        return y, (("crossed",) if y[0] >= 0.5 else ())

    traj = simulate(lambda t, y: np.ones_like(y), [0.0], duration=1.0, dt=0.01,
                    event_handler=handler)
    crossings = traj.event_times("crossed")
    assert crossings.size > 0
    assert abs(crossings[0] - 0.5) <= 0.01 + 1e-12


def test_rk4_global_order():
    # halving dt divides the global error at t=1 by ~16 on dy/dt = -y
    def err(dt):
        traj = simulate(lambda t, y: -y, [1.0], duration=1.0, dt=dt)
        return abs(traj.final_state()[0] - np.exp(-1.0))

    ratio = err(0.1) / err(0.05)
    assert 14.0 <= ratio <= 18.0


def test_bitwise_determinism():
    def deriv(t, y):
        return np.array([-y[0] + 0.3 * np.sin(t), y[0] - 0.5 * y[1]])

    a = simulate(deriv, [1.0, 0.2], duration=2.0, dt=1e-3)
    b = simulate(deriv, [1.0, 0.2], duration=2.0, dt=1e-3)
    assert a.states.tobytes() == b.states.tobytes()
    assert a.times.tobytes() == b.times.tobytes()


def test_no_sample_is_nonfinite_and_failure_reports_index():
    def blowup(t, y):
        return np.array([0.0, np.inf if t > 0.05 else 0.0])

    with pytest.raises(IntegrationError) as excinfo:
        simulate(blowup, [1.0, 1.0], duration=1.0, dt=0.01)
    assert excinfo.value.index == 1
    assert excinfo.value.t is not None


def test_stride_decimates_samples_but_not_events():
    def handler(y):
        return y, ("tick",)

    traj = simulate(lambda t, y: np.ones_like(y), [0.0], duration=1.0, dt=0.1,
                    event_handler=handler, stride=5)
    assert traj.n_samples == 3  # steps 0, 5, 10
    assert traj.dt == pytest.approx(0.5)
    assert len(traj.events) == 10  # one per integration step


def test_trajectory_rejects_ragged_or_nonuniform():
    with pytest.raises(ValueError):
        Trajectory(dt=0.1, times=np.array([0.0, 0.1]), states=np.zeros((3, 1)))
    with pytest.raises(ValueError):
        Trajectory(dt=0.1, times=np.array([0.0, 0.1, 0.5]), states=np.zeros((3, 1)))


def test_duration_shorter_than_dt_rejected():
    with pytest.raises(ValueError):
        simulate(lambda t, y: y, [1.0], duration=0.01, dt=0.1)


def test_pulse_profile():
    f = pulse(5.0, t_off=0.2)
    assert f(0.0) == 5.0 and f(0.19) == 5.0 and f(0.2) == 0.0 and f(1.0) == 0.0
