import io
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from esc_lab.controller import EsParams
from esc_lab.errors import BlowUp
from esc_lab.solver import Trajectory, default_step, integrate, time_grid


def decay(t, y):
    return [-y[0] / 8.0]


def test_zero_rhs_constant():
    tr = integrate(lambda t, y: [0.0, 0.0], [1.5, -2.0], 0.0, 3.0, 0.1)
    assert np.all(tr.states == [1.5, -2.0])


def test_linear_decay_example():
    tr = integrate(decay, [1.0], 0.0, 8.0, 0.01)
    assert tr.final[0] == pytest.approx(math.exp(-1.0), abs=1e-8)
    assert tr.times[-1] == 8.0


def rk4_error(dt):
    tr = integrate(decay, [1.0], 0.0, 8.0, dt)
    return abs(tr.final[0] - math.exp(-1.0))


def test_fourth_order_ratio():
    # large steps keep the error well above round-off
    ratio = rk4_error(0.8) / rk4_error(0.4)
    assert 14 <= ratio <= 18


def test_last_step_shortened():
    tr = integrate(decay, [1.0], 0.0, 1.0, 0.3)
    np.testing.assert_allclose(tr.times, [0.0, 0.3, 0.6, 0.9, 1.0], atol=1e-15)
    assert tr.final[0] == pytest.approx(math.exp(-1 / 8), abs=1e-8)


@given(st.floats(0.001, 1.0), st.integers(1, 500))
def test_grid_length_when_aligned(dt, n):
    times = time_grid(0.0, n * dt, dt)
    assert len(times) == n + 1
    assert times[-1] == n * dt


def test_blowup_reported():
    with pytest.raises(BlowUp) as exc:
        integrate(lambda t, y: [y[0] ** 2], [1.0], 0.0, 2.0, 0.001)
    assert 0.99 < exc.value.t < 1.01


def test_nonfinite_is_blowup():
    with pytest.raises(BlowUp):
        integrate(lambda t, y: [float("nan")], [0.0], 0.0, 1.0, 0.1)


def test_bad_arguments():
    with pytest.raises(ValueError):
        integrate(decay, [1.0], 0.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        integrate(decay, [1.0], 1.0, 1.0, 0.1)


def test_default_step_examples():
    assert default_step(EsParams(1.0, 10.0)) == pytest.approx(2 * math.pi / 640, rel=1e-15)
    assert default_step(EsParams(1.0, 160.0)) == pytest.approx(6.135923e-4, rel=1e-6)
    assert default_step(EsParams(1.0, 3.0), "averaged") == 0.01


def test_deterministic():
    def f(t, y):
        return [math.sin(10 * t) * y[1], -y[0]]
    a = integrate(f, [1.0, 0.0], 0.0, 5.0, 0.01)
    b = integrate(f, [1.0, 0.0], 0.0, 5.0, 0.01)
    assert a.states.tobytes() == b.states.tobytes()


def test_csv_round_trip(tmp_path):
    tr = integrate(lambda t, y: [y[1], -y[0], 0.1], [1.0, 0.0, 0.0], 0.0, 1.0, 0.1,
                   state_names=("x1", "x2", "eta"))
    path = tmp_path / "traj.csv"
    tr.to_csv(path)
    text = path.read_text()
    assert text.splitlines()[0] == "t,x1,x2,eta"
    assert len(text.splitlines()) == len(tr) + 1
    back = Trajectory.from_csv(path)
    np.testing.assert_allclose(back.states, tr.states, rtol=1e-11, atol=1e-15)
    assert back.state_names == ("x1", "x2", "eta")
    buf = io.StringIO()
    tr.to_csv(buf)
    assert buf.getvalue() == text


def test_csv_twelve_significant_digits():
    tr = Trajectory(np.array([0.0, 0.1]), np.array([[1 / 3], [2 / 3]]), 0.1, state_names=("x",))
    assert tr.to_csv().splitlines()[1] == "0,0.333333333333"


def test_subsample_keeps_endpoint():
    tr = integrate(decay, [1.0], 0.0, 1.0, 0.3)
    sub = tr.subsample(2)
    np.testing.assert_allclose(sub.times, [0.0, 0.6, 1.0])
