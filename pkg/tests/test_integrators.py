import numpy as np
import pytest

from stableforms.errors import ConfigError, SingularStateError
from stableforms.flows import write_csv
from stableforms.integrators import (
    RK4,
    RKF45,
    IntegratorConfig,
    Trajectory,
    integrate,
)


def decay(y):
    return -y


def oscillator(y):
    return np.array([y[1], -y[0]])


@pytest.mark.parametrize(
    "kwargs",
    [
        {"method": "euler"},
        {"t_span": (1.0, 1.0)},
        {"t_span": (1.0, 0.0)},
        {"step": 0.0},
        {"max_step": -1.0},
        {"atol": 0.0},
        {"rtol": -1e-3},
    ],
)
def test_config_rejects_bad_settings(kwargs):
    with pytest.raises(ConfigError):
        IntegratorConfig(**kwargs)


def test_rk4_step_is_fourth_order():
    y = np.array([1.0])
    errors = []
    for h in (0.1, 0.05):
        y_new, err = RK4(decay).step(y, h)
        # fixed step, no error estimate
        assert err == 0.0
        errors.append(abs(y_new[0] - np.exp(-h)))
    # local error is O(h^5)
    assert errors[0] / errors[1] == pytest.approx(32.0, rel=0.1)


def test_rkf45_error_estimate_is_small():
    y_new, err = RKF45(decay, atol=1e-6, rtol=1e-6).step(np.array([1.0]), 0.1)
    assert y_new[0] == pytest.approx(np.exp(-0.1), rel=1e-6)
    # scaled error below one means the step is accepted
    assert 0.0 < err < 1.0


@pytest.mark.parametrize("method", ["rk4", "rkf45"])
def test_exponential_decay(method):
    cfg = IntegratorConfig(method=method, t_span=(0.0, 2.0), step=1e-2)
    traj = integrate(decay, np.array([1.0, 2.0]), cfg)
    assert traj.complete
    assert traj.reason is None
    # y(t) = exp(-t) y0
    expected = np.exp(-2.0) * np.array([1.0, 2.0])
    assert traj.final == pytest.approx(expected, rel=1e-8)


@pytest.mark.parametrize("method", ["rk4", "rkf45"])
def test_oscillator_conserves_energy(method):
    cfg = IntegratorConfig(method=method, t_span=(0.0, 2.0 * np.pi), step=1e-3)
    traj = integrate(oscillator, np.array([1.0, 0.0]), cfg)
    energies = np.sum(traj.array() ** 2, axis=1)
    # energy stays on the unit circle
    assert np.max(np.abs(energies - 1.0)) < 1e-8
    # one full period returns to the start
    assert traj.final == pytest.approx([1.0, 0.0], abs=1e-8)


@pytest.mark.parametrize("method", ["rk4", "rkf45"])
def test_trajectory_ends_exactly_at_final_time(method):
    cfg = IntegratorConfig(method=method, t_span=(0.0, 1.0), step=0.1)
    traj = integrate(decay, np.array([1.0]), cfg)
    assert traj.times[0] == 0.0
    # the last step is shortened to land on t1
    assert traj.times[-1] == 1.0
    assert np.all(np.diff(traj.times) > 0)
    if method == "rk4":
        assert len(traj) == 11


def blowup(y):
    if y[0] > 100.0:
        raise SingularStateError("left the domain")
    return y**2


@pytest.mark.parametrize("method", ["rk4", "rkf45"])
def test_singular_flow_returns_partial_trajectory(method, caplog):
    # y = 1 / (1 - t) blows up at t = 1
    cfg = IntegratorConfig(method=method, t_span=(0.0, 2.0), step=1e-3)
    traj = integrate(blowup, np.array([1.0]), cfg)
    assert not traj.complete
    assert traj.reason
    assert traj.times[-1] < 1.0
    # samples before the blow-up are kept
    assert len(traj) > 1
    assert "stopped early" in caplog.text


def test_non_finite_rhs_stops_rk4():
    cfg = IntegratorConfig(method="rk4", t_span=(0.0, 1.0), step=0.1)
    traj = integrate(lambda y: np.full_like(y, np.nan), np.array([1.0]), cfg)
    assert not traj.complete
    # only the initial state
    assert len(traj) == 1


def test_trajectory_accumulates_states():
    traj = Trajectory()
    traj.append(0.0, [1.0, 2.0])
    traj.append(0.5, np.array([3.0, 4.0]))
    assert len(traj) == 2
    assert traj.array().shape == (2, 2)
    assert list(traj.final) == [3.0, 4.0]


def test_write_csv_header_and_precision(tmp_path):
    traj = Trajectory()
    traj.append(0.0, [0.1, 2.0])
    traj.append(0.5, [1.0 / 3.0, 2.5])
    path = tmp_path / "run.csv"
    with open(path, "w", newline="") as out:
        write_csv(traj, out, ("t", "a", "b"))
    lines = path.read_text().splitlines()
    assert lines[0] == "t,a,b"
    # 17 significant digits round-trip a double
    assert lines[1] == "0,0.10000000000000001,2"
    assert lines[2].split(",")[1] == "0.33333333333333331"
    assert len(lines) == 3


def test_write_csv_marks_incomplete_runs(tmp_path):
    traj = Trajectory()
    traj.append(0.0, [1.0])
    traj.complete = False
    traj.reason = "singular state near t=0.5"
    path = tmp_path / "run.csv"
    with open(path, "w", newline="") as out:
        write_csv(traj, out, ("t", "y"))
    assert path.read_text().splitlines()[-1] == (
        "# INCOMPLETE: singular state near t=0.5"
    )
