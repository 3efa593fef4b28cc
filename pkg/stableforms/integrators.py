"""
Explicit Runge-Kutta integrators for the reduced flows.

RK4 is the classical fixed-step scheme. RKF45 is the Fehlberg 4(5) pair:
the 4th order solution is propagated and the difference to the 5th order
one is the local error estimate used for step-size control.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np

from .config import (
    DEFAULT_ATOL,
    DEFAULT_METHOD,
    DEFAULT_RTOL,
    MAX_STEP,
    MAX_STEPS,
    MIN_STEP,
    RK4_STEP,
)
from .errors import ConfigError, SingularStateError

logger = logging.getLogger(__name__)

Rhs = Callable[[np.ndarray], np.ndarray]

METHODS = ("rk4", "rkf45")


@dataclass(frozen=True)
class IntegratorConfig:
    """
    Settings for one integration.

    Attributes:
        method: "rk4" (fixed step) or "rkf45" (adaptive).
        t_span: (t0, t1) with t1 > t0.
        step: fixed step for rk4, first trial step for rkf45.
        atol, rtol: local error tolerances for rkf45.
        max_step: upper bound on rkf45 steps.
    """

    method: str = DEFAULT_METHOD
    t_span: Tuple[float, float] = (0.0, 1.0)
    step: float = RK4_STEP
    atol: float = DEFAULT_ATOL
    rtol: float = DEFAULT_RTOL
    max_step: float = MAX_STEP

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ConfigError(
                f"unknown method {self.method!r}, expected one of {METHODS}"
            )
        t0, t1 = self.t_span
        if not t1 > t0:
            raise ConfigError(f"t_span must be increasing, got {self.t_span}")
        if self.step <= 0 or self.max_step <= 0:
            raise ConfigError("step sizes must be positive")
        if self.atol <= 0 or self.rtol <= 0:
            raise ConfigError("tolerances must be positive")


@dataclass
class Trajectory:
    """Accepted time samples. complete is False after an early stop."""

    times: List[float] = field(default_factory=list)
    states: List[np.ndarray] = field(default_factory=list)
    complete: bool = True
    reason: Optional[str] = None

    def append(self, t: float, y: np.ndarray) -> None:
        self.times.append(float(t))
        self.states.append(np.array(y, dtype=float))

    def array(self) -> np.ndarray:
        return np.vstack(self.states)

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def __len__(self) -> int:
        return len(self.times)


def _evaluate(rhs: Rhs, y: np.ndarray) -> np.ndarray:
    dy = np.asarray(rhs(y), dtype=float)
    if not np.all(np.isfinite(dy)):
        raise SingularStateError(f"right-hand side is not finite at {y}")
    return dy


class Integrator:
    """Base class: advance a state by one step of size h."""

    adaptive = False

    def __init__(self, rhs: Rhs) -> None:
        self.rhs = rhs

    def step(self, y: np.ndarray, h: float) -> Tuple[np.ndarray, float]:
        """Return the new state and an error estimate (0 for fixed-step)."""
        raise NotImplementedError


class RK4(Integrator):
    """Classical fourth order Runge-Kutta."""

    def step(self, y: np.ndarray, h: float) -> Tuple[np.ndarray, float]:
        k1 = _evaluate(self.rhs, y)
        k2 = _evaluate(self.rhs, y + 0.5 * h * k1)
        k3 = _evaluate(self.rhs, y + 0.5 * h * k2)
        k4 = _evaluate(self.rhs, y + h * k3)
        return y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4), 0.0


class RKF45(Integrator):
    """Runge-Kutta-Fehlberg 4(5) with six stages."""

    adaptive = True

    # stage coefficients; the last row is the 4th order update
    BT = {
        0: [1 / 4],
        1: [3 / 32, 9 / 32],
        2: [1932 / 2197, -7200 / 2197, 7296 / 2197],
        3: [439 / 216, -8, 3680 / 513, -845 / 4104],
        4: [-8 / 27, 2, -3544 / 2565, 1859 / 4104, -11 / 40],
        5: [25 / 216, 0, 1408 / 2565, 2197 / 4104, -1 / 5, 0],
    }
    # 5th order minus 4th order weights
    TR = [1 / 360, 0, -128 / 4275, -2197 / 75240, 1 / 50, 2 / 55]

    def __init__(
        self, rhs: Rhs, atol: float = DEFAULT_ATOL, rtol: float = DEFAULT_RTOL
    ):
        super().__init__(rhs)
        self.atol = atol
        self.rtol = rtol

    def step(self, y: np.ndarray, h: float) -> Tuple[np.ndarray, float]:
        ks = [_evaluate(self.rhs, y)]
        for stage in range(5):
            coeffs = self.BT[stage]
            y_stage = y + h * sum(c * k for c, k in zip(coeffs, ks))
            ks.append(_evaluate(self.rhs, y_stage))
        y_new = y + h * sum(c * k for c, k in zip(self.BT[5], ks))
        err = h * sum(c * k for c, k in zip(self.TR, ks))
        scale = self.atol + self.rtol * np.maximum(np.abs(y), np.abs(y_new))
        return y_new, float(np.max(np.abs(err) / scale))


def integrate(
    rhs: Rhs, state0: np.ndarray, cfg: IntegratorConfig
) -> Trajectory:
    """
    Integrate dy/dt = rhs(y) over cfg.t_span.

    Every accepted step is recorded. If the state leaves the domain of rhs
    (SingularStateError or a non-finite value) or rkf45 needs a step below
    MIN_STEP, the partial trajectory is returned with complete = False.
    """
    t, t_end = cfg.t_span
    y = np.array(state0, dtype=float)
    traj = Trajectory()
    traj.append(t, y)
    if cfg.method == "rk4":
        integrator: Integrator = RK4(rhs)
    else:
        integrator = RKF45(rhs, cfg.atol, cfg.rtol)
    h = min(cfg.step, cfg.max_step) if integrator.adaptive else cfg.step
    steps = 0
    while t < t_end:
        if steps >= MAX_STEPS:
            return _stop(traj, f"step limit {MAX_STEPS} reached at t={t!r}")
        # absorb round-off so the grid ends exactly at t_end
        last = t + h * (1.0 + 1e-9) >= t_end
        h_try = t_end - t if last else h
        try:
            y_new, err = integrator.step(y, h_try)
        except SingularStateError as e:
            if not integrator.adaptive:
                return _stop(traj, f"singular state near t={t!r}: {e}")
            err = np.inf
            y_new = y
        if err <= 1.0:
            t = t_end if last else t + h_try
            y = y_new
            traj.append(t, y)
            steps += 1
        else:
            logger.debug("Rejected step h=%r err=%r at t=%r", h_try, err, t)
        if integrator.adaptive:
            if np.isfinite(err) and err > 0.0:
                factor = min(5.0, max(0.2, 0.9 * err ** -0.2))
            elif np.isfinite(err):
                factor = 5.0
            else:
                factor = 0.25
            h = min(h_try * factor, cfg.max_step)
            if h < MIN_STEP and t < t_end:
                return _stop(traj, f"step size underflow at t={t!r}")
    return traj


def _stop(traj: Trajectory, reason: str) -> Trajectory:
    logger.warning("Integration stopped early: %s", reason)
    traj.complete = False
    traj.reason = reason
    return traj
