"""Brute-force time integration of d rho/dt = (L0 + beta*Omega*dL*cos(Omega t)) rho.

Classic fixed-step RK4. Because the equation is linear and periodic, the
RK4 update over one step is a fixed matrix, and the map over one RF period
is the ordered product of those matrices. The transient is skipped by
raising the one-period map to an integer power; the recorded window is
stepped explicitly. The numbers are exactly those of stepping RK4 through
the whole run (up to round-off), only cheaper.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .liouvillian import TrapDrive, identity_vector, vec


class StepSizeError(RuntimeError):
    """Trace drift along a trajectory exceeded the allowed bound."""


@dataclass(frozen=True)
class PropagationConfig:
    """Integration settings.

    steps_per_period fixes dt = (2 pi / Omega_RF) / steps_per_period; it
    must exceed 20. t_transient (us) is rounded up to whole RF periods.
    """

    steps_per_period: int = 400
    t_transient: float = 60.0
    n_periods_average: int = 1

    def __post_init__(self):
        if self.steps_per_period <= 20:
            raise ValueError("steps_per_period must exceed 20 (dt < T_RF/20)")
        if self.t_transient < 0:
            raise ValueError("t_transient must be >= 0")
        if self.n_periods_average < 1:
            raise ValueError("n_periods_average must be >= 1")

    def dt(self, drive: TrapDrive) -> float:
        return 2 * np.pi / drive.omega_rf / self.steps_per_period


@dataclass
class Trajectory:
    times: np.ndarray  # (K,) us
    states: np.ndarray  # (K, 64)

    def populations(self) -> np.ndarray:
        d = int(round(np.sqrt(self.states.shape[-1])))
        return np.real(self.states[:, :: d + 1])


def default_initial_state(d: int = 8) -> np.ndarray:
    """Equal mixture of the two S sublevels."""
    rho = np.zeros((d, d), dtype=complex)
    rho[0, 0] = rho[1, 1] = 0.5
    return vec(rho)


def _rk4_step_matrices(L0, dL, drive, cfg):
    h = cfg.dt(drive)
    w = drive.omega_rf
    amp = drive.beta * w
    eye = np.eye(L0.shape[0])

    def A(t):
        return L0 + amp * np.cos(w * t) * dL

    steps = []
    for k in range(cfg.steps_per_period):
        t = k * h
        a1, a2, a4 = A(t), A(t + h / 2), A(t + h)
        k1 = a1
        k2 = a2 @ (eye + 0.5 * h * k1)
        k3 = a2 @ (eye + 0.5 * h * k2)
        k4 = a4 @ (eye + h * k3)
        steps.append(eye + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4))
    return steps


def propagate(
    L0: np.ndarray,
    dL: np.ndarray,
    drive: TrapDrive,
    rho_init: np.ndarray | None = None,
    cfg: PropagationConfig = PropagationConfig(),
) -> Trajectory:
    """Integrate from t = 0 and record every step of the averaging window.

    The window starts after ceil(t_transient / T_RF) periods and covers
    ``cfg.n_periods_average`` periods, endpoints included.
    """
    L0 = np.asarray(L0, dtype=complex)
    rho = default_initial_state() if rho_init is None else np.asarray(rho_init, dtype=complex)
    idv = identity_vector(int(round(np.sqrt(rho.size))))
    trace0 = idv @ rho
    period = 2 * np.pi / drive.omega_rf
    steps = _rk4_step_matrices(L0, dL, drive, cfg)
    n_transient = int(np.ceil(cfg.t_transient / period - 1e-9))
    if n_transient:
        one_period = np.eye(L0.shape[0], dtype=complex)
        for S in steps:
            one_period = S @ one_period
        rho = np.linalg.matrix_power(one_period, n_transient) @ rho

    n_rec = cfg.steps_per_period * cfg.n_periods_average
    states = np.empty((n_rec + 1, rho.size), dtype=complex)
    states[0] = rho
    for k in range(n_rec):
        rho = steps[k % cfg.steps_per_period] @ rho
        states[k + 1] = rho
    times = n_transient * period + np.arange(n_rec + 1) * cfg.dt(drive)

    drift = np.max(np.abs(states @ idv - trace0))
    if drift > 1e-6:
        raise StepSizeError(f"trace drift {drift:.2e} exceeds 1e-6; reduce the step size")
    return Trajectory(times, states)


def period_average(traj: Trajectory, drive: TrapDrive) -> np.ndarray:
    """Arithmetic mean over the recorded window, which must span whole periods.

    The endpoint sample is excluded so each phase of the drive is weighted
    once.
    """
    t = traj.times
    if len(t) < 2:
        raise ValueError("trajectory too short to average")
    period = 2 * np.pi / drive.omega_rf
    n_per = (t[-1] - t[0]) / period
    if abs(n_per - round(n_per)) > 1e-6 or round(n_per) < 1:
        raise ValueError(f"trajectory spans {n_per:.6f} RF periods, not an integer")
    dt = np.diff(t)
    if np.max(np.abs(dt - dt[0])) > 1e-9 * period:
        raise ValueError("trajectory samples are not uniformly spaced")
    return traj.states[:-1].mean(axis=0)


def time_averaged_state(L0, dL, drive, cfg=PropagationConfig(), rho_init=None) -> np.ndarray:
    return period_average(propagate(L0, dL, drive, rho_init, cfg), drive)
