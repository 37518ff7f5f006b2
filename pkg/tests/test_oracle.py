import numpy as np
import pytest

from darkspec.floquet import FloquetConfig, bessel_n_max, floquet_steady_state, steady_state_unmodulated
from darkspec.liouvillian import TrapDrive, identity_vector, unvec, vec
from darkspec.oracle import (
    PropagationConfig,
    StepSizeError,
    Trajectory,
    default_initial_state,
    period_average,
    propagate,
    time_averaged_state,
)

from conftest import make_L0

DRIVE1 = TrapDrive(beta=1.0)


def test_config_validation():
    with pytest.raises(ValueError):
        PropagationConfig(steps_per_period=20)
    with pytest.raises(ValueError):
        PropagationConfig(t_transient=-1.0)
    with pytest.raises(ValueError):
        PropagationConfig(n_periods_average=0)
    cfg = PropagationConfig()
    assert cfg.dt(DRIVE1) < 2 * np.pi / DRIVE1.omega_rf / 20


def test_default_initial_state():
    rho = unvec(default_initial_state())
    assert rho[0, 0] == rho[1, 1] == 0.5
    assert np.trace(rho) == 1


def test_stationary_state_stays_put(dL):
    L0 = make_L0(det_ir=-12.0)
    rho = steady_state_unmodulated(L0)
    traj = propagate(L0, dL, TrapDrive(beta=0.0), rho, PropagationConfig(t_transient=0.0, n_periods_average=3))
    assert np.max(np.abs(traj.states - rho)) < 1e-9


def test_spontaneous_decay_rate(dL, system):
    L0 = make_L0(0.0, rabi_uv=0.0, rabi_ir=0.0, det_uv=0.0, det_ir=0.0)
    rho = np.zeros((8, 8), dtype=complex)
    rho[2, 2] = 1.0
    traj = propagate(L0, dL, TrapDrive(beta=0.0), vec(rho), PropagationConfig(t_transient=0.0, n_periods_average=1))
    p = traj.populations()[:, 2:4].sum(axis=1)
    rate = -np.polyfit(traj.times, np.log(p), 1)[0]
    assert rate == pytest.approx(system.gamma_total, rel=1e-4)


def test_periodic_after_transient(dL):
    L0 = make_L0(det_ir=-20.0)
    traj = propagate(L0, dL, DRIVE1, cfg=PropagationConfig(n_periods_average=2))
    n = 400
    assert np.max(np.abs(traj.populations()[:n] - traj.populations()[n : 2 * n])) < 1e-7


def test_trace_and_hermiticity_along_trajectory(dL):
    L0 = make_L0(det_ir=5.0, lw_uv=0.2)
    traj = propagate(L0, dL, TrapDrive(beta=2.0), cfg=PropagationConfig(t_transient=1.0))
    rho = unvec(traj.states)
    assert np.max(np.abs(np.trace(rho, axis1=1, axis2=2) - 1)) < 1e-8
    assert np.max(np.abs(rho - np.swapaxes(rho.conj(), 1, 2))) < 1e-10


def test_trace_drift_is_reported(dL):
    L0 = make_L0()
    bad = L0.copy()
    bad[0, 0] -= 1.0  # leaks trace
    with pytest.raises(StepSizeError):
        propagate(bad, dL, DRIVE1, cfg=PropagationConfig(t_transient=0.1))


def test_rk4_fourth_order(dL):
    """Halving the step cuts the error against a fine reference by about 16."""
    L0 = make_L0(det_ir=-20.0)
    drive = TrapDrive(beta=1.0)

    def end_state(steps):
        return propagate(L0, dL, drive, cfg=PropagationConfig(steps, 0.5)).states[-1]

    ref = end_state(1600)
    e1 = np.max(np.abs(end_state(50) - ref))
    e2 = np.max(np.abs(end_state(100) - ref))
    assert 12 < e1 / e2 < 20


def test_period_average_constant_and_cosine():
    drive = TrapDrive()
    period = 2 * np.pi / drive.omega_rf
    t = np.linspace(0, 2 * period, 201)
    const = np.tile(np.arange(64.0), (201, 1))
    assert np.allclose(period_average(Trajectory(t, const), drive), np.arange(64.0))
    wave = 0.3 + 0.2 * np.cos(drive.omega_rf * t)[:, None] * np.ones((1, 64))
    assert np.allclose(period_average(Trajectory(t, wave), drive), 0.3, atol=1e-14)


def test_period_average_rejects_partial_periods():
    drive = TrapDrive()
    period = 2 * np.pi / drive.omega_rf
    t = np.linspace(0, 1.5 * period, 100)
    with pytest.raises(ValueError):
        period_average(Trajectory(t, np.zeros((100, 64))), drive)
    t2 = np.concatenate([np.linspace(0, 0.5 * period, 10), np.linspace(0.6 * period, period, 10)])
    with pytest.raises(ValueError):
        period_average(Trajectory(t2, np.zeros((20, 64))), drive)
    with pytest.raises(ValueError):
        period_average(Trajectory(t[:1], np.zeros((1, 64))), drive)


def test_matches_floquet_at_beta_one(dL):
    L0 = make_L0(det_ir=-22.0)
    avg = time_averaged_state(L0, dL, DRIVE1)
    flo = floquet_steady_state(L0, dL, DRIVE1, FloquetConfig(bessel_n_max(1.0)))
    assert np.max(np.abs(avg[::9] - flo[::9])) < 1e-6
    assert identity_vector() @ avg == pytest.approx(1.0, abs=1e-9)


@pytest.mark.slow
@pytest.mark.parametrize("beta", [2.0, 4.0])
def test_matches_floquet_with_bessel_truncation(dL, beta):
    """With n_max from the Bessel tail the 1e-6 agreement holds at large beta."""
    drive = TrapDrive(DRIVE1.omega_rf, beta)
    for det_ir in (-30.0, -10.0, 15.0):
        L0 = make_L0(det_ir=det_ir)
        avg = time_averaged_state(L0, dL, drive)
        flo = floquet_steady_state(L0, dL, drive, FloquetConfig.for_beta(beta))
        assert np.max(np.abs(avg[::9] - flo[::9])) < 1e-6
