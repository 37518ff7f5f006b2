import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import constants as C
from scipy.special import jv

from darkspec.floquet import FloquetConfig, bessel_n_max, floquet_steady_state
from darkspec.liouvillian import TrapDrive, commutator, dissipator
from darkspec.thermo import (
    ThermoParams,
    bessel_orders,
    bessel_population,
    bessel_tail_bound,
    doppler_limit,
    doppler_power,
    energy_balance,
    phonon_rate_report,
    population_derivative,
    recoil_power,
    rf_power,
    stationary_temperature,
    temperature_expression,
    thermal_dephasing,
)
from darkspec.units import TWO_PI

P = ThermoParams()
GAMMA = P.gamma


def test_params_validation():
    with pytest.raises(ValueError):
        ThermoParams(gamma=0.0)
    with pytest.raises(ValueError):
        ThermoParams(c_rf=-1.0)


def test_thermal_dephasing_scaling_and_split():
    assert thermal_dephasing(0.0).gamma_d_total == 0.0
    a, b = thermal_dephasing(1e-4), thermal_dephasing(4e-4)
    assert b.gamma_d_total == pytest.approx(2 * a.gamma_d_total, rel=1e-12)
    assert a.share_uv + a.share_ir == pytest.approx(a.gamma_d_total, rel=1e-12)
    assert a.share_uv / a.share_ir == pytest.approx(866 / 397, rel=1e-12)
    with pytest.raises(ValueError):
        thermal_dephasing(-1.0)


def test_thermal_dephasing_value_at_half_millikelvin():
    # independent evaluation from CODATA constants, in MHz (not angular)
    dk = 2 * math.pi * (1 / 397e-9 - 1 / 866e-9)
    v = math.sqrt(C.k * 5e-4 / (2 * 40 * C.atomic_mass))
    expected_mhz = dk * v / (2 * math.pi) / 1e6
    got_mhz = thermal_dephasing(5e-4).gamma_d_total / TWO_PI
    assert got_mhz == pytest.approx(expected_mhz, rel=1e-9)
    assert got_mhz == pytest.approx(0.311, abs=1e-3)


@pytest.mark.parametrize("beta", np.linspace(0, 5, 11))
def test_bessel_normalization_and_oracle(beta):
    n = bessel_orders(beta)
    assert abs(np.sum(jv(n, beta) ** 2) - 1) < 1e-10
    assert bessel_tail_bound(beta) < 1e-12
    for k in (0, 1, 3, 7):
        assert jv(k, beta) == pytest.approx(float(mpmath.besselj(k, beta)), abs=1e-14)


def test_bessel_population_reduces_to_lorentzian():
    d = np.linspace(-80, 20, 7)
    lor = P.saturation / (d**2 + (GAMMA / 2) ** 2)
    assert np.allclose(bessel_population(d, 0.0), lor, rtol=1e-14)


def two_level_floquet(detuning, beta, rabi, gamma, omega_rf):
    """Two-level atom (ground 0, excited 1) with the detuning modulated by beta*W*cos(W t)."""
    H = np.array([[detuning, rabi / 2], [rabi / 2, 0.0]], dtype=complex)
    c = np.array([[0.0, 1.0], [0.0, 0.0]]) * math.sqrt(gamma)
    L0 = commutator(H) + dissipator(c)
    dL = commutator(np.diag([1.0, 0.0]))
    rho = floquet_steady_state(L0, dL, TrapDrive(omega_rf, beta), FloquetConfig(bessel_n_max(beta, 1e-12)))
    return rho[3].real


def test_bessel_population_against_two_level_floquet():
    rabi = 0.07 * GAMMA  # saturation 2 (rabi / gamma)^2 ~ 0.01
    p = ThermoParams(saturation=(rabi / 2) ** 2)
    d = -GAMMA / 2
    approx = bessel_population(d, 1.0, p)
    exact = two_level_floquet(d, 1.0, rabi, GAMMA, P.omega_rf)
    assert approx == pytest.approx(exact, rel=0.02)


@given(st.floats(-3, 1), st.floats(0, 5))
def test_population_derivative_finite_difference(x, beta):
    d = x * GAMMA
    h = 1e-5 * GAMMA
    fd = (bessel_population(d + h, beta) - bessel_population(d - h, beta)) / (2 * h)
    an = population_derivative(d, beta)
    # central-difference cancellation floor ~ eps * rho / h
    floor = 1e-14 * bessel_population(d, beta) / h
    assert abs(fd - an) <= 1e-6 * abs(an) + floor


def test_population_derivative_signs():
    assert population_derivative(0.0, 0.0) == 0.0
    assert population_derivative(-GAMMA / 2, 0.0) > 0


def test_doppler_power():
    d = -GAMMA / 2
    assert doppler_power(0.0, d, 0.0) == 0.0
    assert doppler_power(1e-3, d, 0.0) < 0
    assert doppler_power(3e-3, d, 0.7) == pytest.approx(3 * doppler_power(1e-3, d, 0.7), rel=1e-12)


def test_recoil_power():
    d = -GAMMA / 2
    assert recoil_power(d, 0.0, ThermoParams(saturation=0.0)) == 0.0
    assert recoil_power(d, 0.0) > 0
    ratio = recoil_power(d, 1.0) / recoil_power(d, 0.0)
    assert ratio == pytest.approx(bessel_population(d, 1.0) / bessel_population(d, 0.0), rel=1e-12)
    # (hbar k)^2/2m * Gamma * rho directly from constants
    k = 2 * math.pi / 397e-9
    ref = (C.hbar * k) ** 2 / (2 * 40 * C.atomic_mass) * GAMMA * 1e6 * bessel_population(d, 0.0)
    assert recoil_power(d, 0.0) == pytest.approx(ref, rel=1e-6)


def test_rf_power():
    assert rf_power(0.0, 8.4e-20) == 0.0
    assert rf_power(1.0, 8.4e-20) == pytest.approx(8.4e-20)
    assert rf_power(2.0, 1.0) == pytest.approx(4 * rf_power(1.0, 1.0))
    with pytest.raises(ValueError):
        rf_power(1.0, -1.0)


def test_doppler_limit():
    T = stationary_temperature(0.0, -GAMMA / 2, 0.0)
    assert T == pytest.approx(doppler_limit(), rel=1e-9)
    assert doppler_limit() == pytest.approx(C.hbar * GAMMA * 1e6 / (2 * C.k), rel=1e-6)
    assert doppler_limit() == pytest.approx(0.5375e-3, rel=1e-3)


def test_no_equilibrium_is_reported():
    assert stationary_temperature(0.0, +GAMMA / 2, 0.0) == math.inf
    # at the first zero of J0 with a small detuning the derivative flips sign
    assert stationary_temperature(2.4, -TWO_PI * 5.1, 0.0) == math.inf
    with pytest.raises(ValueError):
        stationary_temperature(0.0, -GAMMA / 2, -1.0)


@given(st.floats(0, 1.2), st.floats(-3, -0.1), st.floats(0, 2e-19))
def test_energy_balance_vanishes_at_stationary_temperature(beta, x, c_rf):
    d = x * GAMMA
    T0 = stationary_temperature(beta, d, c_rf)
    if not math.isfinite(T0):
        return
    total = energy_balance(T0, beta, d, c_rf)
    scale = abs(doppler_power(T0, d, beta))
    assert abs(total) <= 1e-9 * scale


def test_continuity_in_beta():
    b = np.linspace(0, 1.2, 241)
    T = stationary_temperature(b, -TWO_PI * 11.7, 8.4e-20)
    assert np.all(np.isfinite(T))
    assert np.max(np.abs(np.diff(T))) / np.max(T) < 0.05


def test_rf_curve_rises_steeply():
    T = stationary_temperature(np.array([0.0, 0.5, 1.0, 1.3]), -TWO_PI * 11.7, 8.4e-20)
    assert np.all(np.diff(T) > 0)
    assert T[3] > 10 * T[0]


def test_temperature_expression_matches_where_defined():
    b = np.array([0.0, 0.5, 1.0])
    assert np.allclose(temperature_expression(b, -GAMMA / 2, 1e-20), stationary_temperature(b, -GAMMA / 2, 1e-20))


def test_phonon_rate_report():
    assert phonon_rate_report(0.0).rate == 0.0
    assert phonon_rate_report(1.0).rate == pytest.approx(0.20)
    assert phonon_rate_report(2.0).rate == pytest.approx(0.80)
    r = phonon_rate_report(1.0, c_rf=8.4e-20)
    assert r.naive_rate == pytest.approx(8.4e-20 / (C.hbar * TWO_PI * 1e6), rel=1e-6)
    assert r.naive_rate > 1e6 * r.rate
    with pytest.raises(ValueError):
        phonon_rate_report(1.0, secular=0.0)
