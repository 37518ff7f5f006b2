"""Thermal effects: Doppler dephasing of the dark resonances and the
cooling/heating balance of a micromotion-modulated two-level ion.

Frequencies follow the package convention (rad/us); powers are in J/s and
temperatures in K. The cooling model is a two-level reduction on the UV
transition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import jv

from .atomic import AtomicSystem
from .units import AMU, HBAR, K_B, TWO_PI

_PER_US = 1e6  # rad/us -> rad/s


@dataclass(frozen=True)
class DephasingSplit:
    gamma_d_total: float  # rad/us
    share_uv: float
    share_ir: float


@dataclass(frozen=True)
class ThermoParams:
    """Two-level cooling model on the UV line.

    saturation is the prefactor (mu E0 / 2 hbar)^2 in rad^2/us^2. The
    default corresponds to a UV Rabi frequency of 2 pi x 10 MHz.
    """

    gamma: float = TWO_PI * 22.4
    saturation: float = (TWO_PI * 10.0 / 2) ** 2
    detuning: float = -TWO_PI * 22.4 / 2
    omega_rf: float = TWO_PI * 22.1
    c_rf: float = 0.0
    mass: float = 40 * AMU
    k_uv: float = TWO_PI / 397e-9
    secular: float = TWO_PI * 1e6

    def __post_init__(self):
        if not (self.gamma > 0 and self.mass > 0 and self.k_uv > 0):
            raise ValueError("gamma, mass and k_uv must be positive")
        if self.saturation < 0 or self.c_rf < 0:
            raise ValueError("saturation and c_rf must be non-negative")


def thermal_dephasing(T: float, sys: AtomicSystem = AtomicSystem()) -> DephasingSplit:
    """Doppler dephasing |k_IR - k_UV| sqrt(k_B T / 2m) for co-propagating
    beams, split between the lasers in proportion to their wavenumbers.
    """
    if T < 0:
        raise ValueError("temperature must be >= 0")
    k_uv = TWO_PI / (sys.lambda_UV * 1e-9)
    k_ir = TWO_PI / (sys.lambda_IR * 1e-9)
    total = abs(k_ir - k_uv) * math.sqrt(K_B * T / (2 * sys.mass * AMU)) / _PER_US
    return DephasingSplit(total, total * k_uv / (k_uv + k_ir), total * k_ir / (k_uv + k_ir))


def bessel_orders(beta: float) -> np.ndarray:
    """Sideband orders kept in the Bessel sums, |n| <= max(20, 4 beta)."""
    n_max = max(20, int(math.ceil(4 * beta)))
    return np.arange(-n_max, n_max + 1)


def bessel_tail_bound(beta: float) -> float:
    """Upper bound on sum_{|n| > N} J_n(beta)^2 for the truncation used here.

    Uses |J_n(x)| <= (x/2)^n / n!, summed as a geometric series (ratio
    < 1/4 for n > 4 beta).
    """
    N = int(bessel_orders(beta)[-1])
    first = ((beta / 2) ** (N + 1) / math.factorial(N + 1)) ** 2
    ratio = (beta / (2 * (N + 2))) ** 2
    return 2 * first / (1 - ratio)


def _lorentz_terms(detuning, beta, p: ThermoParams):
    n = bessel_orders(beta)
    w = jv(n, beta) ** 2
    x = np.asarray(detuning, dtype=float)[..., None] + n * p.omega_rf
    den = x**2 + (p.gamma / 2) ** 2
    return w, x, den


def bessel_population(detuning, beta: float, p: ThermoParams = ThermoParams()):
    """Low-saturation excited population of a micromotion-modulated two-level atom.

    rho_ee = s * sum_n J_n(beta)^2 / ((Delta + n Omega_RF)^2 + (Gamma/2)^2)

    Valid only while rho_ee << 1; nothing checks that here.
    """
    w, x, den = _lorentz_terms(detuning, beta, p)
    return p.saturation * np.sum(w / den, axis=-1)


def population_derivative(detuning, beta: float, p: ThermoParams = ThermoParams()):
    """d rho_ee / d Delta in us/rad (term-by-term derivative of the Bessel sum)."""
    w, x, den = _lorentz_terms(detuning, beta, p)
    return p.saturation * np.sum(-2 * x * w / den**2, axis=-1)


def doppler_power(T, detuning, beta: float, p: ThermoParams = ThermoParams()):
    """Laser cooling power -hbar k^2 Gamma (d rho/d Delta) k_B T / m, in J/s."""
    gd = p.gamma * population_derivative(detuning, beta, p)  # dimensionless
    return -HBAR * p.k_uv**2 * gd * K_B * np.asarray(T) / p.mass


def recoil_power(detuning, beta: float, p: ThermoParams = ThermoParams()):
    """Recoil heating (hbar k)^2 / 2m * Gamma * rho_ee, in J/s."""
    rate = p.gamma * _PER_US * bessel_population(detuning, beta, p)
    return (HBAR * p.k_uv) ** 2 / (2 * p.mass) * rate


def rf_power(beta, c_rf: float):
    """RF heating C_RF * beta^2, in J/s."""
    if c_rf < 0:
        raise ValueError("c_rf must be >= 0")
    return c_rf * np.asarray(beta) ** 2


def temperature_expression(beta, detuning, c_rf: float, p: ThermoParams = ThermoParams()):
    """Closed-form balance temperature (K), without the cooling-condition check.

    T0 = (hbar/k_B) rho/rho' + C_RF beta^2 / ((hbar k^2 Gamma k_B / m) rho')

    The value is meaningless (negative or divergent) where rho' <= 0; use
    :func:`stationary_temperature` for physical results.
    """
    beta = np.asarray(beta, dtype=float)
    out = np.empty(beta.shape)
    for idx, b in np.ndenumerate(beta):
        rho = bessel_population(detuning, b, p)
        drho = population_derivative(detuning, b, p)
        first = HBAR / K_B * rho / drho * _PER_US
        second = c_rf * b**2 / (HBAR * p.k_uv**2 * p.gamma * K_B / p.mass * drho)
        out[idx] = first + second
    return out if out.ndim else float(out)


def stationary_temperature(beta, detuning, c_rf: float, p: ThermoParams = ThermoParams()):
    """Temperature at which Doppler cooling balances recoil and RF heating.

    Where the laser heats instead of cooling (d rho/d Delta <= 0) there is no
    equilibrium and ``math.inf`` is returned for that beta.
    """
    if c_rf < 0:
        raise ValueError("c_rf must be >= 0")
    beta_arr = np.asarray(beta, dtype=float)
    drho = np.vectorize(lambda b: population_derivative(detuning, b, p))(beta_arr)
    T = np.where(drho > 0, temperature_expression(beta_arr, detuning, c_rf, p), math.inf)
    return T if T.ndim else float(T)


def energy_balance(T, beta: float, detuning, c_rf: float, p: ThermoParams = ThermoParams()):
    """Net heating rate dE/dt (J/s) at temperature T.

    Recoil enters twice, once for absorption and once for emission, which is
    what makes the balance temperature coincide with
    :func:`stationary_temperature`.
    """
    return (
        doppler_power(T, detuning, beta, p)
        + 2 * recoil_power(detuning, beta, p)
        + rf_power(beta, c_rf)
    )


def doppler_limit(p: ThermoParams = ThermoParams()) -> float:
    """hbar Gamma / 2 k_B in K."""
    return HBAR * p.gamma * _PER_US / (2 * K_B)


@dataclass(frozen=True)
class PhononRateReport:
    rate: float  # phonons/s
    rate_coefficient: float
    secular: float  # rad/s
    naive_rate: float | None  # C_RF beta^2 / (hbar omega), for reference only


def phonon_rate_report(
    beta: float,
    c_rf: float | None = None,
    secular: float = TWO_PI * 1e6,
    rate_coefficient: float = 0.20,
) -> PhononRateReport:
    """RF heating expressed as a phonon rate r * beta^2.

    ``rate_coefficient`` (phonons/s at beta = 1) is configuration, quoted for
    a radial mode at 2 pi x 1 MHz. The energy-to-phonon division
    C_RF beta^2 / (hbar omega) is reported alongside but does not reproduce
    that coefficient, so it is not used as the rate.
    """
    if not secular > 0:
        raise ValueError("secular frequency must be positive")
    naive = None if c_rf is None else c_rf * beta**2 / (HBAR * secular)
    return PhononRateReport(rate_coefficient * beta**2, rate_coefficient, secular, naive)
