"""Eight-level S1/2 - P1/2 - D3/2 model of a 40Ca+ ion.

Level index convention (fixed, used by every other module)::

    0, 1      S1/2   m = -1/2, +1/2
    2, 3      P1/2   m = -1/2, +1/2
    4 .. 7    D3/2   m = -3/2, -1/2, +1/2, +3/2

Rotating frame: the P manifold is the energy reference. A laser of angular
frequency w_L driving a transition at w_0 has detuning ``Delta = w_L - w_0``
(red detuning is negative); the lower manifold it couples then sits at
``+Delta`` on the diagonal of the Hamiltonian, on top of its Zeeman shifts.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import factorial, isclose, sqrt

import numpy as np

from .units import MU_B, TWO_PI

N_LEVELS = 8
S_LEVELS = (0, 1)
P_LEVELS = (2, 3)
D_LEVELS = (4, 5, 6, 7)

#: magnetic quantum number of every level, in index order
M_VALUES = np.array([-0.5, 0.5, -0.5, 0.5, -1.5, -0.5, 0.5, 1.5])

_J = {"S": Fraction(1, 2), "P": Fraction(1, 2), "D": Fraction(3, 2)}
_LEVELS_OF = {"S": S_LEVELS, "P": P_LEVELS, "D": D_LEVELS}


@dataclass(frozen=True)
class AtomicSystem:
    """Level structure and decay constants (frequencies in rad/us)."""

    mass: float = 40.0
    gamma_total: float = TWO_PI * 22.4
    branching_S: float = 0.94
    branching_D: float = 0.06
    g_S: float = 2.0
    g_P: float = 2.0 / 3.0
    g_D: float = 4.0 / 5.0
    lambda_UV: float = 397.0
    lambda_IR: float = 866.0

    def __post_init__(self):
        if not isclose(self.branching_S + self.branching_D, 1.0, rel_tol=0.0, abs_tol=1e-12):
            raise ValueError("branching ratios must sum to 1")
        if not self.gamma_total > 0:
            raise ValueError("gamma_total must be positive")
        if not all(np.isfinite([self.g_S, self.g_P, self.g_D])):
            raise ValueError("g-factors must be finite")
        if self.mass <= 0 or self.lambda_UV <= 0 or self.lambda_IR <= 0:
            raise ValueError("mass and wavelengths must be positive")

    @property
    def n_levels(self) -> int:
        return N_LEVELS

    @property
    def wavelength_ratio(self) -> float:
        """lambda_UV / lambda_IR, i.e. beta_IR / beta_UV for co-propagating beams."""
        return self.lambda_UV / self.lambda_IR


@dataclass(frozen=True)
class LaserField:
    """A laser driving either the UV (S-P) or the IR (D-P) transition.

    ``polarization`` holds the (sigma-, sigma+) amplitudes in the magnetic
    eigenbasis. The default is linear polarization orthogonal to B.
    """

    rabi: float
    detuning: float
    linewidth: float = 0.0
    wavelength: float = 397.0
    polarization: tuple[complex, complex] = (1 / sqrt(2), 1 / sqrt(2))
    label: str = "UV"

    def __post_init__(self):
        if self.label not in ("UV", "IR"):
            raise ValueError(f"label must be 'UV' or 'IR', got {self.label!r}")
        if self.rabi < 0 or self.linewidth < 0:
            raise ValueError("rabi and linewidth must be non-negative")
        _check_polarization(self.polarization)


@dataclass(frozen=True)
class MagneticField:
    magnitude: float = 4.0  # gauss

    def __post_init__(self):
        if self.magnitude < 0:
            raise ValueError("magnetic field magnitude must be >= 0")


def _check_polarization(pol):
    norm = abs(pol[0]) ** 2 + abs(pol[1]) ** 2
    if abs(norm - 1.0) > 1e-12:
        raise ValueError(f"polarization not normalized: |s-|^2 + |s+|^2 = {norm!r}")


def clebsch_gordan(j1, m1, j2, m2, j, m) -> float:
    """<j1 m1; j2 m2 | j m> from the Racah formula.

    Arguments may be ints, floats or Fractions; half-integers are handled
    exactly.
    """
    j1, m1, j2, m2, j, m = (Fraction(x).limit_denominator(2) for x in (j1, m1, j2, m2, j, m))
    if m1 + m2 != m or abs(m1) > j1 or abs(m2) > j2 or abs(m) > j:
        return 0.0
    if j < abs(j1 - j2) or j > j1 + j2:
        return 0.0

    def f(x):
        assert x.denominator == 1
        return factorial(int(x))

    pre = (2 * j + 1) * f(j1 + j2 - j) * f(j1 - j2 + j) * f(-j1 + j2 + j) / f(j1 + j2 + j + 1)
    pre *= f(j + m) * f(j - m) * f(j1 - m1) * f(j1 + m1) * f(j2 - m2) * f(j2 + m2)
    total = 0.0
    for k in range(0, int(j1 + j2 + j) + 1):
        args = (
            k,
            j1 + j2 - j - k,
            j1 - m1 - k,
            j2 + m2 - k,
            j - j2 + m1 + k,
            j - j1 - m2 + k,
        )
        if any(a < 0 for a in args):
            continue
        den = 1
        for a in args:
            den *= f(Fraction(a))
        total += (-1) ** k / den
    return float(sqrt(pre) * total)


@lru_cache(maxsize=None)
def _transition_cg(lower: str, q: int) -> np.ndarray:
    """Matrix of <J_lower m; 1 q | 1/2 m'> placed at [P(m'), lower(m)] (read-only)."""
    out = np.zeros((N_LEVELS, N_LEVELS))
    jl = _J[lower]
    for i in _LEVELS_OF[lower]:
        for p in P_LEVELS:
            out[p, i] = clebsch_gordan(jl, M_VALUES[i], 1, q, _J["P"], M_VALUES[p])
    out.flags.writeable = False
    return out


def zeeman_shifts(sys: AtomicSystem, B: MagneticField) -> np.ndarray:
    """Linear Zeeman shift g * mu_B * B * m of every level (rad/us)."""
    g = np.array([sys.g_S] * 2 + [sys.g_P] * 2 + [sys.g_D] * 4)
    return g * MU_B * B.magnitude * M_VALUES


def coupling_operators(sys: AtomicSystem | None = None) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    """Raising operators for the laser couplings.

    Returns ``{"UV": (A_minus, A_plus), "IR": (A_minus, A_plus)}`` where
    ``A_q[p, l]`` is the Clebsch-Gordan coefficient for absorbing a photon
    of helicity q on lower level l and landing in P level p (m_p = m_l + q).
    Coefficients are divided by the largest |CG| of their transition family
    (all q, including pi), so the strongest sigma line of each transition has
    amplitude 1 and ``LaserField.rabi`` refers to that line.
    """
    out = {}
    for label, lower in (("UV", "S"), ("IR", "D")):
        mats = {q: _transition_cg(lower, q) for q in (-1, 0, 1)}
        scale = max(np.abs(m).max() for m in mats.values())
        out[label] = (mats[-1] / scale, mats[1] / scale)
    return out


def decay_operators(sys: AtomicSystem) -> list[np.ndarray]:
    """Jump operators for spontaneous emission P -> S and P -> D.

    One operator per (manifold, photon helicity q). Each carries
    ``sqrt(branching * gamma_total)`` times the unnormalized CG coefficients,
    whose squares summed over the final Zeeman levels of each P sublevel
    equal 1, so every P sublevel decays at the total rate gamma_total.
    """
    ops = []
    for lower, branching in (("S", sys.branching_S), ("D", sys.branching_D)):
        rate = branching * sys.gamma_total
        for q in (-1, 0, 1):
            # emission operator |lower><P| is the transpose of the absorption CG matrix
            ops.append(np.sqrt(rate) * _transition_cg(lower, q).T)
    return ops


def decay_branching(sys: AtomicSystem) -> np.ndarray:
    """Channel rates as an 8x8 array ``rates[final, P level]`` (rad/us)."""
    rates = np.zeros((N_LEVELS, N_LEVELS))
    for op in decay_operators(sys):
        rates += np.abs(op) ** 2
    return rates


def projector(manifold: str) -> np.ndarray:
    """Diagonal projector onto ``"S"``, ``"P"`` or ``"D"``."""
    out = np.zeros((N_LEVELS, N_LEVELS))
    idx = list(_LEVELS_OF[manifold])
    out[idx, idx] = 1.0
    return out


def build_hamiltonian(
    sys: AtomicSystem, uv: LaserField, ir: LaserField, B: MagneticField
) -> np.ndarray:
    """Rotating-wave Hamiltonian in rad/us (hbar = 1)."""
    for label, laser in (("UV", uv), ("IR", ir)):
        if laser.label != label:
            raise ValueError(f"expected a {label} laser, got label {laser.label!r}")
        _check_polarization(laser.polarization)
    H = np.diag(zeeman_shifts(sys, B)).astype(complex)
    H += uv.detuning * projector("S") + ir.detuning * projector("D")
    ops = coupling_operators(sys)
    for laser in (uv, ir):
        a_minus, a_plus = ops[laser.label]
        eps_minus, eps_plus = laser.polarization
        raising = 0.5 * laser.rabi * (eps_minus * a_minus + eps_plus * a_plus)
        H += raising + raising.conj().T
    return H
