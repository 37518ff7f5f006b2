"""Unit conventions.

Internally every frequency is an angular frequency in rad/us, so a value
quoted as ``f`` MHz in files or on the command line is stored as
``2*pi*f``. Times are in microseconds.
"""

from __future__ import annotations

import numpy as np
from scipy import constants

TWO_PI = 2.0 * np.pi

#: Bohr magneton in rad/us per gauss (mu_B / h = 1.39962 MHz/G).
MU_B = TWO_PI * constants.physical_constants["Bohr magneton in Hz/T"][0] * 1e-4 * 1e-6

AMU = constants.atomic_mass
HBAR = constants.hbar
K_B = constants.k


def mhz_to_angular(f):
    """MHz (cyclic) -> rad/us."""
    return TWO_PI * np.asarray(f, dtype=float) if np.ndim(f) else TWO_PI * float(f)


def angular_to_mhz(w):
    """rad/us -> MHz (cyclic)."""
    return np.asarray(w, dtype=float) / TWO_PI if np.ndim(w) else float(w) / TWO_PI
