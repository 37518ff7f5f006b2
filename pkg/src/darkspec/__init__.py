"""Micromotion-modulated dark-resonance spectra of a trapped 40Ca+ ion.

Frequencies are angular and in rad/us inside the package; files and the
command line use MHz.
"""

from .atomic import AtomicSystem, LaserField, MagneticField, build_hamiltonian
from .floquet import FloquetConfig, SteadyStateError, floquet_steady_state
from .liouvillian import TrapDrive, build_dL, build_L0
from .spectra import IonModel, Spectrum, SpectrumSetup, multi_ion_spectrum, scan_spectrum, setup_spectrum

__version__ = "0.1.0"

__all__ = [
    "AtomicSystem",
    "LaserField",
    "MagneticField",
    "build_hamiltonian",
    "FloquetConfig",
    "SteadyStateError",
    "floquet_steady_state",
    "TrapDrive",
    "build_dL",
    "build_L0",
    "IonModel",
    "Spectrum",
    "SpectrumSetup",
    "multi_ion_spectrum",
    "scan_spectrum",
    "setup_spectrum",
]
