"""Fluorescence spectra: IR-detuning scans at fixed UV detuning."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.signal import argrelmin

from .atomic import (
    AtomicSystem,
    LaserField,
    MagneticField,
    P_LEVELS,
    build_hamiltonian,
    coupling_operators,
    projector,
    zeeman_shifts,
)
from .floquet import FloquetConfig, SteadyStateError, floquet_steady_state
from .liouvillian import TrapDrive, build_dL, build_L0, commutator, unvec
from .thermo import thermal_dephasing
from .units import angular_to_mhz, mhz_to_angular


@dataclass
class Spectrum:
    """Fluorescence (or counts) versus IR detuning in MHz."""

    detunings: np.ndarray
    values: np.ndarray
    sigmas: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.detunings = np.asarray(self.detunings, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.detunings.ndim != 1 or self.values.shape != self.detunings.shape:
            raise ValueError("detunings and values must be 1-d arrays of equal length")
        if len(self.detunings) > 1 and np.any(np.diff(self.detunings) <= 0):
            raise ValueError("detunings must be strictly increasing")
        if self.sigmas is not None:
            self.sigmas = np.asarray(self.sigmas, dtype=float)
            if self.sigmas.shape != self.detunings.shape:
                raise ValueError("sigmas must match detunings in length")
            if np.any(self.sigmas <= 0):
                raise ValueError("sigmas must be strictly positive")

    def __len__(self):
        return len(self.detunings)


@dataclass(frozen=True)
class IonModel:
    beta: float = 0.0
    temperature: float = 0.0  # K
    weight: float = 1.0

    def __post_init__(self):
        if self.beta < 0 or self.temperature < 0:
            raise ValueError("beta and temperature must be >= 0")
        if not self.weight > 0:
            raise ValueError("weight must be positive")


@dataclass(frozen=True)
class SpectrumSetup:
    """Everything shared by the ions of a scan except beta and T.

    ``ir.detuning`` is ignored; the scan grid sets it.
    """

    system: AtomicSystem = AtomicSystem()
    uv: LaserField = LaserField(rabi=mhz_to_angular(10.0), detuning=mhz_to_angular(-25.0), wavelength=397.0, label="UV")
    ir: LaserField = LaserField(rabi=mhz_to_angular(10.0), detuning=0.0, wavelength=866.0, label="IR")
    field: MagneticField = MagneticField(4.0)
    omega_rf: float = mhz_to_angular(22.1)
    floquet: FloquetConfig = FloquetConfig()


def fluorescence(rho0: np.ndarray) -> np.ndarray | float:
    """Summed P-level population (proportional to the scattered UV light)."""
    rho = unvec(np.asarray(rho0))
    pops = np.diagonal(rho, axis1=-2, axis2=-1)[..., list(P_LEVELS)].sum(axis=-1)
    if np.max(np.abs(pops.imag)) > 1e-9:
        raise ValueError("P populations have a non-negligible imaginary part")
    out = pops.real
    return float(out) if out.ndim == 0 else out


def liouvillian_grid(sys, uv, ir, B, grid_mhz, temperature: float = 0.0) -> np.ndarray:
    """L0 for every IR detuning in ``grid_mhz`` (ignores ``ir.detuning``), stacked.

    L0 is affine in the IR detuning, so it is built once and shifted by
    Delta * (-i[P_D, .]).
    """
    split = thermal_dephasing(temperature, sys)
    ir_0 = replace(ir, detuning=0.0)
    base = build_L0(build_hamiltonian(sys, uv, ir_0, B), sys, uv, ir_0, split.share_uv, split.share_ir)
    slope = commutator(projector("D"))
    return base + mhz_to_angular(np.asarray(grid_mhz))[:, None, None] * slope


def scan_spectrum(
    sys: AtomicSystem,
    uv: LaserField,
    ir: LaserField,
    B: MagneticField,
    drive: TrapDrive,
    grid: Sequence[float],
    temperature: float = 0.0,
    cfg: FloquetConfig = FloquetConfig(),
) -> Spectrum:
    """Fluorescence of one ion for every IR detuning in ``grid`` (MHz).

    Thermal dephasing from ``temperature`` (K) is added to the laser
    linewidths. Each grid point is solved independently, so the result does
    not depend on the order of the grid.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) == 0:
        raise ValueError("grid must be a non-empty 1-d sequence")
    if len(grid) > 1 and np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing")
    L0 = liouvillian_grid(sys, uv, ir, B, grid, temperature)
    dL = build_dL(sys)
    try:
        rho = floquet_steady_state(L0, dL, drive, cfg)
    except SteadyStateError:
        # redo point by point to report where it fails
        for i in range(len(grid)):
            try:
                floquet_steady_state(L0[i], dL, drive, cfg)
            except SteadyStateError as exc:
                raise SteadyStateError(f"grid index {i} (detuning {grid[i]} MHz): {exc}") from exc
        raise
    meta = {
        "beta": drive.beta,
        "omega_rf_mhz": angular_to_mhz(drive.omega_rf),
        "temperature_k": temperature,
        "uv_detuning_mhz": angular_to_mhz(uv.detuning),
        "uv_rabi_mhz": angular_to_mhz(uv.rabi),
        "ir_rabi_mhz": angular_to_mhz(ir.rabi),
        "b_gauss": B.magnitude,
        "n_max": cfg.n_max,
    }
    return Spectrum(grid, fluorescence(rho), None, meta)


def setup_spectrum(setup: SpectrumSetup, grid, beta: float = 0.0, temperature: float = 0.0) -> Spectrum:
    """:func:`scan_spectrum` with the shared parameters bundled in ``setup``."""
    return scan_spectrum(
        setup.system, setup.uv, setup.ir, setup.field,
        TrapDrive(setup.omega_rf, beta), grid, temperature, setup.floquet,
    )


def multi_ion_spectrum(ions: Sequence[IonModel], setup: SpectrumSetup, grid) -> Spectrum:
    """Weighted sum of single-ion spectra, each with its own beta and T."""
    if len(ions) == 0:
        raise ValueError("need at least one ion")
    total = None
    for ion in ions:
        s = setup_spectrum(setup, grid, ion.beta, ion.temperature)
        total = ion.weight * s.values if total is None else total + ion.weight * s.values
    meta = {"ions": [(ion.beta, ion.temperature, ion.weight) for ion in ions]}
    return Spectrum(np.asarray(grid, dtype=float), total, None, meta)


def dark_resonance_positions(sys: AtomicSystem, uv: LaserField, B: MagneticField) -> np.ndarray:
    """IR detunings (MHz) of two-photon resonance between S and D sublevels
    that share an excited P sublevel under sigma+/sigma- light, sorted.

    Resonance condition: Delta_UV + z_S = Delta_IR + z_D (Zeeman shifts z).
    """
    z = zeeman_shifts(sys, B)
    ops = coupling_operators(sys)
    uv_pattern = np.abs(ops["UV"][0]) + np.abs(ops["UV"][1])
    ir_pattern = np.abs(ops["IR"][0]) + np.abs(ops["IR"][1])
    out = set()
    for p in P_LEVELS:
        for s in np.flatnonzero(uv_pattern[p]):
            for d in np.flatnonzero(ir_pattern[p]):
                out.add(angular_to_mhz(uv.detuning + z[s] - z[d]))
    return np.array(sorted(out))


def local_minima(spectrum: Spectrum) -> np.ndarray:
    """Detunings of strict interior local minima of the spectrum values."""
    return spectrum.detunings[argrelmin(spectrum.values)[0]]
