"""Run configuration: a sectioned ``key = value`` text format.

Example (every key shown with its default; only the keys marked required
must be present)::

    [uv]
    detuning_mhz = -25      # required
    [scan]
    ir_start_mhz = -40      # required
    ir_stop_mhz = 40        # required

Whole-line comments start with ``#`` or ``;``; inline comments need a
space before the ``#``. Unknown sections or keys, duplicate keys, missing
required keys and out-of-range values are errors that name the line.
Frequencies are in MHz (not angular), fields in gauss, temperatures in mK.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from .atomic import AtomicSystem, LaserField, MagneticField
from .floquet import FloquetConfig, bessel_n_max
from .liouvillian import TrapDrive
from .oracle import PropagationConfig
from .spectra import SpectrumSetup
from .units import mhz_to_angular

REQUIRED = object()
_POLARIZATIONS = {
    "linear": (1 / math.sqrt(2), 1 / math.sqrt(2)),
    "sigma+": (0.0, 1.0),
    "sigma-": (1.0, 0.0),
}


class ConfigError(ValueError):
    """Invalid configuration text; the message names the offending line."""


def _float(s):
    v = float(s)
    if not math.isfinite(v):
        raise ValueError("not a finite number")
    return v


def _int(s):
    return int(s)


def _choice(*options):
    def conv(s):
        if s not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return s

    return conv


def _float_list(s):
    return tuple(_float(x) for x in s.replace(",", " ").split())


def _name_list(s):
    return tuple(x.strip() for x in s.split(",") if x.strip())


def _ge(lo):
    return lambda v: v >= lo, f">= {lo}"


def _gt(lo):
    return lambda v: v > lo, f"> {lo}"


_ANY = (lambda v: True, "")

# section -> key -> (converter, default, (check, description), doc)
SCHEMA: dict[str, dict[str, tuple[Callable, Any, tuple, str]]] = {
    "atom": {
        "gamma_mhz": (_float, 22.4, _gt(0), "total P1/2 decay rate / 2 pi"),
        "branching_d": (_float, 0.06, (lambda v: 0 <= v <= 1, "in [0, 1]"), "P -> D branching fraction"),
        "g_s": (_float, 2.0, _ANY, "Lande factor of S1/2"),
        "g_p": (_float, 2.0 / 3.0, _ANY, "Lande factor of P1/2"),
        "g_d": (_float, 0.8, _ANY, "Lande factor of D3/2"),
        "lambda_uv_nm": (_float, 397.0, _gt(0), "UV wavelength"),
        "lambda_ir_nm": (_float, 866.0, _gt(0), "IR wavelength"),
        "mass_amu": (_float, 40.0, _gt(0), "ion mass"),
    },
    "uv": {
        "rabi_mhz": (_float, 10.0, _ge(0), "Rabi frequency / 2 pi of the strongest sigma line"),
        "detuning_mhz": (_float, REQUIRED, _ANY, "laser minus atomic frequency (red < 0)"),
        "linewidth_mhz": (_float, 0.0, _ge(0), "laser dephasing rate / 2 pi"),
        "polarization": (_choice(*_POLARIZATIONS), "linear", _ANY, "linear (sigma+ + sigma-), sigma+ or sigma-"),
    },
    "ir": {
        "rabi_mhz": (_float, 10.0, _ge(0), "Rabi frequency / 2 pi of the strongest sigma line"),
        "linewidth_mhz": (_float, 0.0, _ge(0), "laser dephasing rate / 2 pi"),
        "polarization": (_choice(*_POLARIZATIONS), "linear", _ANY, "linear (sigma+ + sigma-), sigma+ or sigma-"),
    },
    "field": {
        "b_gauss": (_float, 4.0, _ge(0), "magnetic field"),
    },
    "trap": {
        "omega_rf_mhz": (_float, 22.1, _gt(0), "RF drive frequency"),
        "beta": (_float, 0.0, _ge(0), "UV modulation index"),
        "temperature_mk": (_float, 0.0, _ge(0), "ion temperature (thermal dephasing)"),
    },
    "scan": {
        "ir_start_mhz": (_float, REQUIRED, _ANY, "first IR detuning"),
        "ir_stop_mhz": (_float, REQUIRED, _ANY, "last IR detuning (> start)"),
        "n_points": (_int, 401, _ge(2), "number of grid points"),
    },
    "solver": {
        "n_max": (_int, 0, _ge(0), "Floquet truncation; 0 picks it from beta"),
        "bessel_tol": (_float, 1e-8, _gt(0), "|J_n(beta)| cut-off used when n_max = 0"),
        "residual_tol": (_float, 1e-8, _gt(0), "steady-state residual check"),
    },
    "oracle": {
        "steps_per_period": (_int, 400, _gt(20), "RK4 steps per RF period"),
        "t_transient_us": (_float, 60.0, _ge(0), "time skipped before averaging"),
        "betas": (_float_list, (0.3, 1.0), _ANY, "modulation indices to compare"),
        "n_detunings": (_int, 10, _ge(1), "IR detunings per beta (spread over the scan)"),
    },
    "noise": {
        "level": (_float, 0.0, _ge(0), "Gaussian noise sigma as a fraction of the peak counts"),
        "seed": (_int, 0, _ge(0), "random seed for the noise"),
        "scale": (_float, 1.0, _gt(0), "counts per unit P population"),
        "background": (_float, 0.0, _ge(0), "constant counts added"),
    },
    "fit": {
        "free": (_name_list, ("beta", "temperature_mk", "scale", "background"), _ANY, "free spectrum parameters"),
        "n_ions": (_int, 1, _ge(1), "number of ions in the spectrum model"),
        "beta_guess": (_float, 1.0, _ge(0), "initial beta (every ion)"),
        "beta_max": (_float, 5.0, _gt(0), "upper bound on beta"),
        "temperature_mk_guess": (_float, 1.0, _ge(0), "initial temperature"),
        "temperature_mk_max": (_float, 20.0, _gt(0), "upper bound on temperature"),
        "scale_guess": (_float, 0.0, _ge(0), "initial scale; 0 estimates it from the data"),
        "background_guess": (_float, 0.0, _ANY, "initial background"),
        "max_iter": (_int, 100, _ge(1), "Levenberg-Marquardt iterations"),
        "n_starts": (_int, 1, _ge(1), "random initializations (> 1 runs a multi-start fit)"),
        "seed": (_int, 0, _ge(0), "seed for the multi-start draws"),
    },
}


@dataclass(frozen=True)
class RunConfig:
    """Parsed configuration in user units; see :data:`SCHEMA`."""

    values: dict

    def __getitem__(self, section: str) -> dict:
        return self.values[section]

    def system(self) -> AtomicSystem:
        a = self["atom"]
        return AtomicSystem(
            mass=a["mass_amu"], gamma_total=mhz_to_angular(a["gamma_mhz"]),
            branching_S=1 - a["branching_d"], branching_D=a["branching_d"],
            g_S=a["g_s"], g_P=a["g_p"], g_D=a["g_d"],
            lambda_UV=a["lambda_uv_nm"], lambda_IR=a["lambda_ir_nm"],
        )

    def uv(self) -> LaserField:
        u = self["uv"]
        return LaserField(
            mhz_to_angular(u["rabi_mhz"]), mhz_to_angular(u["detuning_mhz"]), mhz_to_angular(u["linewidth_mhz"]),
            self["atom"]["lambda_uv_nm"], _POLARIZATIONS[u["polarization"]], "UV",
        )

    def ir(self) -> LaserField:
        u = self["ir"]
        return LaserField(
            mhz_to_angular(u["rabi_mhz"]), 0.0, mhz_to_angular(u["linewidth_mhz"]),
            self["atom"]["lambda_ir_nm"], _POLARIZATIONS[u["polarization"]], "IR",
        )

    def field(self) -> MagneticField:
        return MagneticField(self["field"]["b_gauss"])

    def drive(self, beta: float | None = None) -> TrapDrive:
        t = self["trap"]
        return TrapDrive(mhz_to_angular(t["omega_rf_mhz"]), t["beta"] if beta is None else beta)

    def grid(self) -> np.ndarray:
        s = self["scan"]
        return np.linspace(s["ir_start_mhz"], s["ir_stop_mhz"], s["n_points"])

    def floquet(self, beta: float | None = None) -> FloquetConfig:
        s = self["solver"]
        beta = self["trap"]["beta"] if beta is None else beta
        n = s["n_max"] or bessel_n_max(beta, s["bessel_tol"])
        return FloquetConfig(n_max=n, residual_tol=s["residual_tol"])

    def setup(self, beta_max: float | None = None) -> SpectrumSetup:
        return SpectrumSetup(
            self.system(), self.uv(), self.ir(), self.field(),
            mhz_to_angular(self["trap"]["omega_rf_mhz"]), self.floquet(beta_max),
        )

    def propagation(self) -> PropagationConfig:
        o = self["oracle"]
        return PropagationConfig(o["steps_per_period"], o["t_transient_us"])


def required_keys() -> list[str]:
    return [f"{sec}.{key}" for sec, keys in SCHEMA.items() for key, spec in keys.items() if spec[1] is REQUIRED]


def _strip_comment(line: str) -> str:
    s = line.strip()
    if s.startswith(("#", ";")):
        return ""
    for marker in (" #", "\t#", " ;", "\t;"):
        k = s.find(marker)
        if k >= 0:
            s = s[:k]
    return s.strip()


def parse_config(text: str) -> RunConfig:
    """Parse configuration text into a :class:`RunConfig` with defaults applied."""
    seen: dict[tuple[str, str], int] = {}
    raw: dict[tuple[str, str], tuple[str, int]] = {}
    section = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        s = _strip_comment(line)
        if not s:
            continue
        if s.startswith("["):
            if not s.endswith("]"):
                raise ConfigError(f"line {lineno}: malformed section header {s!r}")
            section = s[1:-1].strip().lower()
            if section not in SCHEMA:
                raise ConfigError(f"line {lineno}: unknown section [{section}]; known: {', '.join(SCHEMA)}")
            continue
        if "=" not in s:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {s!r}")
        if section is None:
            raise ConfigError(f"line {lineno}: key outside of any [section]")
        key, value = (p.strip() for p in s.split("=", 1))
        key = key.lower()
        if key not in SCHEMA[section]:
            raise ConfigError(
                f"line {lineno}: unknown key {key!r} in [{section}]; known: {', '.join(SCHEMA[section])}"
            )
        if (section, key) in seen:
            raise ConfigError(
                f"duplicate key {key!r} in [{section}] at lines {seen[section, key]} and {lineno}"
            )
        seen[section, key] = lineno
        raw[section, key] = (value, lineno)

    missing = [f"{sec}.{key}" for sec, key in (k.split(".") for k in required_keys()) if (sec, key) not in raw]
    if missing:
        raise ConfigError(f"missing required keys: {', '.join(missing)}")

    values: dict[str, dict] = {}
    for sec, keys in SCHEMA.items():
        values[sec] = {}
        for key, (conv, default, (check, desc), _doc) in keys.items():
            if (sec, key) not in raw:
                values[sec][key] = default
                continue
            text_value, lineno = raw[sec, key]
            try:
                v = conv(text_value)
            except ValueError as exc:
                raise ConfigError(f"line {lineno}: [{sec}] {key} = {text_value!r}: {exc}") from None
            if not check(v):
                raise ConfigError(f"line {lineno}: [{sec}] {key} = {v!r} out of range (must be {desc})")
            values[sec][key] = v

    s = values["scan"]
    if not s["ir_stop_mhz"] > s["ir_start_mhz"]:
        line = seen.get(("scan", "ir_stop_mhz"))
        raise ConfigError(f"line {line}: [scan] ir_stop_mhz must exceed ir_start_mhz")
    unknown = set(values["fit"]["free"]) - {"beta", "temperature_mk", "rabi_uv", "rabi_ir", "scale", "background", "offset"}
    if unknown:
        raise ConfigError(f"line {seen.get(('fit', 'free'))}: [fit] free has unknown parameters {sorted(unknown)}")
    return RunConfig(values)


def read_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def annotated_example() -> str:
    """A complete configuration listing every key with its default and meaning."""
    lines = ["# darkspec run configuration; units: MHz (not angular), gauss, mK, us", ""]
    for sec, keys in SCHEMA.items():
        lines.append(f"[{sec}]")
        for key, (_conv, default, (_check, desc), doc) in keys.items():
            if default is REQUIRED:
                value = {"detuning_mhz": "-25", "ir_start_mhz": "-40", "ir_stop_mhz": "40"}[key]
                note = "required"
            else:
                value = ", ".join(map(str, default)) if isinstance(default, tuple) else str(default)
                note = "default"
            rng = f"; {desc}" if desc else ""
            lines.append(f"# {doc} ({note}{rng})")
            lines.append(f"{key} = {value}")
        lines.append("")
    return "\n".join(lines)
