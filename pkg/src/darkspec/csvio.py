"""Plain CSV files for spectra, beta(V), T(beta), trajectories and fit reports.

All files are comma separated with one header row; lines starting with
``#`` are comments. Floats are written with ``repr`` so a write/read cycle
is bit exact. Frequencies are in MHz.

==================  =====================================================
file                columns
==================  =====================================================
spectrum            detuning_mhz, counts[, counts_err]
spectrum family     beta, detuning_mhz, counts
hyperbola data      voltage_v, beta[, beta_err]
temperature data    beta, temperature_mk[, temperature_err_mk]
trajectory          time_us, p0 .. p7
residuals           x, y, model, residual
fit report          parameter, estimate, stderr, free  (+ ``# key: value``)
local minima        rank, chi2, reduced_chi2, count, <parameters>
oracle report       beta, detuning_mhz, n_max, max_abs_dev
==================  =====================================================
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .spectra import Spectrum


class CSVFormatError(ValueError):
    """Malformed data file; the message names the offending line."""


@dataclass
class Table:
    columns: list[str]
    data: dict[str, np.ndarray]
    comments: list[str] = field(default_factory=list)
    lines: np.ndarray | None = None  # source line of each row

    def __len__(self):
        return len(self.lines) if self.lines is not None else len(next(iter(self.data.values()), []))


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_table(path, columns: Sequence[str], rows, comments: Sequence[str] = ()) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for c in comments:
            fh.write(f"# {c}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def read_table(
    path, required: Sequence[str], optional: Sequence[str] = (), numeric: bool = True, open_ended: bool = False
) -> Table:
    """Read a CSV with a header; every row must have every header column.

    Columns outside ``required`` + ``optional`` are rejected unless
    ``open_ended`` (tables with a variable set of trailing columns).
    """
    comments, rows, lines = [], [], []
    header = None
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            s = line.strip()
            if not s:
                continue
            if s.startswith("#"):
                comments.append(s[1:].strip())
                continue
            cells = [c.strip() for c in next(csv.reader([s]))]
            if header is None:
                header = cells
                missing = [c for c in required if c not in header]
                if missing:
                    raise CSVFormatError(f"line {lineno}: header lacks columns {missing}; got {header}")
                allowed = set(required) | set(optional)
                extra = [c for c in header if c not in allowed]
                if extra and not open_ended:
                    raise CSVFormatError(f"line {lineno}: unexpected columns {extra}")
                if len(set(header)) != len(header):
                    raise CSVFormatError(f"line {lineno}: repeated column names")
                continue
            if len(cells) != len(header):
                raise CSVFormatError(f"line {lineno}: expected {len(header)} fields, got {len(cells)}")
            if numeric:
                try:
                    vals = [float(c) for c in cells]
                except ValueError:
                    raise CSVFormatError(f"line {lineno}: non-numeric field in {s!r}") from None
                if not all(math.isfinite(v) for v in vals):
                    raise CSVFormatError(f"line {lineno}: non-finite value in {s!r}")
                cells = vals
            rows.append(cells)
            lines.append(lineno)
    if header is None:
        raise CSVFormatError(f"{path}: no header row")
    data = {c: np.array([r[i] for r in rows], dtype=float if numeric else object) for i, c in enumerate(header)}
    return Table(header, data, comments, np.array(lines, dtype=int))


def _sorted_xy(t: Table, xcol: str, ycol: str, ecol: str, path, unique: bool = True):
    order = np.argsort(t.data[xcol], kind="stable")
    x = t.data[xcol][order]
    y = t.data[ycol][order]
    lines = t.lines[order]
    if len(x) == 0:
        raise CSVFormatError(f"{path}: no data rows")
    if unique:
        dup = np.flatnonzero(np.diff(x) == 0)
        if dup.size:
            k = dup[0]
            raise CSVFormatError(f"lines {lines[k]} and {lines[k + 1]}: duplicate {xcol} {x[k]!r}")
    err = None
    if ecol in t.data:
        err = t.data[ecol][order]
        bad = np.flatnonzero(err <= 0)
        if bad.size:
            raise CSVFormatError(f"line {lines[bad[0]]}: {ecol} must be positive, got {err[bad[0]]!r}")
    return x, y, err


# spectra


def write_spectrum_csv(path, spectrum: Spectrum, comments: Sequence[str] = ()) -> None:
    if spectrum.sigmas is None:
        write_table(path, ["detuning_mhz", "counts"], zip(spectrum.detunings, spectrum.values), comments)
    else:
        write_table(
            path, ["detuning_mhz", "counts", "counts_err"],
            zip(spectrum.detunings, spectrum.values, spectrum.sigmas), comments,
        )


def read_spectrum_csv(path) -> Spectrum:
    """Spectrum sorted by detuning; counts_err is optional but must be positive."""
    t = read_table(path, ["detuning_mhz", "counts"], ["counts_err"])
    x, y, err = _sorted_xy(t, "detuning_mhz", "counts", "counts_err", path)
    return Spectrum(x, y, err, {"comments": t.comments})


def write_spectrum_family_csv(path, spectra: Sequence[Spectrum], betas: Sequence[float], comments=()) -> None:
    rows = [(b, d, v) for b, s in zip(betas, spectra) for d, v in zip(s.detunings, s.values)]
    write_table(path, ["beta", "detuning_mhz", "counts"], rows, comments)


def read_spectrum_family_csv(path) -> dict[float, Spectrum]:
    t = read_table(path, ["beta", "detuning_mhz", "counts"])
    out = {}
    for b in dict.fromkeys(t.data["beta"]):
        m = t.data["beta"] == b
        sub = Table(t.columns, {k: v[m] for k, v in t.data.items()}, [], t.lines[m])
        x, y, _ = _sorted_xy(sub, "detuning_mhz", "counts", "", path)
        out[float(b)] = Spectrum(x, y)
    return out


# beta(V) and T(beta)


def write_xy_csv(path, columns: Sequence[str], x, y, err=None, comments=()) -> None:
    if err is None:
        write_table(path, columns[:2], zip(x, y), comments)
    else:
        write_table(path, columns, zip(x, y, err), comments)


def read_hyperbola_csv(path):
    """(voltage_v, beta, beta_err or None), sorted by voltage."""
    t = read_table(path, ["voltage_v", "beta"], ["beta_err"])
    return _sorted_xy(t, "voltage_v", "beta", "beta_err", path)


def read_temperature_csv(path):
    """(beta, temperature_mk, temperature_err_mk or None), sorted by beta."""
    t = read_table(path, ["beta", "temperature_mk"], ["temperature_err_mk"])
    return _sorted_xy(t, "beta", "temperature_mk", "temperature_err_mk", path, unique=False)


HYPERBOLA_COLUMNS = ("voltage_v", "beta", "beta_err")
TEMPERATURE_COLUMNS = ("beta", "temperature_mk", "temperature_err_mk")


# trajectories, residuals, reports


def write_trajectory_csv(path, times, populations, comments=()) -> None:
    populations = np.asarray(populations)
    cols = ["time_us"] + [f"p{i}" for i in range(populations.shape[1])]
    write_table(path, cols, (np.concatenate([[t], p]) for t, p in zip(times, populations)), comments)


def read_trajectory_csv(path):
    t = read_table(path, ["time_us"], open_ended=True)
    pcols = [c for c in t.columns if c != "time_us"]
    return t.data["time_us"], np.column_stack([t.data[c] for c in pcols])


def write_residuals_csv(path, x, y, model, residual, comments=()) -> None:
    write_table(path, ["x", "y", "model", "residual"], zip(x, y, model, residual), comments)


def read_residuals_csv(path) -> Table:
    return read_table(path, ["x", "y", "model", "residual"])


def write_fit_report(path, result, extra: dict | None = None) -> None:
    """Parameter table plus ``# key: value`` lines for the fit statistics."""
    stats = {
        "model": (extra or {}).get("model", ""),
        "converged": int(result.converged),
        "message": result.message,
        "chi2": repr(result.chi2),
        "reduced_chi2": repr(result.reduced_chi2),
        "dof": result.dof,
        "n_evals": result.n_evals,
        "n_iter": result.n_iter,
        "unit_weights": int(result.unit_weights),
        "covariance_valid": int(result.covariance_valid),
    }
    stats.update({k: v for k, v in (extra or {}).items() if k != "model"})
    rows = [
        (name, value, result.errors.get(name, math.nan), name in result.errors)
        for name, value in result.estimates.items()
    ]
    write_table(path, ["parameter", "estimate", "stderr", "free"], rows, [f"{k}: {v}" for k, v in stats.items()])


def read_fit_report(path) -> tuple[dict, dict[str, tuple[float, float, bool]]]:
    """Returns (statistics as strings, {parameter: (estimate, stderr, free)})."""
    t = read_table(path, ["parameter", "estimate", "stderr", "free"], numeric=False)
    stats = {}
    for c in t.comments:
        if ":" in c:
            k, v = c.split(":", 1)
            stats[k.strip()] = v.strip()
    params = {}
    for i, name in enumerate(t.data["parameter"]):
        try:
            params[name] = (float(t.data["estimate"][i]), float(t.data["stderr"][i]), t.data["free"][i] == "1")
        except ValueError:
            raise CSVFormatError(f"line {t.lines[i]}: non-numeric estimate or stderr") from None
    return stats, params


def write_minima_csv(path, minima, comments=()) -> None:
    names = list(minima[0].estimates) if minima else []
    rows = [
        [rank, m.chi2, m.reduced_chi2, m.count] + [m.estimates[n] for n in names]
        for rank, m in enumerate(minima, start=1)
    ]
    write_table(path, ["rank", "chi2", "reduced_chi2", "count"] + names, rows, comments)


def read_minima_csv(path) -> Table:
    return read_table(path, ["rank", "chi2", "reduced_chi2", "count"], open_ended=True)


def write_oracle_report(path, rows, comments=()) -> None:
    write_table(path, ["beta", "detuning_mhz", "n_max", "max_abs_dev"], rows, comments)


def read_oracle_report(path) -> Table:
    return read_table(path, ["beta", "detuning_mhz", "n_max", "max_abs_dev"])
