"""Command-line entry point: ``darkspec <subcommand> ...``.

Exit codes: 0 success, 1 usage or input error, 2 numerical failure
(singular steady state, trace drift, non-converged fit).
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import csvio
from .config import ConfigError, RunConfig, annotated_example, read_config
from .fitting import (
    fit,
    fit_temperature_model,
    hyperbola_problem,
    multi_ion_problem,
    multistart_fit,
    residuals,
    single_ion_problem,
)
from .floquet import SteadyStateError, floquet_steady_state
from .liouvillian import build_dL
from .oracle import StepSizeError, time_averaged_state
from .spectra import Spectrum, liouvillian_grid, local_minima, scan_spectrum
from .units import angular_to_mhz


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _simulate_one(cfg: RunConfig, beta: float) -> Spectrum:
    t = cfg["trap"]
    return scan_spectrum(
        cfg.system(), cfg.uv(), cfg.ir(), cfg.field(), cfg.drive(beta), cfg.grid(),
        t["temperature_mk"] * 1e-3, cfg.floquet(beta),
    )


def _counts(cfg: RunConfig, spec: Spectrum) -> Spectrum:
    n = cfg["noise"]
    y = n["scale"] * spec.values + n["background"]
    if n["level"] == 0:
        return Spectrum(spec.detunings, y, None, spec.meta)
    sigma = n["level"] * float(np.max(y))
    rng = np.random.default_rng(n["seed"])
    return Spectrum(spec.detunings, y + rng.normal(0.0, sigma, y.size), np.full(y.size, sigma), spec.meta)


def _meta_comments(meta: dict) -> list[str]:
    return [f"{k}: {v}" for k, v in meta.items() if k != "comments"]


def cmd_simulate(args) -> int:
    cfg = read_config(args.config)
    beta = cfg["trap"]["beta"] if args.beta is None else args.beta
    spec = _counts(cfg, _simulate_one(cfg, beta))
    csvio.write_spectrum_csv(args.output, spec, _meta_comments(spec.meta))
    print(f"wrote {len(spec)} points to {args.output}; local minima at {np.round(local_minima(spec), 3).tolist()} MHz")
    return 0


def cmd_scan_beta(args) -> int:
    cfg = read_config(args.config)
    betas = [float(b) for b in args.betas.replace(",", " ").split()]
    if not betas or min(betas) < 0:
        raise UsageError("--betas needs one or more non-negative values")
    spectra = [_counts(cfg, _simulate_one(cfg, b)) for b in betas]
    csvio.write_spectrum_family_csv(args.output, spectra, betas)
    print(f"wrote {len(betas)} spectra to {args.output}")
    return 0


def _spectrum_problem(cfg: RunConfig, data: Spectrum):
    f = cfg["fit"]
    scale = f["scale_guess"] or max(float(np.ptp(data.values)), 1e-12) / 0.05
    bounds = {"beta": (0.0, f["beta_max"]), "temperature_mk": (0.0, f["temperature_mk_max"])}
    uv, ir = cfg["uv"], cfg["ir"]
    guess = {
        "beta": f["beta_guess"], "temperature_mk": f["temperature_mk_guess"],
        "scale": scale, "background": f["background_guess"],
        "rabi_uv": uv["rabi_mhz"], "rabi_ir": ir["rabi_mhz"],
    }
    setup = cfg.setup(f["beta_max"])
    if f["n_ions"] == 1:
        return single_ion_problem(data, setup, guess, f["free"], bounds)
    free, bnds = [], {}
    for i in range(1, f["n_ions"] + 1):
        for name in ("beta", "temperature_mk"):
            guess[f"{name}_{i}"] = guess[name]
            bnds[f"{name}_{i}"] = bounds[name]
            if name in f["free"]:
                free.append(f"{name}_{i}")
    free += [n for n in f["free"] if n not in ("beta", "temperature_mk")]
    guess = {k: v for k, v in guess.items() if k not in ("beta", "temperature_mk")}
    return multi_ion_problem(data, f["n_ions"], setup, guess, free, bnds)


def _write_residuals(path, problem, estimates):
    model = problem.evaluate({**problem.values(), **estimates})
    csvio.write_residuals_csv(path, problem.x, problem.y, model, residuals(problem, estimates))


def cmd_fit(args) -> int:
    cfg = read_config(args.config)
    data = csvio.read_spectrum_csv(args.data)
    problem = _spectrum_problem(cfg, data)
    f = cfg["fit"]
    extra = {"model": problem.model_id}
    if f["n_starts"] > 1:
        vary = [n for n in problem.free_names if n.startswith(("beta", "temperature_mk"))]
        minima = multistart_fit(problem, f["n_starts"], f["seed"], vary, max_iter=f["max_iter"])
        result = minima[0].result
        extra["n_local_minima"] = len(minima)
        if args.minima:
            csvio.write_minima_csv(args.minima, minima)
    else:
        result = fit(problem, max_iter=f["max_iter"])
    csvio.write_fit_report(args.output, result, extra)
    if args.residuals:
        _write_residuals(args.residuals, problem, result.estimates)
    _print_result(result)
    return 0 if result.converged else 2


def _print_result(result) -> None:
    for name in result.names:
        print(f"{name:>16s} = {result.estimates[name]:.6g} +- {result.errors[name]:.2g}")
    print(f"chi2 = {result.chi2:.6g}, reduced chi2 = {result.reduced_chi2:.4g}, converged = {result.converged}")


def cmd_fit_hyperbola(args) -> int:
    V, beta, err = csvio.read_hyperbola_csv(args.data)
    problem = hyperbola_problem(V, beta, err)
    result = fit(problem)
    csvio.write_fit_report(
        args.output, result,
        {"model": "hyperbola", "beta_min": repr(abs(result.estimates["b"])), "beta_min_err": repr(result.errors["b"])},
    )
    if args.residuals:
        _write_residuals(args.residuals, problem, result.estimates)
    _print_result(result)
    return 0 if result.converged else 2


def cmd_fit_temperature(args) -> int:
    beta, T, err = csvio.read_temperature_csv(args.data)
    if len(beta) < 3:
        raise UsageError("need at least 3 (beta, T) points")
    guess = {"detuning": args.detuning_guess}
    result = fit_temperature_model(beta, T, err, include_rf=not args.no_rf, guess=guess)
    csvio.write_fit_report(
        args.output, result, {"model": "temperature_model", "include_rf": int(not args.no_rf)}
    )
    _print_result(result)
    return 0 if result.converged else 2


def cmd_oracle_check(args) -> int:
    cfg = read_config(args.config)
    grid = cfg.grid()
    o = cfg["oracle"]
    pick = np.unique(np.linspace(0, len(grid) - 1, o["n_detunings"]).round().astype(int))
    det = grid[pick]
    sys_, uv, ir, B = cfg.system(), cfg.uv(), cfg.ir(), cfg.field()
    L0 = liouvillian_grid(sys_, uv, ir, B, det, cfg["trap"]["temperature_mk"] * 1e-3)
    dL = build_dL(sys_)
    rows = []
    for beta in o["betas"]:
        drive = cfg.drive(beta)
        fcfg = cfg.floquet(beta)
        rho_f = floquet_steady_state(L0, dL, drive, fcfg)
        for k, d in enumerate(det):
            rho_t = time_averaged_state(L0[k], dL, drive, cfg.propagation())
            dev = np.max(np.abs(rho_f[k, ::9].real - rho_t[::9].real))
            rows.append((beta, d, fcfg.n_max, dev))
    worst = max(r[3] for r in rows)
    csvio.write_oracle_report(
        args.output, rows,
        [f"max_abs_dev: {worst!r}", f"steps_per_period: {o['steps_per_period']}",
         f"omega_rf_mhz: {angular_to_mhz(cfg.drive().omega_rf)}"],
    )
    print(f"max population deviation Floquet vs time domain: {worst:.3e} over {len(rows)} cases")
    return 0


def cmd_example_config(args) -> int:
    text = annotated_example()
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="darkspec", description="Micromotion-modulated dark-resonance spectra of 40Ca+.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    s = sub.add_parser("simulate", help="config -> spectrum CSV")
    s.add_argument("config")
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--beta", type=float, help="override [trap] beta")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("fit", help="config + spectrum CSV -> fit report")
    s.add_argument("config")
    s.add_argument("data")
    s.add_argument("-o", "--output", required=True, help="fit report CSV")
    s.add_argument("--residuals", help="residuals CSV")
    s.add_argument("--minima", help="local minima CSV (multi-start fits)")
    s.set_defaults(func=cmd_fit)

    s = sub.add_parser("scan-beta", help="config + list of beta -> family of spectra")
    s.add_argument("config")
    s.add_argument("--betas", required=True, help="comma separated, e.g. 0,0.5,1")
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_scan_beta)

    s = sub.add_parser("fit-hyperbola", help="beta-vs-voltage CSV -> hyperbola fit")
    s.add_argument("data")
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--residuals")
    s.set_defaults(func=cmd_fit_hyperbola)

    s = sub.add_parser("fit-temperature", help="T-vs-beta CSV -> balance-temperature fit")
    s.add_argument("data")
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--no-rf", action="store_true", help="fix C_RF = 0")
    s.add_argument("--detuning-guess", type=float, default=-10.0, help="initial UV detuning in MHz")
    s.set_defaults(func=cmd_fit_temperature)

    s = sub.add_parser("oracle-check", help="compare Floquet and time-domain steady states")
    s.add_argument("config")
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_oracle_check)

    s = sub.add_parser("example-config", help="print an annotated configuration")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_example_config)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help(sys.stderr)
            return 1
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except (SteadyStateError, StepSizeError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"darkspec: numerical failure: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, csvio.CSVFormatError, OSError, ValueError) as exc:
        print(f"darkspec: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
