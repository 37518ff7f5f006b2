"""Two-ion summed spectrum fitted with one- and two-ion models.

The two-ion fit is run from several random initializations and every
distinct local minimum is written to ``fig4_minima.csv``.
"""

import argparse
from pathlib import Path

import numpy as np

from darkspec import csvio
from darkspec.fitting import fit, multi_ion_problem, multistart_fit, single_ion_problem
from darkspec.spectra import IonModel, Spectrum, SpectrumSetup, multi_ion_spectrum


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("results"))
    ap.add_argument("--betas", default="0.4,2.0")
    ap.add_argument("--temperature-mk", type=float, default=2.0)
    ap.add_argument("--noise", type=float, default=0.05, help="sigma as a fraction of the peak counts")
    ap.add_argument("--points", type=int, default=81)
    ap.add_argument("--starts", type=int, default=8)
    ap.add_argument("--seed", type=int, default=3)
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    setup = SpectrumSetup()
    grid = np.linspace(-40, 40, args.points)
    ions = [IonModel(float(b), args.temperature_mk * 1e-3) for b in args.betas.split(",")]
    clean = multi_ion_spectrum(ions, setup, grid).values * 5e3 + 200
    sig = np.full(grid.size, args.noise * clean.max())
    rng = np.random.default_rng(args.seed)
    data = Spectrum(grid, clean + rng.normal(0, sig), sig)
    csvio.write_spectrum_csv(args.out / "fig4_data.csv", data)

    one = fit(single_ion_problem(data, setup, {"scale": 1e4, "background": 200.0}, bounds={"beta": (0, 4)}))
    csvio.write_fit_report(args.out / "fig4_fit_one_ion.csv", one, {"model": "single_ion"})
    print(f"one ion: beta = {one.estimates['beta']:.2f}, reduced chi2 {one.reduced_chi2:.2f}")

    bounds = {"beta_1": (0, 4), "beta_2": (0, 4), "temperature_mk_1": (0.1, 10), "temperature_mk_2": (0.1, 10)}
    problem = multi_ion_problem(data, 2, setup, {"scale": 5e3, "background": 200.0}, None, bounds)
    vary = ["beta_1", "beta_2", "temperature_mk_1", "temperature_mk_2"]
    minima = multistart_fit(problem, args.starts, seed=1, vary=vary, max_iter=40)
    csvio.write_minima_csv(args.out / "fig4_minima.csv", minima)
    csvio.write_fit_report(args.out / "fig4_fit_two_ions.csv", minima[0].result, {"model": "multi_ion", "n_local_minima": len(minima)})
    for m in minima:
        e = m.estimates
        print(
            f"two ions: beta = ({e['beta_1']:.2f}, {e['beta_2']:.2f}), T = ({e['temperature_mk_1']:.2f}, "
            f"{e['temperature_mk_2']:.2f}) mK, reduced chi2 {m.reduced_chi2:.2f}, starts {m.count}"
        )


if __name__ == "__main__":
    main()
