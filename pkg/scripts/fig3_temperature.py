"""Temperature versus modulation index with and without RF heating.

Synthesizes T(beta) from the balance model with RF heating
(C_RF = 8.4e-20 J/s, Delta = -11.7 MHz, 5 % noise), then fits both the
full model and the model with C_RF = 0. Writes the data, both fits and
the model curves (``fig3_*.csv``).
"""

import argparse
from pathlib import Path

import numpy as np

from darkspec import csvio
from darkspec.fitting import fit_temperature_model, temperature_model
from darkspec.thermo import doppler_limit


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("results"))
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    rng = np.random.default_rng(args.seed)
    beta = np.linspace(0.05, 1.3, 12)
    T = temperature_model(beta, 8.4, -11.7)
    T_obs = T * (1 + rng.normal(0, 0.05, T.size))
    err = 0.05 * T
    csvio.write_xy_csv(args.out / "fig3_data.csv", csvio.TEMPERATURE_COLUMNS, beta, T_obs, err)

    full = fit_temperature_model(beta, T_obs, err, include_rf=True)
    bare = fit_temperature_model(beta, T_obs, err, include_rf=False)
    csvio.write_fit_report(args.out / "fig3_fit_rf.csv", full, {"model": "temperature_model", "include_rf": 1})
    csvio.write_fit_report(args.out / "fig3_fit_no_rf.csv", bare, {"model": "temperature_model", "include_rf": 0})

    b = np.linspace(0, 3.5, 351)
    curves = np.column_stack([
        b,
        temperature_model(b, full.estimates["c_rf"], full.estimates["detuning"]),
        temperature_model(b, 0.0, bare.estimates["detuning"]),
    ])
    csvio.write_table(args.out / "fig3_curves.csv", ["beta", "T_rf_mk", "T_no_rf_mk"], curves)
    print(f"Doppler limit {doppler_limit() * 1e3:.4f} mK")
    for name, r in (("with RF", full), ("no RF", bare)):
        est = ", ".join(f"{k} = {r.estimates[k]:.3g} +- {r.errors[k]:.2g}" for k in r.names)
        print(f"{name:>8s}: {est}, reduced chi2 {r.reduced_chi2:.2f}")


if __name__ == "__main__":
    main()
