"""Weighted nonlinear least squares for spectra, beta(V) and T(beta).

The optimizer is a bounded Levenberg-Marquardt iteration with Marquardt
(diagonal) damping and a central-difference Jacobian. Bounds are enforced
by projecting trial points back into the box. Diagonal damping makes the
iteration invariant under rescaling of individual parameters, so fitting a
frequency in MHz or in rad/us gives the same chi2 and the same physical
estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .floquet import FloquetConfig
from .liouvillian import TrapDrive
from .spectra import Spectrum, SpectrumSetup, scan_spectrum
from .thermo import ThermoParams, temperature_expression
from .units import mhz_to_angular

MODEL_IDS = ("single_ion", "multi_ion", "hyperbola", "temperature_model", "custom")


@dataclass(frozen=True)
class Parameter:
    """A named model parameter. Free parameters need finite bounds."""

    name: str
    value: float
    lower: float = -math.inf
    upper: float = math.inf
    free: bool = True

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ValueError(f"{self.name}: value must be finite")
        if self.lower > self.upper:
            raise ValueError(f"{self.name}: lower bound above upper bound")
        if self.free:
            if not (math.isfinite(self.lower) and math.isfinite(self.upper)):
                raise ValueError(f"{self.name}: free parameters need finite bounds")
            if not self.lower <= self.value <= self.upper:
                raise ValueError(f"{self.name}: initial value {self.value} outside [{self.lower}, {self.upper}]")


@dataclass
class FitProblem:
    """Data, a model ``f(x, params) -> y`` and its parameters.

    ``sigma=None`` means unit weights; the covariance is then rescaled by
    the reduced chi2.
    """

    x: np.ndarray
    y: np.ndarray
    sigma: np.ndarray | None
    model: Callable[[np.ndarray, dict], np.ndarray]
    parameters: tuple[Parameter, ...]
    model_id: str = "custom"

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.y.ndim != 1 or len(self.x) != len(self.y):
            raise ValueError("x and y must have the same length")
        if self.sigma is not None:
            self.sigma = np.asarray(self.sigma, dtype=float)
            if self.sigma.shape != self.y.shape or np.any(~(self.sigma > 0)):
                raise ValueError("sigma must be positive and match y")
        self.parameters = tuple(self.parameters)
        names = [p.name for p in self.parameters]
        if len(set(names)) != len(names):
            raise ValueError("parameter names must be unique")
        if self.model_id not in MODEL_IDS:
            raise ValueError(f"unknown model id {self.model_id!r}")

    @property
    def unit_weights(self) -> bool:
        return self.sigma is None

    @property
    def free_names(self) -> list[str]:
        return [p.name for p in self.parameters if p.free]

    def values(self) -> dict[str, float]:
        return {p.name: p.value for p in self.parameters}

    def with_values(self, **values) -> "FitProblem":
        """Copy with new starting values (bounds unchanged)."""
        params = tuple(replace(p, value=float(values.get(p.name, p.value))) for p in self.parameters)
        return replace(self, parameters=params)

    def evaluate(self, values: dict[str, float]) -> np.ndarray:
        return np.asarray(self.model(self.x, values), dtype=float)


@dataclass
class FitResult:
    names: list[str]
    estimates: dict[str, float]  # all parameters, fixed ones included
    errors: dict[str, float]  # free parameters only
    covariance: np.ndarray
    covariance_valid: bool
    chi2: float
    reduced_chi2: float
    n_evals: int
    n_iter: int
    converged: bool
    unit_weights: bool
    dof: int
    message: str = ""
    history: list[float] = field(default_factory=list)  # chi2 after each accepted step


def residuals(problem: FitProblem, estimates: dict[str, float] | None = None) -> np.ndarray:
    """(y - model) / sigma on the data grid, in data order."""
    vals = problem.values() if estimates is None else {**problem.values(), **estimates}
    r = problem.y - problem.evaluate(vals)
    return r if problem.sigma is None else r / problem.sigma


class _Objective:
    def __init__(self, problem: FitProblem):
        self.problem = problem
        self.base = problem.values()
        self.free = [p for p in problem.parameters if p.free]
        self.lower = np.array([p.lower for p in self.free])
        self.upper = np.array([p.upper for p in self.free])
        self.w = 1.0 if problem.sigma is None else 1.0 / problem.sigma
        self.n_evals = 0

    def values(self, theta) -> dict[str, float]:
        out = dict(self.base)
        out.update({p.name: float(t) for p, t in zip(self.free, theta)})
        return out

    def model(self, theta) -> np.ndarray:
        self.n_evals += 1
        f = self.problem.evaluate(self.values(theta))
        if not np.all(np.isfinite(f)):
            raise FloatingPointError("model returned non-finite values")
        return f

    def resid(self, theta) -> np.ndarray:
        return (self.problem.y - self.model(theta)) * self.w

    def jacobian(self, theta, rel_step, abs_step) -> np.ndarray:
        """d model / d theta, weighted; central differences, one-sided at bounds."""
        J = np.empty((len(self.problem.y), len(theta)))
        for k in range(len(theta)):
            h = max(rel_step * abs(theta[k]), abs_step)
            up, dn = theta.copy(), theta.copy()
            up[k] = min(theta[k] + h, self.upper[k])
            dn[k] = max(theta[k] - h, self.lower[k])
            if up[k] == dn[k]:
                J[:, k] = 0.0
                continue
            J[:, k] = (self.model(up) - self.model(dn)) * self.w / (up[k] - dn[k])
        return J


def fit(
    problem: FitProblem,
    max_iter: int = 100,
    ftol: float = 1e-10,
    xtol: float = 1e-10,
    rel_step: float = 1e-6,
    abs_step: float = 1e-9,
    lam0: float = 1e-3,
) -> FitResult:
    """Minimize chi2 = sum(((y - model) / sigma)^2) over the free parameters.

    Stops when an accepted step lowers chi2 by less than ``ftol`` relative,
    when a step changes no parameter by more than ``xtol`` relative, or when
    chi2 is zero to round-off. Otherwise the best point after ``max_iter``
    iterations is returned with ``converged=False``.
    """
    obj = _Objective(problem)
    if not obj.free:
        raise ValueError("problem has no free parameters")
    theta = np.array([p.value for p in obj.free], dtype=float)
    n, m = len(problem.y), len(theta)
    r = obj.resid(theta)
    chi2 = float(r @ r)
    history = [chi2]
    lam = lam0
    converged, message, n_iter = False, "maximum iterations reached", 0
    tiny = 1e-28 * max(1.0, float(np.sum((problem.y * obj.w) ** 2)))

    while n_iter < max_iter:
        if chi2 <= tiny:
            converged, message = True, "chi2 at round-off level"
            break
        n_iter += 1
        J = obj.jacobian(theta, rel_step, abs_step)
        A = J.T @ J
        g = J.T @ r
        d = np.diag(A).copy()
        d[d == 0] = 1.0
        accepted = False
        while lam < 1e16:
            try:
                step = np.linalg.solve(A + lam * np.diag(d), g)
            except np.linalg.LinAlgError:
                lam *= 10
                continue
            trial = np.clip(theta + step, obj.lower, obj.upper)
            r_trial = obj.resid(trial)
            chi2_trial = float(r_trial @ r_trial)
            if chi2_trial < chi2:
                accepted = True
                break
            lam *= 10
        if not accepted:
            converged, message = True, "no downhill step found (local minimum)"
            break
        dx = np.abs(trial - theta)
        rel_drop = (chi2 - chi2_trial) / chi2
        theta, r, chi2 = trial, r_trial, chi2_trial
        history.append(chi2)
        lam = max(lam / 10, 1e-12)
        if rel_drop < ftol:
            converged, message = True, "relative chi2 decrease below ftol"
            break
        if np.all(dx <= xtol * (np.abs(theta) + xtol)):
            converged, message = True, "step below xtol"
            break

    J = obj.jacobian(theta, rel_step, abs_step)
    dof = n - m
    red = chi2 / dof if dof > 0 else math.nan
    cov, valid = _covariance(J)
    if valid and problem.unit_weights:
        cov = cov * red
        valid = math.isfinite(red)
    errors = {p.name: float(math.sqrt(max(cov[k, k], 0.0))) if valid else math.nan for k, p in enumerate(obj.free)}
    return FitResult(
        names=[p.name for p in obj.free],
        estimates=obj.values(theta),
        errors=errors,
        covariance=cov,
        covariance_valid=valid,
        chi2=chi2,
        reduced_chi2=red,
        n_evals=obj.n_evals,
        n_iter=n_iter,
        converged=converged,
        unit_weights=problem.unit_weights,
        dof=dof,
        message=message,
        history=history,
    )


def _covariance(J: np.ndarray, rcond: float = 1e-12) -> tuple[np.ndarray, bool]:
    """(J^T J)^-1, or a NaN matrix flagged invalid if J is rank deficient."""
    m = J.shape[1]
    s = np.linalg.svd(J, compute_uv=False)
    if s.size < m or s[-1] <= rcond * s[0] or s[0] == 0:
        return np.full((m, m), np.nan), False
    cov = np.linalg.inv(J.T @ J)
    return 0.5 * (cov + cov.T), True


# ---------------------------------------------------------------------------
# models


def hyperbola(V, a: float, b: float, v0: float):
    """beta(V) = sqrt(a^2 (V - V0)^2 + b^2), minimum |b| at V = V0."""
    V = np.asarray(V, dtype=float)
    return np.sqrt(a**2 * (V - v0) ** 2 + b**2)


def hyperbola_problem(V, beta, sigma=None, guess: dict | None = None) -> FitProblem:
    """Three-parameter hyperbola fit. Default guesses come from the data."""
    V = np.asarray(V, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if len(V) < 3:
        raise ValueError("need at least 3 points")
    k = int(np.argmin(beta))
    span = float(np.ptp(V)) or 1.0
    slope = float(np.ptp(beta)) / span * 2
    g = {"a": max(slope, 1e-3), "b": max(float(beta[k]), 1e-3), "v0": float(V[k])}
    g.update(guess or {})
    params = (
        Parameter("a", g["a"], 0.0, max(100 * g["a"], 1e3)),
        Parameter("b", g["b"], 0.0, max(100 * g["b"], 1e2)),
        Parameter("v0", g["v0"], float(V.min()) - span, float(V.max()) + span),
    )
    return FitProblem(V, beta, sigma, lambda x, p: hyperbola(x, p["a"], p["b"], p["v0"]), params, "hyperbola")


def temperature_model(beta, c_rf_e20: float, detuning_mhz: float, p: ThermoParams = ThermoParams()):
    """Balance temperature in mK; C_RF in units of 1e-20 J/s, detuning in MHz."""
    return 1e3 * temperature_expression(beta, mhz_to_angular(detuning_mhz), c_rf_e20 * 1e-20, p)


def temperature_problem(
    beta,
    T_mk,
    sigma_mk=None,
    include_rf: bool = True,
    guess: dict | None = None,
    thermo: ThermoParams = ThermoParams(),
) -> FitProblem:
    beta = np.asarray(beta, dtype=float)
    if len(beta) < 3:
        raise ValueError("need at least 3 points")
    g = {"c_rf": 5.0 if include_rf else 0.0, "detuning": -10.0}
    g.update(guess or {})
    gamma_mhz = thermo.gamma / (2 * math.pi)
    params = (
        Parameter("c_rf", g["c_rf"], 0.0, 1e3, free=include_rf),
        Parameter("detuning", g["detuning"], -5 * gamma_mhz, -1e-3),
    )
    return FitProblem(
        beta, T_mk, sigma_mk,
        lambda x, q: temperature_model(x, q["c_rf"], q["detuning"], thermo),
        params, "temperature_model",
    )


def fit_temperature_model(beta, T_mk, sigma_mk=None, include_rf: bool = True, **kw) -> FitResult:
    """Fit the balance temperature T(beta) with free (C_RF, Delta) or only Delta."""
    guess = kw.pop("guess", None)
    thermo = kw.pop("thermo", ThermoParams())
    return fit(temperature_problem(beta, T_mk, sigma_mk, include_rf, guess, thermo), **kw)


# spectrum models: counts = scale * fluorescence + background

SINGLE_ION_DEFAULTS = {
    "beta": (1.0, 0.0, 5.0),
    "temperature_mk": (1.0, 0.0, 20.0),
    "rabi_uv": (10.0, 0.1, 50.0),
    "rabi_ir": (10.0, 0.1, 50.0),
    "scale": (1.0, 0.0, 1e9),
    "background": (0.0, -1e9, 1e9),
    "offset": (0.0, -5.0, 5.0),
}
SINGLE_ION_FREE = ("beta", "temperature_mk", "scale", "background")


def _setup_with(setup: SpectrumSetup, p: dict, beta_max: float) -> SpectrumSetup:
    uv = replace(setup.uv, rabi=mhz_to_angular(p["rabi_uv"]))
    ir = replace(setup.ir, rabi=mhz_to_angular(p["rabi_ir"]))
    cfg = FloquetConfig.for_beta(beta_max, residual_tol=setup.floquet.residual_tol)
    return replace(setup, uv=uv, ir=ir, floquet=cfg)


def _make_params(defaults, guess, free, bounds):
    out = []
    for name, (val, lo, hi) in defaults.items():
        lo, hi = (bounds or {}).get(name, (lo, hi))
        out.append(Parameter(name, float((guess or {}).get(name, val)), lo, hi, name in free))
    return tuple(out)


def _cached(fn, size: int = 8):
    """Memoize ``fn(key)`` for the last ``size`` keys.

    Jacobian columns for scale and background reuse the fluorescence of the
    central point instead of re-solving the steady state.
    """
    store: dict = {}

    def wrapped(key):
        if key not in store:
            if len(store) >= size:
                store.pop(next(iter(store)))
            store[key] = fn(key)
        return store[key]

    return wrapped


def single_ion_model(setup: SpectrumSetup, beta_max: float = 5.0):
    """Model function for :class:`FitProblem`; x is the IR detuning grid in MHz.

    The Floquet truncation is fixed by ``beta_max`` so the model is a smooth
    function of beta inside the bounds.
    """

    def fluor(key):
        x, beta, temperature_mk, rabi_uv, rabi_ir, offset = key
        s = _setup_with(setup, {"rabi_uv": rabi_uv, "rabi_ir": rabi_ir}, beta_max)
        return scan_spectrum(
            s.system, s.uv, s.ir, s.field, TrapDrive(s.omega_rf, beta),
            np.asarray(x) - offset, temperature_mk * 1e-3, s.floquet,
        ).values

    fluor = _cached(fluor)

    def model(x, p):
        key = (tuple(np.asarray(x, dtype=float)), p["beta"], p["temperature_mk"], p["rabi_uv"], p["rabi_ir"], p["offset"])
        return p["scale"] * fluor(key) + p["background"]

    return model


def single_ion_problem(
    data: Spectrum,
    setup: SpectrumSetup = SpectrumSetup(),
    guess: dict | None = None,
    free: Sequence[str] = SINGLE_ION_FREE,
    bounds: dict | None = None,
) -> FitProblem:
    """Spectrum fit with parameters beta, temperature_mk, rabi_uv, rabi_ir
    (MHz), scale, background and offset (MHz, shifts the model grid)."""
    params = _make_params(SINGLE_ION_DEFAULTS, guess, set(free), bounds)
    beta_max = next(p.upper if p.free else p.value for p in params if p.name == "beta")
    return FitProblem(data.detunings, data.values, data.sigmas, single_ion_model(setup, beta_max), params, "single_ion")


def multi_ion_model(setup: SpectrumSetup, n_ions: int, beta_max: float = 5.0):
    """Sum of ``n_ions`` equally bright single-ion spectra."""
    single = single_ion_model(setup, beta_max)

    def model(x, p):
        total = 0.0
        for i in range(1, n_ions + 1):
            q = {**p, "beta": p[f"beta_{i}"], "temperature_mk": p[f"temperature_mk_{i}"], "scale": 1.0, "background": 0.0}
            total = total + single(x, q)
        return p["scale"] * total + p["background"]

    return model


def multi_ion_problem(
    data: Spectrum,
    n_ions: int = 2,
    setup: SpectrumSetup = SpectrumSetup(),
    guess: dict | None = None,
    free: Sequence[str] | None = None,
    bounds: dict | None = None,
) -> FitProblem:
    if n_ions < 1:
        raise ValueError("n_ions must be >= 1")
    defaults = {}
    for i in range(1, n_ions + 1):
        defaults[f"beta_{i}"] = SINGLE_ION_DEFAULTS["beta"]
        defaults[f"temperature_mk_{i}"] = SINGLE_ION_DEFAULTS["temperature_mk"]
    for k in ("rabi_uv", "rabi_ir", "scale", "background", "offset"):
        defaults[k] = SINGLE_ION_DEFAULTS[k]
    if free is None:
        free = [k for k in defaults if k.startswith(("beta_", "temperature_mk_"))] + ["scale", "background"]
    params = _make_params(defaults, guess, set(free), bounds)
    beta_max = max(p.upper if p.free else p.value for p in params if p.name.startswith("beta_"))
    return FitProblem(data.detunings, data.values, data.sigmas, multi_ion_model(setup, n_ions, beta_max), params, "multi_ion")


# ---------------------------------------------------------------------------
# multi-start


@dataclass
class LocalMinimum:
    estimates: dict[str, float]
    chi2: float
    reduced_chi2: float
    count: int  # starts that ended here
    result: FitResult


def canonical_ions(estimates: dict[str, float]) -> dict[str, float]:
    """Relabel ions so beta_1 <= beta_2 <= ... (the model is symmetric under swaps)."""
    idx = sorted(int(k.split("_")[1]) for k in estimates if k.startswith("beta_"))
    if not idx:
        return dict(estimates)
    order = sorted(idx, key=lambda i: estimates[f"beta_{i}"])
    out = dict(estimates)
    for new, old in zip(idx, order):
        out[f"beta_{new}"] = estimates[f"beta_{old}"]
        if f"temperature_mk_{old}" in estimates:
            out[f"temperature_mk_{new}"] = estimates[f"temperature_mk_{old}"]
    return out


def multistart_fit(
    problem: FitProblem,
    n_starts: int = 8,
    seed: int = 0,
    vary: Sequence[str] | None = None,
    distinct_tol: float = 0.05,
    **fit_kw,
) -> list[LocalMinimum]:
    """Fit from ``n_starts`` random initial points and group the end points.

    Starting values of the parameters in ``vary`` (default: all free
    parameters) are drawn uniformly inside their bounds with a seeded
    generator; the others keep their initial values. End points are
    canonicalized (ion labels sorted by beta) and merged when every varied
    parameter agrees within ``distinct_tol`` relative to its bound width.
    Minima are returned sorted by chi2.
    """
    rng = np.random.default_rng(seed)
    free = {p.name: p for p in problem.parameters if p.free}
    vary = list(free) if vary is None else list(vary)
    minima: list[LocalMinimum] = []
    for _ in range(n_starts):
        start = {k: float(rng.uniform(free[k].lower, free[k].upper)) for k in vary}
        res = fit(problem.with_values(**start), **fit_kw)
        est = canonical_ions(res.estimates)
        for mn in minima:
            if all(
                abs(est[k] - mn.estimates[k]) <= distinct_tol * (free[k].upper - free[k].lower)
                for k in vary
            ):
                mn.count += 1
                if res.chi2 < mn.chi2:
                    mn.estimates, mn.chi2, mn.reduced_chi2, mn.result = est, res.chi2, res.reduced_chi2, res
                break
        else:
            minima.append(LocalMinimum(est, res.chi2, res.reduced_chi2, 1, res))
    return sorted(minima, key=lambda mn: mn.chi2)
