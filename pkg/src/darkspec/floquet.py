"""Time-averaged steady state of the micromotion-modulated Liouvillian.

With L(t) = L0 + beta*Omega*dL*cos(Omega t) and the long-time ansatz
rho(t) = sum_n rho_n exp(i n Omega t), the Fourier components obey

    (L0 - i n Omega) rho_n + (beta Omega / 2) dL (rho_{n+1} + rho_{n-1}) = 0.

Truncating rho_{+-(N+1)} = 0 (ladder operators S_{+-N} = 0) and eliminating
the sidebands through rho_{n+1} = S+_n rho_n (n >= 0), rho_{n-1} = S-_n rho_n
(n <= 0) leaves a closed equation for the mean component rho_0.

All solvers broadcast over leading axes of ``L0`` so a whole detuning grid
is handled by batched LAPACK calls.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import jv

from .liouvillian import TrapDrive, identity_vector, unvec


class SteadyStateError(RuntimeError):
    """The steady-state linear system is singular or badly conditioned."""


@dataclass(frozen=True)
class FloquetConfig:
    n_max: int = 5
    residual_tol: float = 1e-8

    def __post_init__(self):
        if int(self.n_max) != self.n_max or self.n_max < 1:
            raise ValueError("n_max must be a positive integer")

    @classmethod
    def for_beta(cls, beta: float, tol: float = 1e-8, **kw) -> "FloquetConfig":
        return cls(n_max=bessel_n_max(beta, tol), **kw)


def bessel_n_max(beta: float, tol: float = 1e-8, minimum: int = 1) -> int:
    """Smallest N with |J_n(beta)| < tol for every n > N.

    J_n(beta) decreases monotonically in n once n > beta, so it suffices to
    scan upward from there.
    """
    n = max(minimum, int(np.ceil(beta)))
    while abs(jv(n + 1, beta)) >= tol:
        n += 1
    return n


def _solve(A, B):
    try:
        return np.linalg.solve(A, B)
    except np.linalg.LinAlgError as exc:
        raise SteadyStateError(str(exc)) from exc


def _matvec(A, x):
    return np.einsum("...ij,...j->...i", A, x)


def invariant_subspace(L0: np.ndarray, dL: np.ndarray | None = None) -> np.ndarray:
    """Liouville-space indices reachable from the populations.

    The returned coordinate subspace contains every population and is
    mapped into itself by L0 and dL (union of sparsity patterns over any
    batch axes). Steady states and all their Fourier components live in it;
    coherences outside are never generated. For sigma+/sigma- light on both
    transitions this halves the dimension.
    """
    L0 = np.asarray(L0)
    pattern = np.any(L0 != 0, axis=tuple(range(L0.ndim - 2)))
    if dL is not None:
        pattern = pattern | (np.asarray(dL) != 0)
    dim = pattern.shape[0]
    d = int(round(np.sqrt(dim)))
    seen = np.zeros(dim, dtype=bool)
    frontier = list(range(0, dim, d + 1))
    seen[frontier] = True
    while frontier:
        j = frontier.pop()
        for i in np.flatnonzero(pattern[:, j] & ~seen):
            seen[i] = True
            frontier.append(i)
    return np.flatnonzero(seen)


def _bordered_solve(L0, trace_vector, residual_tol):
    A = L0.copy()
    A[..., 0, :] = trace_vector
    b = np.zeros(L0.shape[:-1], dtype=complex)
    b[..., 0] = 1.0
    rho = _solve(A, b[..., None])[..., 0]
    if not np.all(np.isfinite(rho)):
        raise SteadyStateError("non-finite steady state")
    resid = np.linalg.norm(_matvec(L0, rho), axis=-1)
    scale = np.maximum(np.linalg.norm(L0, axis=(-2, -1)), 1.0)
    if np.any(resid > residual_tol * scale):
        raise SteadyStateError(
            f"steady state residual {float(np.max(resid / scale)):.3e} exceeds tolerance; "
            "the null space of L0 is probably degenerate"
        )
    return rho


def _check_hermitian(rho_vec, tol=1e-8):
    """A degenerate null space makes the bordered system singular; the LU
    solve then returns an arbitrary, generally non-Hermitian, mix of
    stationary states instead of failing, so that is what gets checked."""
    rho = unvec(rho_vec)
    dev = np.max(np.abs(rho - np.swapaxes(rho.conj(), -1, -2)), axis=(-2, -1))
    if np.any(dev > tol):
        bad = np.flatnonzero(np.atleast_1d(dev) > tol)
        raise SteadyStateError(
            f"steady state is not unique (non-Hermitian solution, deviation {float(np.max(dev)):.2e}"
            f" at batch index {bad[:5].tolist()}); e.g. dark Zeeman states at B = 0"
        )
    return rho_vec


def steady_state_unmodulated(L0: np.ndarray, residual_tol: float = 1e-8) -> np.ndarray:
    """Solve L0 rho = 0 with tr(rho) = 1.

    The first row of L0 (the equation for rho[0, 0]) is replaced by the trace
    condition. A null space of dimension > 1 makes the bordered matrix
    singular, which raises :class:`SteadyStateError`.
    """
    L0 = np.asarray(L0)
    d = int(round(np.sqrt(L0.shape[-1])))
    return _check_hermitian(_bordered_solve(L0, identity_vector(d), residual_tol))


def _ladder(L0, dL, drive, cfg, sign):
    """Ladder operators on one side, keyed by index n (0, +-1, ...)."""
    L0 = np.asarray(L0)
    b = 0.5 * drive.beta * drive.omega_rf
    S = np.zeros(L0.shape, dtype=complex)
    if b == 0:
        return {sign * m: S for m in range(cfg.n_max)}
    dL = np.asarray(dL)
    diag = np.diagonal(dL)
    if np.count_nonzero(dL - np.diag(diag)) == 0:
        bd = (b * diag)[:, None]
        rhs = np.broadcast_to(np.diag(b * diag), L0.shape)

        def apply(S):
            return bd * S
    else:
        rhs = np.broadcast_to(b * dL, L0.shape)

        def apply(S):
            return rhs @ S

    eye = np.eye(L0.shape[-1])
    out = {}
    for m in range(cfg.n_max, 0, -1):
        n = sign * m
        S = -_solve(L0 - 1j * n * drive.omega_rf * eye + apply(S), rhs)
        out[n - sign] = S
    return out


def s_chain(
    L0: np.ndarray,
    dL: np.ndarray,
    drive: TrapDrive,
    cfg: FloquetConfig = FloquetConfig(),
    sign: int = +1,
) -> np.ndarray:
    """Ladder operator S+_0 (sign=+1) or S-_0 (sign=-1) in the full space.

    Backward recursion from S_{+-N} = 0:

        S+_{n-1} = -(L0 - i n Omega + b dL S+_n)^-1 b dL,   n = N .. 1
        S-_{n+1} = -(L0 - i n Omega + b dL S-_n)^-1 b dL,   n = -N .. -1

    with b = beta*Omega/2. Exactly zero when beta = 0.
    """
    if sign not in (+1, -1):
        raise ValueError("sign must be +1 or -1")
    return _ladder(L0, dL, drive, cfg, sign)[0]


def _sideband_term(L0, dL, drive, cfg):
    """b dL (S+_0 + S-_0), the closure term of the rho_0 equation.

    For diagonal dL only the rows and columns P where dL is nonzero are
    touched, so the recursion runs on the P block with the rest (Q)
    eliminated by a Schur complement:

        C_n = (A_PP - A_PQ A_QQ^-1 A_QP),  A = L0 - i n Omega
        T_{n-1} = -(C_n + b D_P T_n)^-1 b D_P
    """
    b = 0.5 * drive.beta * drive.omega_rf
    diag = np.diagonal(dL)
    if np.count_nonzero(dL - np.diag(diag)) != 0:
        S_sum = _ladder(L0, dL, drive, cfg, +1)[0] + _ladder(L0, dL, drive, cfg, -1)[0]
        return b * dL @ S_sum
    P = np.flatnonzero(diag)
    Q = np.flatnonzero(diag == 0)
    bd = b * diag[P]
    A_PP = L0[..., P[:, None], P]
    A_PQ = L0[..., P[:, None], Q]
    A_QP = L0[..., Q[:, None], P]
    A_QQ = L0[..., Q[:, None], Q]
    eye_p, eye_q = np.eye(len(P)), np.eye(len(Q))
    rhs = np.broadcast_to(np.diag(bd), A_PP.shape)
    total = np.zeros(A_PP.shape, dtype=complex)
    for sign in (+1, -1):
        T = np.zeros(A_PP.shape, dtype=complex)
        for m in range(cfg.n_max, 0, -1):
            shift = 1j * sign * m * drive.omega_rf
            C = A_PP - shift * eye_p
            if len(Q):
                C = C - A_PQ @ _solve(A_QQ - shift * eye_q, A_QP)
            T = -_solve(C + bd[:, None] * T, rhs)
        total += bd[:, None] * T
    out = np.zeros(L0.shape, dtype=complex)
    out[..., P[:, None], P] = total
    return out


def _restrict(L0, dL, reduce):
    L0 = np.asarray(L0)
    dim = L0.shape[-1]
    idx = invariant_subspace(L0, dL) if reduce else np.arange(dim)
    d = int(round(np.sqrt(dim)))
    return idx, L0[..., idx[:, None], idx], np.asarray(dL)[np.ix_(idx, idx)], identity_vector(d)[idx]


def _embed(x_r, idx, dim):
    out = np.zeros(x_r.shape[:-1] + (dim,), dtype=complex)
    out[..., idx] = x_r
    return out


def floquet_steady_state(
    L0: np.ndarray,
    dL: np.ndarray,
    drive: TrapDrive,
    cfg: FloquetConfig = FloquetConfig(),
    reduce: bool = True,
) -> np.ndarray:
    """Mean Fourier component rho_0 of the periodic steady state (trace 1).

    Solves (L0 + b dL (S+_0 + S-_0)) rho_0 = 0 with the trace row. With
    ``reduce`` the algebra runs in :func:`invariant_subspace`, which is exact.
    """
    L0 = np.asarray(L0)
    idx, L0r, dLr, tr = _restrict(L0, dL, reduce)
    b = 0.5 * drive.beta * drive.omega_rf
    A = L0r if b == 0 else L0r + _sideband_term(L0r, dLr, drive, cfg)
    return _check_hermitian(_embed(_bordered_solve(A, tr, cfg.residual_tol), idx, L0.shape[-1]))


def floquet_harmonics(
    L0: np.ndarray,
    dL: np.ndarray,
    drive: TrapDrive,
    cfg: FloquetConfig = FloquetConfig(),
    order: int = 1,
) -> dict[int, np.ndarray]:
    """Fourier components rho_n for |n| <= order (order < n_max)."""
    if not 0 <= order < cfg.n_max:
        raise ValueError("order must lie in [0, n_max)")
    L0 = np.asarray(L0)
    idx, L0r, dLr, _ = _restrict(L0, dL, True)
    rho0 = floquet_steady_state(L0, dL, drive, cfg)
    out = {0: rho0}
    for sign in (+1, -1):
        ladder = _ladder(L0r, dLr, drive, cfg, sign)
        rho = rho0[..., idx]
        for m in range(order):
            rho = _matvec(ladder[sign * m], rho)
            out[sign * (m + 1)] = _embed(rho, idx, L0.shape[-1])
    return out


def density_matrix(rho_vec: np.ndarray) -> np.ndarray:
    return unvec(rho_vec)


def check_density(rho_vec: np.ndarray, atol: float = 1e-9) -> None:
    """Raise ValueError unless rho is Hermitian, unit-trace, with populations in [0, 1]."""
    rho = unvec(rho_vec)
    herm = np.max(np.abs(rho - np.swapaxes(rho.conj(), -1, -2)))
    if herm > atol:
        raise ValueError(f"density matrix not Hermitian (max deviation {herm:.2e})")
    tr = np.trace(rho, axis1=-2, axis2=-1)
    if np.max(np.abs(tr - 1)) > atol:
        raise ValueError(f"trace deviates from 1 by {np.max(np.abs(tr - 1)):.2e}")
    pops = np.real(np.diagonal(rho, axis1=-2, axis2=-1))
    if pops.min() < -atol or pops.max() > 1 + atol:
        raise ValueError("populations outside [0, 1]")
