"""Vectorized master equation.

Density matrices are vectorized by stacking columns (Fortran order):
``vec(rho)[i + 8*j] = rho[i, j]``. With that convention
``vec(A @ rho @ B) = kron(B.T, A) @ vec(rho)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .atomic import AtomicSystem, LaserField, N_LEVELS, decay_operators, projector
from .units import TWO_PI


@dataclass(frozen=True)
class TrapDrive:
    """RF drive seen by the ion: frequency (rad/us) and UV modulation index."""

    omega_rf: float = TWO_PI * 22.1
    beta: float = 0.0

    def __post_init__(self):
        if not self.omega_rf > 0:
            raise ValueError("omega_rf must be positive")
        if self.beta < 0:
            raise ValueError("beta must be >= 0")


@dataclass(frozen=True)
class LiouvillianPair:
    L0: np.ndarray
    dL: np.ndarray


def vec(rho: np.ndarray) -> np.ndarray:
    """Column-stack a (..., d, d) array into (..., d*d)."""
    rho = np.asarray(rho)
    d = rho.shape[-1]
    return np.swapaxes(rho, -1, -2).reshape(rho.shape[:-2] + (d * d,))


def unvec(v: np.ndarray) -> np.ndarray:
    """Inverse of :func:`vec`."""
    v = np.asarray(v)
    d = int(round(np.sqrt(v.shape[-1])))
    return np.swapaxes(v.reshape(v.shape[:-1] + (d, d)), -1, -2)


def identity_vector(d: int = N_LEVELS) -> np.ndarray:
    return vec(np.eye(d))


def spre(A: np.ndarray) -> np.ndarray:
    """Superoperator of rho -> A rho."""
    return np.kron(np.eye(A.shape[0]), A)


def spost(A: np.ndarray) -> np.ndarray:
    """Superoperator of rho -> rho A."""
    return np.kron(A.T, np.eye(A.shape[0]))


def commutator(H: np.ndarray) -> np.ndarray:
    """Superoperator of rho -> -i [H, rho]."""
    return -1j * (spre(H) - spost(H))


def dissipator(C: np.ndarray) -> np.ndarray:
    """Superoperator of rho -> C rho C^+ - {C^+ C, rho}/2."""
    CdC = C.conj().T @ C
    return np.kron(C.conj(), C) - 0.5 * spre(CdC) - 0.5 * spost(CdC)


def build_L0(
    H: np.ndarray,
    sys: AtomicSystem,
    uv: LaserField,
    ir: LaserField,
    extra_dephasing_uv: float = 0.0,
    extra_dephasing_ir: float = 0.0,
) -> np.ndarray:
    """Liouvillian without micromotion.

    Laser phase noise is a Lindblad dephasing ``sqrt(2 g) * Proj`` on the
    lower manifold each laser addresses, so S-P coherences decay at
    ``g_uv = uv.linewidth + extra_dephasing_uv``, D-P coherences at
    ``g_ir`` and S-D coherences at ``g_uv + g_ir``.
    """
    H = np.asarray(H)
    if not np.allclose(H, H.conj().T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(H).max())):
        raise ValueError("Hamiltonian is not Hermitian")
    L = commutator(H) + decay_superoperator(sys)
    g_uv = uv.linewidth + extra_dephasing_uv
    g_ir = ir.linewidth + extra_dephasing_ir
    if g_uv < 0 or g_ir < 0:
        raise ValueError("dephasing rates must be non-negative")
    if g_uv:
        L += dissipator(np.sqrt(2 * g_uv) * projector("S"))
    if g_ir:
        L += dissipator(np.sqrt(2 * g_ir) * projector("D"))
    return L


@lru_cache(maxsize=32)
def decay_superoperator(sys: AtomicSystem) -> np.ndarray:
    """Spontaneous-emission part of the Liouvillian (read-only)."""
    out = sum(dissipator(C) for C in decay_operators(sys))
    out.flags.writeable = False
    return out


def modulation_operator(sys: AtomicSystem) -> np.ndarray:
    """Diagonal M with H(t) = H + beta*Omega_RF*cos(Omega_RF t) * M.

    Both detunings are shifted by the Doppler term; the IR one is scaled by
    lambda_UV/lambda_IR because the beams co-propagate.
    """
    return projector("S") + sys.wavelength_ratio * projector("D")


def build_dL(sys: AtomicSystem) -> np.ndarray:
    """Micromotion modulation superoperator, -i[M, .]."""
    return commutator(modulation_operator(sys))


def build_pair(H, sys, uv, ir, extra_dephasing_uv=0.0, extra_dephasing_ir=0.0) -> LiouvillianPair:
    return LiouvillianPair(
        build_L0(H, sys, uv, ir, extra_dephasing_uv, extra_dephasing_ir), build_dL(sys)
    )
