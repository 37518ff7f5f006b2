import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from sympy import Rational
from sympy.physics.quantum.cg import CG

from darkspec.atomic import (
    D_LEVELS,
    M_VALUES,
    P_LEVELS,
    S_LEVELS,
    AtomicSystem,
    LaserField,
    MagneticField,
    build_hamiltonian,
    clebsch_gordan,
    coupling_operators,
    decay_branching,
    decay_operators,
    zeeman_shifts,
)
from darkspec.units import MU_B, TWO_PI, angular_to_mhz, mhz_to_angular

from conftest import make_lasers

half = Rational(1, 2)


def test_level_convention_is_fixed():
    assert S_LEVELS == (0, 1) and P_LEVELS == (2, 3) and D_LEVELS == (4, 5, 6, 7)
    assert list(M_VALUES) == [-0.5, 0.5, -0.5, 0.5, -1.5, -0.5, 0.5, 1.5]
    assert AtomicSystem().n_levels == 8


def test_system_validation():
    with pytest.raises(ValueError):
        AtomicSystem(branching_S=0.9, branching_D=0.06)
    with pytest.raises(ValueError):
        AtomicSystem(gamma_total=0.0)
    with pytest.raises(ValueError):
        AtomicSystem(g_D=float("nan"))
    AtomicSystem(branching_S=0.94 + 5e-13, branching_D=0.06)


def test_laser_validation():
    with pytest.raises(ValueError):
        LaserField(1.0, 0.0, polarization=(1.0, 1.0))
    with pytest.raises(ValueError):
        LaserField(-1.0, 0.0)
    with pytest.raises(ValueError):
        LaserField(1.0, 0.0, linewidth=-0.1)
    with pytest.raises(ValueError):
        LaserField(1.0, 0.0, label="green")
    with pytest.raises(ValueError):
        MagneticField(-1.0)


@pytest.mark.parametrize("j1,j2,j", [(half, 1, half), (3 * half, 1, half), (1, 1, 1), (1, 1, 2), (3 * half, 1, 5 * half)])
def test_clebsch_gordan_against_sympy(j1, j2, j):
    for m1 in np.arange(-float(j1), float(j1) + 1):
        for m2 in np.arange(-float(j2), float(j2) + 1):
            m = m1 + m2
            if abs(m) > j:
                continue
            ref = float(CG(j1, Rational(m1).limit_denominator(2), j2, Rational(m2).limit_denominator(2), j,
                           Rational(m).limit_denominator(2)).doit())
            assert clebsch_gordan(float(j1), m1, float(j2), m2, float(j), m) == pytest.approx(ref, abs=1e-14)


def test_clebsch_gordan_selection_rules():
    assert clebsch_gordan(0.5, 0.5, 1, 1, 0.5, 0.5) == 0.0  # m not conserved
    assert clebsch_gordan(0.5, 0.5, 1, 0, 2.5, 0.5) == 0.0  # triangle violated


def test_zeeman_zero_field(system):
    assert np.all(zeeman_shifts(system, MagneticField(0.0)) == 0)


def test_zeeman_ground_splitting_at_4_gauss(system):
    z = zeeman_shifts(system, MagneticField(4.0))
    # Bohr magneton 1.39962 MHz/G from CODATA
    assert angular_to_mhz(MU_B) == pytest.approx(1.3996245, rel=1e-6)
    assert angular_to_mhz(z[1] - z[0]) == pytest.approx(2 * 1.3996245 * 4, rel=1e-6)
    assert angular_to_mhz(z[1] - z[0]) == pytest.approx(11.197, abs=1e-3)


@given(st.floats(0, 20), st.floats(0.1, 3), st.floats(0.1, 3), st.floats(0.1, 3))
def test_zeeman_odd_in_m_and_linear_in_b(b, gs, gp, gd):
    sys = AtomicSystem(g_S=gs, g_P=gp, g_D=gd)
    z = zeeman_shifts(sys, MagneticField(b))
    for group in (S_LEVELS, P_LEVELS, D_LEVELS):
        vals = z[list(group)]
        assert np.allclose(vals, -vals[::-1], atol=1e-12)
    assert np.allclose(zeeman_shifts(sys, MagneticField(2 * b)), 2 * z, rtol=1e-12, atol=1e-12)


def test_coupling_selection_rules(system):
    ops = coupling_operators(system)
    for label, lower in (("UV", S_LEVELS), ("IR", D_LEVELS)):
        for q, A in zip((-1, 1), ops[label]):
            for p in range(8):
                for l in range(8):
                    allowed = p in P_LEVELS and l in lower and math.isclose(M_VALUES[p], M_VALUES[l] + q)
                    assert (A[p, l] != 0) == allowed, (label, q, p, l)
    # sigma+ on S-P: only S(-1/2) -> P(+1/2)
    assert np.flatnonzero(ops["UV"][1]).tolist() == [3 * 8 + 0]
    # sigma+ from D(+3/2) goes nowhere
    assert np.all(ops["IR"][1][:, 7] == 0)


def test_coupling_normalization(system):
    ops = coupling_operators(system)
    assert max(np.abs(ops["UV"][0]).max(), np.abs(ops["UV"][1]).max()) == pytest.approx(1.0)
    assert max(np.abs(ops["IR"][0]).max(), np.abs(ops["IR"][1]).max()) == pytest.approx(1.0)
    ir = np.abs(ops["IR"][0]) + np.abs(ops["IR"][1])
    assert sorted(np.round(ir[ir > 0], 12)) == sorted(np.round([1, 1, 1 / math.sqrt(3), 1 / math.sqrt(3)], 12))


def test_decay_completeness(system):
    rates = decay_branching(system)
    total = rates.sum(axis=0)
    assert np.allclose(total[list(P_LEVELS)], system.gamma_total, rtol=1e-12)
    assert np.allclose(total[list(S_LEVELS) + list(D_LEVELS)], 0.0)
    to_s = rates[list(S_LEVELS)].sum(axis=0)[list(P_LEVELS)]
    assert np.allclose(to_s, 0.94 * system.gamma_total, rtol=1e-12)
    # squared CG coefficients per P level sum to one in each manifold
    for lower, br in ((S_LEVELS, 0.94), (D_LEVELS, 0.06)):
        frac = rates[list(lower)][:, list(P_LEVELS)].sum(axis=0) / (br * system.gamma_total)
        assert np.allclose(frac, 1.0, rtol=1e-12)
    assert len(decay_operators(system)) == 6


def test_zero_hamiltonian(system):
    uv, ir = make_lasers(0.0, 0.0, 0.0, 0.0)
    assert np.all(build_hamiltonian(system, uv, ir, MagneticField(0.0)) == 0)


def test_hamiltonian_coupling_count(system):
    uv, ir = make_lasers()
    H = build_hamiltonian(system, uv, ir, MagneticField(4.0))
    upper = np.triu(H, 1)
    pairs = {(int(i), int(j)) for i, j in zip(*np.nonzero(upper))}
    # brute-force enumeration of dipole-allowed sigma pairs
    expected = set()
    for lower in S_LEVELS + D_LEVELS:
        for p in P_LEVELS:
            if abs(abs(M_VALUES[p] - M_VALUES[lower]) - 1) < 1e-12:
                expected.add((min(lower, p), max(lower, p)))
    assert pairs == expected
    assert len(pairs) == 6  # 2 S-P and 4 D-P


def test_hamiltonian_diagonal_and_couplings(system):
    uv, ir = make_lasers(det_uv=-25.0, det_ir=7.0)
    B = MagneticField(4.0)
    H = build_hamiltonian(system, uv, ir, B)
    z = zeeman_shifts(system, B)
    diag = np.real(np.diag(H))
    assert np.allclose(diag[list(S_LEVELS)], uv.detuning + z[list(S_LEVELS)])
    assert np.allclose(diag[list(D_LEVELS)], ir.detuning + z[list(D_LEVELS)])
    assert np.allclose(diag[list(P_LEVELS)], z[list(P_LEVELS)])
    # strongest sigma line: rabi/2 * polarization amplitude
    assert abs(H[3, 0]) == pytest.approx(uv.rabi / 2 / math.sqrt(2))


def test_hamiltonian_rejects_bad_inputs(system):
    uv, ir = make_lasers()
    with pytest.raises(ValueError):
        build_hamiltonian(system, ir, uv, MagneticField(1.0))
    object.__setattr__(uv, "polarization", (1.0, 0.5))
    with pytest.raises(ValueError):
        build_hamiltonian(system, uv, ir, MagneticField(1.0))


pol = st.tuples(st.floats(0, 2 * math.pi), st.floats(0, math.pi / 2)).map(
    lambda t: (math.cos(t[1]) * complex(math.cos(t[0]), math.sin(t[0])), math.sin(t[1]))
)


@given(
    st.floats(0, 50), st.floats(0, 50), st.floats(-100, 100), st.floats(-100, 100),
    st.floats(0, 10), pol, pol,
)
def test_hamiltonian_hermitian(ruv, rir, duv, dir_, b, puv, pir):
    uv, ir = make_lasers(ruv, rir, duv, dir_, pol_uv=puv, pol_ir=pir)
    H = build_hamiltonian(AtomicSystem(), uv, ir, MagneticField(b))
    assert np.max(np.abs(H - H.conj().T)) <= 1e-12


def test_unit_conversions():
    assert mhz_to_angular(1.0) == pytest.approx(TWO_PI)
    assert angular_to_mhz(mhz_to_angular(22.1)) == pytest.approx(22.1)
