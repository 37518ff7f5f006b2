import numpy as np
import pytest
from hypothesis import settings

from darkspec.atomic import AtomicSystem, LaserField, MagneticField, build_hamiltonian
from darkspec.liouvillian import build_dL, build_L0
from darkspec.units import mhz_to_angular

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")


def make_lasers(rabi_uv=10.0, rabi_ir=10.0, det_uv=-25.0, det_ir=-10.0, lw_uv=0.0, lw_ir=0.0,
                pol_uv=None, pol_ir=None):
    """UV and IR lasers from MHz inputs."""
    kw_uv = {} if pol_uv is None else {"polarization": pol_uv}
    kw_ir = {} if pol_ir is None else {"polarization": pol_ir}
    uv = LaserField(mhz_to_angular(rabi_uv), mhz_to_angular(det_uv), mhz_to_angular(lw_uv), 397.0, label="UV", **kw_uv)
    ir = LaserField(mhz_to_angular(rabi_ir), mhz_to_angular(det_ir), mhz_to_angular(lw_ir), 866.0, label="IR", **kw_ir)
    return uv, ir


def make_L0(b_gauss=4.0, sys=AtomicSystem(), **kw):
    uv, ir = make_lasers(**kw)
    H = build_hamiltonian(sys, uv, ir, MagneticField(b_gauss))
    return build_L0(H, sys, uv, ir)


@pytest.fixture
def system():
    return AtomicSystem()


@pytest.fixture
def dL(system):
    return build_dL(system)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance_report():
    """Collects one summary line per acceptance criterion."""
    return ACCEPTANCE_LINES.append


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
