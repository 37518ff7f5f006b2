import numpy as np
import pytest

from darkspec.config import (
    SCHEMA,
    ConfigError,
    RunConfig,
    annotated_example,
    parse_config,
    read_config,
    required_keys,
)
from darkspec.units import mhz_to_angular

MINIMAL = """
[uv]
detuning_mhz = -25
[scan]
ir_start_mhz = -40
ir_stop_mhz = 40
"""


def test_required_keys():
    assert required_keys() == ["uv.detuning_mhz", "scan.ir_start_mhz", "scan.ir_stop_mhz"]


def test_empty_text_lists_missing_keys():
    with pytest.raises(ConfigError, match="missing required keys: uv.detuning_mhz, scan.ir_start_mhz, scan.ir_stop_mhz"):
        parse_config("")


def test_defaults_applied():
    cfg = parse_config(MINIMAL)
    assert isinstance(cfg, RunConfig)
    for sec, keys in SCHEMA.items():
        assert set(cfg[sec]) == set(keys)
    assert cfg["trap"]["omega_rf_mhz"] == 22.1
    assert cfg["scan"]["n_points"] == 401
    assert cfg["uv"]["polarization"] == "linear"


def test_objects_in_internal_units():
    cfg = parse_config(MINIMAL + "[trap]\nbeta = 1.5\n")
    assert cfg.uv().detuning == pytest.approx(mhz_to_angular(-25))
    assert cfg.uv().rabi == pytest.approx(mhz_to_angular(10))
    assert cfg.drive().omega_rf == pytest.approx(mhz_to_angular(22.1))
    assert cfg.drive().beta == 1.5
    assert cfg.drive(0.3).beta == 0.3
    assert np.allclose(cfg.grid(), np.linspace(-40, 40, 401))
    assert cfg.field().magnitude == 4.0
    assert cfg.floquet(1.5).n_max >= 5
    assert cfg.propagation().steps_per_period == 400


def test_solver_n_max_override():
    cfg = parse_config(MINIMAL + "[solver]\nn_max = 9\n")
    assert cfg.floquet(0.1).n_max == 9


def test_duplicate_key_names_both_lines():
    text = "[uv]\ndetuning_mhz = -25\n[scan]\nir_start_mhz=-1\nir_stop_mhz=1\n[uv]\ndetuning_mhz = -20\n"
    with pytest.raises(ConfigError, match="duplicate key 'detuning_mhz' in \\[uv\\] at lines 2 and 7"):
        parse_config(text)


@pytest.mark.parametrize(
    "extra, match",
    [
        ("[bogus]\n", "unknown section"),
        ("[uv]\ncolour = red\n", "unknown key 'colour'"),
        ("[field]\nb_gauss = -1\n", "out of range"),
        ("[field]\nb_gauss = many\n", "b_gauss"),
        ("[uv]\npolarization = circular\n", "polarization"),
        ("[trap\n", "malformed section"),
        ("[trap]\njust words\n", "expected 'key = value'"),
        ("[fit]\nfree = beta, colour\n", "unknown parameters"),
        ("[scan]\nn_points = 1\n", "out of range"),
    ],
)
def test_bad_input_rejected(extra, match):
    with pytest.raises(ConfigError, match=match):
        parse_config(MINIMAL + extra)


def test_error_messages_carry_line_numbers():
    with pytest.raises(ConfigError, match="line 8"):
        parse_config(MINIMAL + "[field]\nb_gauss = -2\n")


def test_key_outside_section():
    with pytest.raises(ConfigError, match="outside"):
        parse_config("beta = 1\n" + MINIMAL)


def test_reversed_scan_rejected():
    with pytest.raises(ConfigError, match="must exceed"):
        parse_config(MINIMAL.replace("ir_stop_mhz = 40", "ir_stop_mhz = -50"))


def test_comments_and_case():
    cfg = parse_config(MINIMAL + "; note\n[TRAP]  # trailing\nBeta = 0.7   # inline\n")
    assert cfg["trap"]["beta"] == 0.7


def test_annotated_example_parses_and_is_complete():
    text = annotated_example()
    cfg = parse_config(text)
    for sec, keys in SCHEMA.items():
        assert f"[{sec}]" in text
        for key in keys:
            assert key in text
    assert cfg["uv"]["detuning_mhz"] < 0


def test_shipped_configs_parse():
    from pathlib import Path

    root = Path(__file__).resolve().parents[1] / "configs"
    files = sorted(root.glob("*.ini"))
    assert files
    for f in files:
        read_config(f)
