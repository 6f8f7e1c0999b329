import csv
import json

import pytest

from dirac_morse.cli import main
from dirac_morse.config import (
    ConfigError,
    apply_overrides,
    bundled_configs,
    env_overrides,
    load_config,
    parse_config,
    parse_states,
)
from dirac_morse.formatting import fmt_number

BASE = 'D_e = 5.0\nalpha = 0.988879\nr_e = 2.40873\nm = 10.0\n'


def write(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


# --- configuration ----------------------------------------------------------

def test_bundled_configs_parse():
    assert bundled_configs() == ["bands.cfg", "massless.cfg", "table1.cfg", "table1_signed.cfg"]
    cfg = load_config("table1")
    assert len(cfg.states) == 16 and len(cfg.references) == 16
    assert cfg.branch.sqrt_convention == "as-printed"
    assert load_config("table1_signed.cfg").branch.sqrt_convention == "signed-alternative"


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError) as e:
        parse_config({"D_e": 5, "alpha": 1, "r_e": 1, "m": 1, "bogus": 1})
    assert e.value.location == "bogus"
    with pytest.raises(ConfigError) as e:
        parse_config({"D_e": 5, "alpha": 1, "r_e": 1, "m": 1, "branch": {"sqrt": "x"}})
    assert e.value.location == "branch.sqrt"
    with pytest.raises(ConfigError) as e:
        parse_config({"D_e": 5, "alpha": 1, "r_e": 1, "m": 1, "extras": {}})
    assert e.value.location == "extras"


def test_invalid_values_rejected():
    with pytest.raises(ConfigError, match="missing required key"):
        parse_config({"D_e": 5, "alpha": 1, "r_e": 1})
    with pytest.raises(ConfigError) as e:
        parse_config({"D_e": -5, "alpha": 1, "r_e": 1, "m": 1})
    assert "D_e must be positive" in str(e.value)
    with pytest.raises(ConfigError) as e:
        parse_config({"D_e": 5, "alpha": 1, "r_e": 1, "m": 1, "states": [[1, 1]]})
    assert e.value.location == "states[0]"
    with pytest.raises(ConfigError):
        parse_config({"D_e": 5, "alpha": 1, "r_e": 1, "m": 1, "branch": {"root_window": [2, 1]}})
    with pytest.raises(ConfigError):
        parse_config({"D_e": 5, "alpha": 1, "r_e": 1, "m": "ten"})


def test_syntax_error_has_line_and_column(tmp_path):
    path = write(tmp_path, BASE + "states = [[1, -1]\n")
    with pytest.raises(ConfigError) as e:
        load_config(path)
    assert "line" in str(e.value) and "column" in str(e.value)


def test_parse_states():
    assert [(q.N, q.k) for q in parse_states("1:-1, 2:3")] == [(1, -1), (2, 3)]
    assert parse_states([]) == ()
    with pytest.raises(ConfigError):
        parse_states("1-1")


def test_overrides_and_environment():
    cfg = apply_overrides(load_config("table1"), branch="signed", units="physical", w_eval="de",
                          states="1:-1", out="elsewhere")
    assert cfg.branch.sqrt_convention == "signed-alternative"
    assert cfg.bands.unit_convention == "physical" and cfg.bands.w_eval == "de"
    assert [(q.N, q.k) for q in cfg.states] == [(1, -1)] and cfg.out_dir == "elsewhere"
    env = {"DIRAC_MORSE_BRANCH": "magnitude", "DIRAC_MORSE_W_EVAL": "zero", "OTHER": "x"}
    assert env_overrides(env) == {"branch": "magnitude", "w_eval": "zero"}


def test_fmt_number():
    assert fmt_number(0.1) == "0.1"
    assert fmt_number(-9.727001781) == "-9.727001781"
    assert fmt_number(1 / 3) == "0.333333333333"
    assert fmt_number(None) == "" and fmt_number(3) == "3" and fmt_number(0.0) == "0"


# --- subcommands ------------------------------------------------------------

def test_spectrum_table1_as_printed(tmp_path, capsys):
    assert main(["spectrum", "--config", "table1", "--out", str(tmp_path)]) == 2
    rows = read_csv(tmp_path / "spectrum.csv")
    assert rows[0] == ["N", "k", "l_pseudo", "j_pseudo_times2", "label", "energy", "residual",
                       "reference", "deviation"]
    assert [(int(r[0]), int(r[1])) for r in rows[1:]] == [
        (1, -4), (1, -3), (1, -2), (1, -1), (1, 2), (1, 3), (1, 4), (1, 5),
        (2, -4), (2, -3), (2, -2), (2, -1), (2, 2), (2, 3), (2, 4), (2, 5)]
    assert rows[1][4] == "1f_{7/2}" and rows[1][5] == ""
    assert "no root" in capsys.readouterr().err
    report = json.loads((tmp_path / "spectrum_report.json").read_text())
    assert len(report["residual_matrix"]) == 16


def test_spectrum_signed_solves_all(tmp_path):
    assert main(["spectrum", "--config", "table1", "--branch", "signed", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "spectrum.csv")
    assert all(r[5] for r in rows[1:])


def test_spectrum_empty_states(tmp_path):
    path = write(tmp_path, BASE + "states = []\n")
    assert main(["spectrum", "--config", path, "--out", str(tmp_path / "o")]) == 0
    assert (tmp_path / "o" / "spectrum.csv").read_text().count("\n") == 1


def test_malformed_config_exit_1(tmp_path, capsys):
    path = write(tmp_path, BASE + "alpha = [\n")
    assert main(["spectrum", "--config", path, "--out", str(tmp_path)]) == 1
    assert "line" in capsys.readouterr().err
    assert main(["spectrum", "--config", str(tmp_path / "missing.cfg")]) == 1
    assert main(["bands", "--config", "bands", "--w-eval", "somewhere", "--out", str(tmp_path)]) == 1


def test_environment_overrides_cli(tmp_path, monkeypatch):
    monkeypatch.setenv("DIRAC_MORSE_BRANCH", "signed")
    monkeypatch.setenv("DIRAC_MORSE_STATES", "1:-1")
    monkeypatch.setenv("DIRAC_MORSE_OUT", str(tmp_path))
    assert main(["spectrum", "--config", "table1"]) == 0
    assert len(read_csv(tmp_path / "spectrum.csv")) == 2


def test_wavefunction_profiles(tmp_path):
    assert main(["wavefunction", "--config", "table1_signed", "--out", str(tmp_path)]) == 0
    for name in ("profile_N1_k-1.csv", "profile_N1_k-2.csv"):
        rows = read_csv(tmp_path / name)
        assert rows[0] == ["r", "re_psi1", "im_psi1", "re_psi2", "im_psi2", "density"]
        assert len(rows) == 2001


def test_wavefunction_unsolvable(tmp_path, capsys):
    assert main(["wavefunction", "--config", "table1", "--states", "1:-1", "--out", str(tmp_path)]) == 2
    assert not list(tmp_path.glob("profile_*.csv"))
    assert "no root" in capsys.readouterr().err


def test_bands(tmp_path):
    assert main(["bands", "--config", "massless", "--out", str(tmp_path / "a")]) == 0
    gap = json.loads((tmp_path / "a" / "gap_report.json").read_text())
    assert gap["W_eval"] == 0 and gap["m_tilde"] == 0
    path = write(tmp_path, BASE + '[bands]\nm = 0.0\nw_eval = "zero"\nresolution = [2, 2]\n'
                 'k_window = [0.0, 0.0001, 0.0, 0.0001]\n')
    assert main(["bands", "--config", path, "--out", str(tmp_path / "b")]) == 0
    assert len(read_csv(tmp_path / "b" / "bands_surface.csv")) == 5
    assert main(["bands", "--config", "bands", "--out", str(tmp_path / "c")]) == 0
    rep = json.loads((tmp_path / "c" / "gap_report.json").read_text())
    assert rep["reference_gap"] == 3.778868546 and "deviation" in rep
    assert "physical" in rep["other_unit_convention"]


def test_massless_zero_gap_at_origin(tmp_path):
    path = write(tmp_path, BASE + '[bands]\nm = 0.0\nw_eval = "zero"\nresolution = [3, 3]\n'
                 'k_window = [-1.0, 1.0, -1.0, 1.0]\n')
    assert main(["bands", "--config", path, "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "bands_surface.csv")[1:]
    centre = [r for r in rows if float(r[0]) == 0 and float(r[1]) == 0][0]
    assert float(centre[2]) == 0 and float(centre[3]) == 0


def test_verify_fault_injection(tmp_path, capsys):
    assert main(["verify", "--inject-fault", "--out", str(tmp_path)]) == 3
    rep = json.loads((tmp_path / "verification_report.json").read_text())
    assert rep["fault_injected"] and "heun_ode_cross_validation" in rep["failed_hard"]
    assert "FAIL [hard] heun_ode_cross_validation" in capsys.readouterr().out
