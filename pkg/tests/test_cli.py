import csv
import re

import numpy as np
import pytest

from surfdecay import cli

from conftest import SHIPPED_CONFIG

BASE = SHIPPED_CONFIG.read_text(encoding="utf-8")
NUMBER = re.compile(r"^-?\d(\.\d+)?(e[+-]\d+)?$|^-?\d+(\.\d+)?$")


def write_config(tmp_path, text, name="run.toml"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def read_rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


def test_potential_outputs(tmp_path):
    out = tmp_path / "out"
    assert cli.main(["potential", "--config", str(SHIPPED_CONFIG), "--out", str(out)]) == 0
    raw = (out / "potentials.csv").read_bytes()
    assert b"\r" not in raw and raw.endswith(b"\n")
    rows = read_rows(out / "potentials.csv")
    assert rows[0] == ["x_nm", "V_e_Hz", "V_g_Hz", "omega_x_Hz"]
    assert len(rows) == 401
    for cell in rows[1][:3] + rows[200]:
        assert NUMBER.match(cell)
        assert len(cell.split("e")[0].replace("-", "").replace(".", "")) <= 12
    assert (out / "config.toml").read_text(encoding="utf-8") == BASE
    params = (out / "params.txt").read_text(encoding="utf-8")
    assert "alpha" in params and "A_" in params
    assert not (out / "overrides.txt").exists()


def test_bundled_config_name(tmp_path):
    out = tmp_path / "bundled"
    assert cli.main(["potential", "--config", "silica_cesium", "--out", str(out)]) == 0
    assert (out / "config.toml").read_text(encoding="utf-8") == BASE


def test_identical_potentials_give_flat_transition(tmp_path):
    text = BASE.replace("C3_kHz_um3 = 3.09\nD_THz = 316.0", "C3_kHz_um3 = 1.56\nD_THz = 159.6")
    out = tmp_path / "flat"
    assert cli.main(["potential", "--config", str(write_config(tmp_path, text)),
                     "--out", str(out)]) == 0
    rows = np.array(read_rows(out / "potentials.csv")[1:], dtype=float)
    np.testing.assert_array_equal(rows[:, 1], rows[:, 2])
    assert np.all(rows[:, 3] == rows[0, 3])


def test_output_directory_precedence(tmp_path, monkeypatch):
    env_dir = tmp_path / "from_env"
    monkeypatch.setenv(cli.OUTPUT_ENV, str(env_dir))
    assert cli.main(["potential", "--config", str(SHIPPED_CONFIG)]) == 0
    assert (env_dir / "potentials.csv").exists()
    flag_dir = tmp_path / "from_flag"
    assert cli.main(["potential", "--config", str(SHIPPED_CONFIG), "--out", str(flag_dir)]) == 0
    assert (flag_dir / "potentials.csv").exists()
    monkeypatch.delenv(cli.OUTPUT_ENV)
    monkeypatch.chdir(tmp_path)
    assert cli.main(["potential", "--config", str(SHIPPED_CONFIG)]) == 0
    assert (tmp_path / "out" / "potentials.csv").exists()


def test_deterministic_output(tmp_path):
    for name in ("a", "b"):
        assert cli.main(["potential", "--config", str(SHIPPED_CONFIG),
                         "--out", str(tmp_path / name)]) == 0
    for f in ("potentials.csv", "params.txt", "config.toml"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_empty_window_gives_header_only(tmp_path):
    text = BASE.replace("window_Hz = [-1e9, -2e4]", "window_Hz = [-1.0, -0.5]")
    text = re.sub(r"figures = \[.*\]", 'figures = ["fig9"]', text)
    out = tmp_path / "empty"
    cfg = str(write_config(tmp_path, text))
    assert cli.main(["rates", "--config", cfg, "--out", str(out)]) == 0
    assert read_rows(out / "fig9_gamma_ab_shallow.csv") == [["nu_a", "nu_b", "gamma_ab_over_gamma0"]]
    assert cli.main(["spectrum", "--config", cfg, "--out", str(out)]) == 0
    assert read_rows(out / "levels_e.csv") == [["nu", "energy_Hz"]]


def test_evolve_zero_duration(tmp_path):
    text = BASE.replace("t_final_lifetimes = 5.0", "t_final_s = 0.0")
    text = text.replace("ground_nu = { first = 300, last = 310 }", "ground_nu = [309, 310]")
    out = tmp_path / "evolve"
    assert cli.main(["evolve", "--config", str(write_config(tmp_path, text)),
                     "--out", str(out)]) == 0
    rows = read_rows(out / "trajectory.csv")
    assert rows[0][:4] == ["t_s", "pop_e429", "pop_g309", "pop_g310"]
    assert rows[0][-1] == "abs_rho_g309_g310"
    assert len(rows) == 2
    assert [float(v) for v in rows[1]] == [0.0, 1.0, 0.0, 0.0, 0.0]


def test_verify_line_format(capsys):
    code = cli.main(["verify", "--config", str(SHIPPED_CONFIG), "--checks", "fresnel",
                     "rest_atom"])
    lines = capsys.readouterr().out.splitlines()
    assert code == 0
    assert lines[0] == "name,expected,got,tolerance,status"
    assert lines[1].startswith("fresnel_reflection_identity,0,")
    assert len(lines) == 1 + 2 + 7
    for line in lines[1:]:
        fields = line.split(",")
        assert len(fields) == 5 and fields[-1] == "PASS"
        float(fields[2])


def test_verify_fails_on_coarse_quadrature(tmp_path, capsys):
    code = cli.main(["verify", "--config", str(SHIPPED_CONFIG), "--quadrature-order", "1",
                     "--checks", "rest_atom"])
    assert code == 1
    assert "FAIL" in capsys.readouterr().out


def test_quadrature_override_recorded(tmp_path):
    out = tmp_path / "override"
    assert cli.main(["potential", "--config", str(SHIPPED_CONFIG), "--out", str(out),
                     "--quadrature-order", "32"]) == 0
    assert (out / "overrides.txt").read_text(encoding="utf-8") == "quadrature_order = 32\n"


@pytest.mark.parametrize("argv", [
    ["verify", "--checks", "nonsense"],
    ["potential", "--threads", "0"],
])
def test_usage_errors_exit_2(argv, capsys):
    assert cli.main(argv + ["--config", str(SHIPPED_CONFIG)]) == 2
    assert "error:" in capsys.readouterr().err


def test_invalid_geometry_exit_2(tmp_path, capsys):
    text = BASE.replace("D_THz = 159.6\nx_m_nm = 0.19", "D_THz = 159.6\nx_m_nm = 0.25")
    assert cli.main(["potential", "--config", str(write_config(tmp_path, text)),
                     "--out", str(tmp_path / "x")]) == 2
    assert "A3" in capsys.readouterr().err
    assert cli.main(["potential", "--config", str(tmp_path / "missing.toml")]) == 2
