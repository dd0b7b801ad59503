import json

import numpy as np
import pytest
from numpy.testing import assert_allclose

from bccsec.cli import ConfigError, parse_power, parse_power_grid, run


def test_parse_power_units():
    assert_allclose(parse_power("5dB"), 10 ** 0.5)
    assert_allclose(parse_power("-3 dB"), 10 ** -0.3)
    assert parse_power("2.5") == 2.5
    with pytest.raises(ConfigError, match="--power"):
        parse_power("five")
    with pytest.raises(ConfigError):
        parse_power("-1")


def test_parse_power_grid():
    grid = parse_power_grid("0:20dB:40")
    assert len(grid) == 40
    assert grid[0] == (0.0, 1.0)
    assert_allclose(grid[-1], (20.0, 100.0))
    assert [p for _, p in parse_power_grid("0:1:3")] == [0.0, 0.5, 1.0]
    with pytest.raises(ConfigError, match="--power-grid"):
        parse_power_grid("0:20")


@pytest.fixture
def subchannels(tmp_path):
    path = tmp_path / "sc.json"
    path.write_text(json.dumps([{"mu_sq": 1, "nu_sq": 2}]))
    return str(path)


def test_alloc_hand_example(subchannels, capsys):
    assert run(["alloc", "--subchannels", subchannels, "--gamma0", "1", "--gamma1", "3",
                "--power", "1"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["alloc"] == [[0, 1]]
    # no common power is sent, so both common bounds are zero and tie
    assert out["case"] == "Case3" and out["alpha"] == 1
    assert_allclose(out["R1"], 0.207518749639)


def test_config_errors_name_the_field(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps([{"mu_sq": 1}]))
    assert run(["alloc", "--subchannels", str(bad), "--power", "1"]) == 2
    assert "nu_sq" in capsys.readouterr().err
    assert run(["alloc", "--subchannels", str(tmp_path / "missing.json"), "--power", "1"]) == 2
    assert "--subchannels" in capsys.readouterr().err
    assert run(["ergodic", "--sigma1", "-1", "--power", "1", "--samples", "10"]) == 2
    assert "--sigma1" in capsys.readouterr().err
    assert run(["region", "--power", "abc"]) == 2
    assert run(["outage", "--bogus"]) == 2


def test_infeasible_budget_exit_code(capsys):
    code = run(["outage", "--sigma1", "10", "--sigma2", "0.5", "--r0", "1", "--r1", "0.5",
                "--mode", "constant-common", "--power", "0.01", "--samples", "500"])
    assert code == 1
    assert "P0" in capsys.readouterr().err


def test_ergodic_output_is_byte_identical(tmp_path):
    args = ["ergodic", "--sigma1", "1", "--sigma2", "0.4", "--power", "5dB",
            "--samples", "1500", "--seed", "7", "--grid-size", "5"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(args + ["--out", str(a)]) == 0
    assert run(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    lines = a.read_text().splitlines()
    assert lines[0] == "gamma_ratio,R0,R1,case"
    assert len(lines) == 6


def test_ergodic_capacity_grid(capsys):
    assert run(["ergodic", "--power-grid", "0:10dB:3", "--samples", "800"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("P_label,P,secrecy_capacity")
    rows = [list(map(float, ln.split(","))) for ln in lines[1:]]
    assert all(r[4] <= r[2] for r in rows)


def test_outage_grid_csv(capsys):
    assert run(["outage", "--sigma1", "10", "--sigma2", "0.5", "--r1", "1",
                "--power-grid", "0:20dB:5", "--samples", "2000", "--equal-power"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "P_dB,outage,se,equal_power_outage"
    vals = np.array([list(map(float, ln.split(","))) for ln in lines[1:]])
    assert np.all(np.diff(vals[:, 1]) <= 0)
    assert np.all(vals[:, 3] >= vals[:, 1])


def test_region_single_channel(capsys):
    assert run(["region", "--power", "1", "--points", "3", "--format", "json"]) == 0
    rows = json.loads(capsys.readouterr().out)
    assert rows[0]["beta"] == 0 and rows[-1]["R0"] == 0
    assert_allclose(rows[-1]["R1"], 0.207518749639)


def test_dm_from_file(tmp_path, capsys):
    p = np.zeros((2, 2, 3))
    for x in (0, 1):
        p[x, x, x], p[x, x, 2] = 0.6, 0.4
    table = {"sizes": {"Q": 1, "U": 2, "X": 2, "Y": 2, "Z": 3}, "p_q": [1],
             "p_u_given_q": [0.5, 0.5], "p_x_given_u": [1, 0, 0, 1],
             "p_yz_given_x": p.ravel().tolist()}
    path = tmp_path / "dm.json"
    path.write_text(json.dumps([table]))
    assert run(["dm", "--dist", str(path)]) == 0
    header, row = capsys.readouterr().out.splitlines()
    assert header == "r01,r02,R0,R1"
    assert_allclose(float(row.split(",")[3]), 0.4)


def test_oracle_checks(subchannels, capsys):
    assert run(["oracle", "--check", "plan", "--pmin", "1,2,4", "--power", "0.9"]) == 0
    _, row = capsys.readouterr().out.splitlines()
    assert [float(x) for x in row.split(",")] == pytest.approx([23 / 60, 23 / 60], abs=1e-12)
    assert run(["oracle", "--check", "two-state", "--power", "1"]) == 0
    assert "anti,0.792481250361" in capsys.readouterr().out
    assert run(["oracle", "--subchannels", subchannels, "--gamma1", "3", "--power", "1",
                "--resolution", "0.01"]) == 0
    _, row = capsys.readouterr().out.splitlines()
    closed, grid = map(float, row.split(",")[:2])
    assert closed >= grid - 1e-12
