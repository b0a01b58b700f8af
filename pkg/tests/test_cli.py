import json

import pytest

from uwbmsdd.cli import ConfigError, _parse_grid, emit_plot_data, main


CONFIG = """
[experiment]
ebn0_grid_db = 11:13:1
L_list = 2
detector = sosd
llr_max = 10
stopping = on
code_nu = 4
min_bit_errors = 60
max_bits = 30000
seed = 3
stop_below_ber = 1e-3
"""


@pytest.fixture
def config_file(tmp_path):
    p = tmp_path / "exp.ini"
    p.write_text(CONFIG)
    return p


def test_grid_parsing():
    assert _parse_grid("6:8:0.5") == (6.0, 6.5, 7.0, 7.5, 8.0)
    assert _parse_grid("1,2.5,9") == (1.0, 2.5, 9.0)
    with pytest.raises(ConfigError):
        _parse_grid("1:2")


def test_ber_run_writes_artifacts(config_file, tmp_path):
    out = tmp_path / "out"
    rc = main(["ber", "--config", str(config_file), "--out", str(out)])
    assert rc == 0
    assert (out / "ber_results.csv").exists()
    assert (out / "ber_curves.csv").exists()
    manifest = json.loads((out / "ber_manifest.json").read_text())
    assert manifest["command"] == "ber"
    assert manifest["config"]["seed"] == 3
    assert manifest["config"]["L_list"] == [2]


def test_flag_precedence_over_config(config_file, tmp_path):
    out = tmp_path / "out"
    rc = main(
        ["ber", "--config", str(config_file), "--out", str(out),
         "--override", "experiment.code_nu=5", "--L", "3", "--seed", "8"]
    )
    assert rc == 0
    manifest = json.loads((out / "ber_manifest.json").read_text())
    assert manifest["config"]["code_nu"] == 5
    assert manifest["config"]["L_list"] == [3]
    assert manifest["config"]["seed"] == 8


def test_bare_L_override(config_file, tmp_path):
    out = tmp_path / "out"
    rc = main(["ber", "--config", str(config_file), "--out", str(out),
               "--override", "L=5"])
    assert rc == 0
    manifest = json.loads((out / "ber_manifest.json").read_text())
    assert manifest["config"]["L_list"] == [5]


def test_unknown_config_key_exits_2(config_file, tmp_path, capsys):
    rc = main(["ber", "--config", str(config_file), "--override", "experiment.bogus=1",
               "--out", str(tmp_path / "o")])
    assert rc == 2
    assert "bogus" in capsys.readouterr().err


def test_unknown_section_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text("[mystery]\nx = 1\n")
    rc = main(["ber", "--config", str(bad), "--out", str(tmp_path / "o")])
    assert rc == 2
    assert "mystery" in capsys.readouterr().err


def test_bad_value_exits_2(config_file, tmp_path, capsys):
    rc = main(["ber", "--config", str(config_file), "--override",
               "experiment.detector=genie", "--out", str(tmp_path / "o")])
    assert rc == 2
    assert "genie" in capsys.readouterr().err


def test_reruns_byte_identical(config_file, tmp_path):
    outs = []
    for name in ("o1", "o2"):
        out = tmp_path / name
        assert main(["ber", "--config", str(config_file), "--out", str(out)]) == 0
        outs.append(out)
    for fname in ("ber_results.csv", "ber_manifest.json", "ber_curves.csv"):
        assert (outs[0] / fname).read_bytes() == (outs[1] / fname).read_bytes()


def test_env_var_output_dir(config_file, tmp_path, monkeypatch):
    target = tmp_path / "envout"
    monkeypatch.setenv("UWBMSDD_OUT", str(target))
    assert main(["ber", "--config", str(config_file)]) == 0
    assert (target / "ber_results.csv").exists()


def test_tradeoff_run(config_file, tmp_path):
    extra = tmp_path / "t.ini"
    extra.write_text(CONFIG + "\n[tradeoff]\ntarget_ber = 1e-2\nllr_max_grid = 2,0\n")
    out = tmp_path / "out"
    rc = main(["tradeoff", "--config", str(extra), "--out", str(out),
               "--override", "experiment.ebn0_grid_db=9:14:1",
               "--override", "experiment.stop_below_ber=2e-3"])
    assert rc == 0
    lines = (out / "tradeoff_points.csv").read_text().splitlines()
    assert lines[0] == "required_ebn0_db,avg_c_sd,llr_max,L,stopping"
    # ordered by clipping level, largest first
    assert [float(l.split(",")[2]) for l in lines[1:]] == [2.0, 0.0]


def test_overall_run(config_file, tmp_path):
    extra = tmp_path / "o.ini"
    extra.write_text(
        CONFIG + "\n[overall]\ntarget_ber = 1e-2\nnu_ref = 7\ncandidates = 4:2,2:1\n"
    )
    out = tmp_path / "out"
    rc = main(["overall", "--config", str(extra), "--out", str(out),
               "--override", "experiment.ebn0_grid_db=9:14:1",
               "--override", "experiment.L_list=1,2"])
    assert rc == 0
    assert (out / "trajectory_ebn0.csv").exists()
    assert (out / "trajectory_complexity.csv").exists()


def test_selftest_passes(tmp_path):
    assert main(["selftest", "--seed", "1"]) == 0


def test_emit_plot_data_rejects_empty(tmp_path):
    with pytest.raises(ValueError):
        emit_plot_data([], tmp_path, "ber")


def test_unknown_flag_rejected(config_file):
    with pytest.raises(SystemExit) as exc:
        main(["ber", "--config", str(config_file), "--frobnicate"])
    assert exc.value.code == 2
