import io
import json
import subprocess
import sys

import pytest

from cli_cases import SMALL
from wrgibbs import cli


@pytest.fixture(scope="module")
def outputs(tmp_path_factory):
    base = tmp_path_factory.mktemp("cli")
    paths = {}
    for name, params in SMALL.items():
        paths[name] = cli.run(cli.ExperimentConfig(name, params, 11, str(base / f"{name}.out")))
    return paths


@pytest.mark.parametrize("name", list(SMALL))
def test_round_trip(outputs, name):
    out = cli.read_output(outputs[name])
    assert out.meta["version"] == "0.1.0"
    assert out.meta["format"] == cli.FORMATS[name]
    assert out.meta["seed"] == 11
    assert out.config["subcommand"] == name
    assert out.config["params"] == cli.ExperimentConfig(name, SMALL[name]).params
    assert out.meta["wall_time_s"] >= 0
    assert out.data
    raw = outputs[name].read_bytes()
    assert b"\r\n" not in raw
    raw.decode("utf-8")


def test_reproducible_data(outputs, tmp_path):
    for name, params in SMALL.items():
        again = cli.run(cli.ExperimentConfig(name, params, 11, str(tmp_path / name)))
        assert cli.read_output(again).data_text == cli.read_output(outputs[name]).data_text


def test_seed_changes_stochastic_output(outputs, tmp_path):
    name = "lattice-checkerboard"
    other = cli.run(cli.ExperimentConfig(name, SMALL[name], 12, str(tmp_path / "x")))
    assert cli.read_output(other).data_text != cli.read_output(outputs[name]).data_text


def test_pressure_beta_zero(capsys):
    assert cli.main(["pressure", "--beta", "0", "--out", "-"]) == 0
    text = capsys.readouterr().out
    data = json.loads("".join(l for l in text.splitlines(True) if not l.startswith("#")))
    assert abs(data["pressure"]) < 1e-12


def test_bad_set_flags_and_y_shape_columns(tmp_path):
    p = tmp_path / "bad.csv"
    assert cli.main(["bad-set", "--beta", "5", "--alpha0", "0.3333", "--t", "0.6", "--grid", "60",
                     "--out", str(p)]) == 0
    rows = cli.read_output(p).data
    assert set(rows[0]) == {"x", "m", "bad_flag", "gap", "branch_id"}
    assert all(r["bad_flag"] == 1 for r in rows)


def test_dobrushin_boundary(tmp_path):
    p = tmp_path / "d.csv"
    assert cli.main(["dobrushin-region", "--beta", "2", "--d", "2", "--grid", "40", "--out", str(p)]) == 0
    rows = cli.read_output(p).data
    assert list(rows[0]) == ["index", "alpha1", "alpha_minus1"]
    assert [r["index"] for r in rows] == list(range(len(rows)))


def test_env_output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUTPUT_DIR_ENV, str(tmp_path))
    assert cli.main(["tree-critical", "--alpha0", "0.05", "--beta-max", "3"]) == 0
    assert (tmp_path / "tree-critical.csv").exists()


def test_config_file_and_overrides(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"subcommand": "pressure", "seed": 3, "params": {"beta": 1.0}}, indent=2))
    out = tmp_path / "o.json"
    assert cli.main(["run", str(cfg), "--out", str(out)]) == 0
    assert cli.read_output(out).config["params"]["beta"] == 1.0
    assert cli.main(["pressure", "--config", str(cfg), "--beta", "2", "--out", str(out)]) == 0
    meta = cli.read_output(out).meta
    assert meta["config"]["params"]["beta"] == 2.0 and meta["seed"] == 3


def test_unknown_key_reports_line(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text('{\n  "subcommand": "pressure",\n  "params": {\n    "beta": 1,\n    "gamma": 2\n  }\n}\n')
    assert cli.main(["run", str(cfg)]) == 2
    err = capsys.readouterr().err
    assert "line 5" in err and "gamma" in err
    with pytest.raises(cli.ConfigError) as info:
        cli.load_config(cfg)
    assert info.value.line == 5 and info.value.key == "gamma"


def test_config_errors(tmp_path, capsys):
    bad = tmp_path / "b.json"
    bad.write_text('{\n  "subcommand": "pressure",\n  "seed": ,\n}')
    assert cli.main(["run", str(bad)]) == 2
    assert "line 3" in capsys.readouterr().err
    assert cli.main(["pressure", "--beta", "abc"]) == 2
    assert "beta" in capsys.readouterr().err
    assert cli.main(["pressure", "--seed", str(2**64)]) == 2
    assert cli.main(["run", str(tmp_path / "missing.json")]) == 2
    with pytest.raises(cli.ConfigError):
        cli.ExperimentConfig("nope")
    with pytest.raises(cli.ConfigError):
        cli.ExperimentConfig("bad-set", {"route": "sideways"})


def test_domain_error_is_config_error(capsys):
    assert cli.main(["pressure", "--alpha0", "1.5", "--out", "-"]) == 2


def test_invariant_failure_exit(monkeypatch, capsys):
    def broken(p, seed):
        raise cli.InvariantError("forced")

    monkeypatch.setitem(cli.EXPERIMENTS, "pressure", broken)
    assert cli.main(["pressure", "--out", "-"]) == 3
    assert "forced" in capsys.readouterr().err


def test_stdout_stream():
    buf = io.StringIO()
    assert cli.run(cli.ExperimentConfig("pressure", {"beta": 1.0}, 0, "-"), stream=buf) is None
    assert buf.getvalue().startswith("# wrgibbs ")


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "wrgibbs", "tree-critical", "--alpha0", "0.05",
                        "--beta-max", "3", "--out", str(tmp_path / "t.csv")], capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    rows = cli.read_output(tmp_path / "t.csv").data
    assert rows[0]["k"] == 2 and 1.3 < rows[0]["beta_crit"] < 1.4
