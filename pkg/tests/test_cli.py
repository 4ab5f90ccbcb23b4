import csv
import json
import re

import jsonschema
import pytest
import yaml

from en17037 import cli
from en17037.config import ConfigError, load_config
from en17037.fixtures import write_fixture

FAST = {"grid": {"spacing_m": 1.0, "heights_m": [1.2, 1.7]},
        "view": {"icosphere_level": 2, "ring_size": 360, "thresholds_sr": [0.0, 0.01, 0.1, 0.5],
                 "window_samples": 3},
        "sunlight": {"timestep_min": 30}}


@pytest.fixture
def cfg_path(tmp_path):
    path = write_fixture(tmp_path / "fx")
    doc = yaml.safe_load(path.read_text())
    for section, values in FAST.items():
        doc[section].update(values)
    path.write_text(yaml.safe_dump(doc, sort_keys=False))
    return path


def run(*args):
    return cli.main([str(a) for a in args])


def read_dir(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir())}


def test_view_outputs(cfg_path, tmp_path):
    out = tmp_path / "o"
    assert run("view", "--config", cfg_path, "--out", out) == 0
    grids = sorted(p.name for p in out.glob("view_grid_*.csv"))
    assert grids == ["view_grid_1.20m.csv", "view_grid_1.70m.csv"]
    with open(out / grids[0], newline="") as fh:
        header = next(csv.reader(fh))
    assert header[:7] == ["x", "y", "z", "sight_angle_deg", "sr_ground", "sr_landscape", "sr_sky"]
    assert [h for h in header if h.startswith("visible_layers@")] == [
        "visible_layers@0", "visible_layers@0.01", "visible_layers@0.1", "visible_layers@0.5"]
    assert (out / "obstruction_distances.csv").exists()
    frag = json.loads((out / "view.json").read_text())
    assert set(frag["levels"]) == {"sight_angle", "distance", "layers", "view"}


def test_missing_layer_map(cfg_path, tmp_path, capsys):
    (cfg_path.parent / "layers.yaml").unlink()
    assert run("view", "--config", cfg_path, "--out", tmp_path / "o") == 2
    assert "layers.yaml" in capsys.readouterr().err


def test_sunlight_outputs(cfg_path, tmp_path):
    out = tmp_path / "o"
    assert run("sunlight", "--config", cfg_path, "--out", out) == 0
    rows = list(csv.reader(open(out / "sunlight_daily.csv", newline="")))
    assert rows[0] == ["date", "sunlit_hours", "intervals"] and len(rows) == 50
    matrix = list(csv.reader(open(out / "sunlight_matrix.csv", newline="")))
    assert len(matrix) == 50 and len(matrix[0]) == 1 + 48
    frag = json.loads((out / "sunlight.json").read_text())
    assert frag["hours"] == min(d["hours"] for d in frag["daily"])


def test_invalid_timestep(cfg_path, tmp_path, capsys):
    assert run("sunlight", "--config", cfg_path, "--out", tmp_path / "o", "--timestep", 7) == 2
    assert "timestep" in capsys.readouterr().err


def test_timestep_override_bound(cfg_path, tmp_path):
    hours = {}
    for step in (5, 60):
        out = tmp_path / f"o{step}"
        assert run("sunlight", "--config", cfg_path, "--out", out, "--timestep", step) == 0
        hours[step] = [d["hours"] for d in json.loads((out / "sunlight.json").read_text())["daily"]]
    assert all(abs(a - b) <= 2 for a, b in zip(hours[5], hours[60]))


def test_report_schema_and_determinism(cfg_path, tmp_path, monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "1700000000")
    a, b = tmp_path / "a", tmp_path / "b"
    assert run("report", "--config", cfg_path, "--out", a) == 0
    assert run("report", "--config", cfg_path, "--out", b) == 0
    assert read_dir(a) == read_dir(b)
    doc = json.loads((a / "report.json").read_text())
    jsonschema.validate(doc, cli.report_schema())
    assert doc["generated_at"] == "2023-11-14T22:13:20Z"
    assert set(doc["levels"]) >= {"sight_angle", "distance", "layers", "sunlight", "view"}
    assert "output_dir" not in doc["config_echo"]


def test_generated_at_excluded_from_data(cfg_path, tmp_path, monkeypatch):
    monkeypatch.delenv("SOURCE_DATE_EPOCH", raising=False)
    a, b = tmp_path / "a", tmp_path / "b"
    assert run("report", "--config", cfg_path, "--out", a) == 0
    assert run("report", "--config", cfg_path, "--out", b) == 0
    da, db = read_dir(a), read_dir(b)
    ra, rb = json.loads(da.pop("report.json")), json.loads(db.pop("report.json"))
    ra.pop("generated_at"), rb.pop("generated_at")
    assert da == db and ra == rb


def test_config_echo_round_trip(cfg_path, tmp_path, monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "0")
    a = tmp_path / "a"
    assert run("report", "--config", cfg_path, "--out", a) == 0
    first = json.loads((a / "report.json").read_text())
    echo = tmp_path / "elsewhere" / "echo.yaml"
    echo.parent.mkdir()
    echo.write_text(yaml.safe_dump(first["config_echo"]))
    b = tmp_path / "b"
    assert run("report", "--config", echo, "--out", b) == 0
    assert (b / "report.json").read_bytes() == (a / "report.json").read_bytes()


def test_output_format(cfg_path, tmp_path):
    out = tmp_path / "o"
    assert run("report", "--config", cfg_path, "--out", out) == 0
    for p in out.iterdir():
        raw = p.read_bytes()
        assert b"\r" not in raw
        raw.decode("utf-8")
    for name in ("report.json", "view.json", "sunlight.json"):
        text = (out / name).read_text()
        for m in re.finditer(r"(?<![\w\"])-?\d+\.\d+(?:e[-+]?\d+)?", text):
            digits = re.sub(r"e.*", "", m.group()).replace("-", "").replace(".", "").lstrip("0")
            assert len(digits) <= 9, m.group()


def test_validate(cfg_path, capsys):
    assert run("validate", "--config", cfg_path) == 0
    info = json.loads(capsys.readouterr().out)
    assert info["windows"] == 1 and info["grid_points"]["1.20"] > 0


def test_config_errors(cfg_path, tmp_path, capsys):
    doc = yaml.safe_load(cfg_path.read_text())
    doc["view"]["colour"] = "blue"
    bad = cfg_path.parent / "bad.yaml"
    bad.write_text(yaml.safe_dump(doc))
    assert run("view", "--config", bad) == 2
    assert "colour" in capsys.readouterr().err
    assert run("view", "--config", cfg_path, "--latitude", 95) == 2
    assert run("view", "--config", tmp_path / "none.yaml") == 2
    assert run("view") == 2
    with pytest.raises(ConfigError):
        load_config(cfg_path, {"distance_rule": "mean"})


def test_paths_relative_to_config(cfg_path, monkeypatch, tmp_path):
    monkeypatch.chdir(tmp_path)
    cfg = load_config(cfg_path)
    assert cfg.scene == cfg_path.parent.resolve() / "shoebox.obj"


def test_computation_error_exit_code(cfg_path, tmp_path, monkeypatch):
    def boom(_):
        raise RuntimeError("kernel failure")

    monkeypatch.setattr(cli, "compute_view", boom)
    assert run("view", "--config", cfg_path, "--out", tmp_path / "o") == 1


def test_threads_flag(cfg_path, tmp_path):
    assert run("validate", "--config", cfg_path, "--threads", 1) == 0
