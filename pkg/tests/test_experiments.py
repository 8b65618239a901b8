import json
import math
import os

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from randhull import cli
from randhull.errors import CalibrationMissing, ConfigError
from randhull.estimators import Calibration
from randhull.experiments import (CSV_COLUMNS, ResultRecord, append_records, config_from_dict, emit_csv,
                                  load_config, lookup_constant, parse_csv, partial_marker, read_records,
                                  run_simulation, save_calibration)

BASE = {
    "experiment_id": "t",
    "body": {"kind": "ball", "d": 2},
    "j": 2,
    "n_grid": [10, 20, 40],
    "reps": 20,
    "master_seed": 3,
}


def cfg(**over):
    raw = {**BASE, **over}
    return config_from_dict(raw)


# -- config validation ------------------------------------------------------------


def test_valid_config_defaults():
    c = cfg()
    assert c.routes == ("Direct",)
    assert c.density == {"kind": "uniform"}
    assert c.tolerance.route_sigma == 3.0


@pytest.mark.parametrize("over,path", [
    ({"colour": "red"}, "colour"),
    ({"body": {"kind": "ball", "d": 2, "radiuss": 1}}, "body.radiuss"),
    ({"body": {"kind": "torus", "d": 2}}, "body.kind"),
    ({"n_grid": [20, 10]}, "n_grid"),
    ({"n_grid": [10, "x"]}, "n_grid[1]"),
    ({"reps": 1}, "reps"),
    ({"j": 3}, "j"),
    ({"routes": ["Support"]}, "routes[0]"),
    ({"routes": ["Sideways"]}, "routes[0]"),
    ({"tolerance": {"route_sigmaa": 2}}, "tolerance.route_sigmaa"),
    ({"tolerance": {"rate_band": [1, 0]}}, "tolerance.rate_band"),
    ({"master_seed": -1}, "master_seed"),
    ({"density": {"kind": "curvature_power", "exponent": 0.3, "extra": 1}}, "density"),
])
def test_invalid_configs_name_the_field(over, path):
    with pytest.raises(ConfigError) as info:
        cfg(**over)
    assert info.value.path == path


def test_missing_key():
    raw = dict(BASE)
    del raw["reps"]
    with pytest.raises(ConfigError) as info:
        config_from_dict(raw)
    assert info.value.path == "reps"


def test_curvature_power_on_capsule_rejected():
    with pytest.raises(ConfigError, match="density not positive"):
        cfg(body={"kind": "capsule", "d": 3, "radius": 1.0, "length": 2.0}, j=3,
            density={"kind": "curvature_power", "exponent": 0.25})


def test_shipped_configs_are_valid():
    root = os.path.join(os.path.dirname(__file__), "..", "configs")
    names = [f for f in os.listdir(root) if f.endswith(".toml")]
    assert names
    for name in names:
        load_config(os.path.join(root, name))


def test_bad_toml(tmp_path):
    p = tmp_path / "x.toml"
    p.write_text("experiment_id = \n")
    with pytest.raises(ConfigError):
        load_config(p)


# -- records ----------------------------------------------------------------------

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)
records = st.builds(
    ResultRecord,
    experiment_id=st.text(st.characters(blacklist_categories=("Cs", "Cc")), min_size=1).filter(lambda s: s.strip() == s),
    body_kind=st.sampled_from(["ball", "ellipsoid", "capsule", "cube"]),
    d=st.integers(2, 10), j=st.integers(1, 10),
    density_kind=st.sampled_from(["uniform", "curvature_power"]),
    n=st.integers(1, 10**7), route=st.sampled_from(["Direct", "Support", "Projection"]),
    reps=st.integers(2, 10**6), deficit_mean=finite, deficit_stderr=finite,
    predicted=st.none() | finite, wall_time_s=finite, master_seed=st.integers(0, 2**64 - 1),
    git_or_build_id=st.text(st.characters(blacklist_categories=("Cs", "Cc")), min_size=1).filter(lambda s: s.strip() == s),
)


@given(st.lists(records, max_size=5))
def test_csv_round_trip(recs):
    assert parse_csv(emit_csv(recs)) == recs


def test_csv_header_is_exact():
    text = emit_csv([])
    assert text.strip() == ",".join(CSV_COLUMNS)
    assert CSV_COLUMNS == ("experiment_id", "body_kind", "d", "j", "density_kind", "n", "route", "reps",
                           "deficit_mean", "deficit_stderr", "predicted", "wall_time_s", "master_seed",
                           "git_or_build_id")
    with pytest.raises(ValueError):
        parse_csv("a,b\n1,2\n")


def _rec(i):
    return ResultRecord("x", "ball", 2, 2, "uniform", 10 * i + 1, "Direct", 5, 0.1 * i, 0.01, None, 0.5, 1, "b")


def test_append_and_atomicity(tmp_path, monkeypatch):
    out = tmp_path / "r.csv"
    append_records(out, [_rec(1)])
    append_records(out, [_rec(2), _rec(3)])
    assert read_records(out) == [_rec(1), _rec(2), _rec(3)]
    before = out.read_bytes()

    def boom(src, dst):
        raise KeyboardInterrupt  # killed between write and rename

    monkeypatch.setattr(os, "replace", boom)
    with pytest.raises(KeyboardInterrupt):
        append_records(out, [_rec(4)])
    monkeypatch.undo()
    assert out.read_bytes() == before
    assert [p.name for p in tmp_path.iterdir()] == ["r.csv"]


# -- runs -------------------------------------------------------------------------


def test_simulation_is_deterministic(tmp_path):
    c = cfg(routes=["Direct", "Projection"], y_samples=50)
    r1 = run_simulation(c, out=tmp_path / "a.csv", log=lambda s: None)
    r2 = run_simulation(c, threads=2, out=tmp_path / "b.csv", log=lambda s: None)
    assert [r.deficit_mean for r in r1.records] == [r.deficit_mean for r in r2.records]
    assert len(read_records(tmp_path / "a.csv")) == 6
    assert not partial_marker(tmp_path / "a.csv").exists()
    first = r1.records[0]
    assert first.predicted == pytest.approx(4 * math.pi**3 / 10**2)


def test_no_prediction_for_cube(tmp_path):
    c = cfg(body={"kind": "cube", "d": 2}, j=1)
    out = run_simulation(c, log=lambda s: None)
    assert all(r.predicted is None for r in out.records)
    assert all(r.route == "Support" for r in out.records)


def test_partial_marker_on_failure(tmp_path, monkeypatch):
    import randhull.experiments as ex

    calls = {"n": 0}
    real = ex.deficit

    def flaky(*a, **k):
        calls["n"] += 1
        if calls["n"] == 2:
            raise RuntimeError("disk on fire")
        return real(*a, **k)

    monkeypatch.setattr(ex, "deficit", flaky)
    out = tmp_path / "p.csv"
    with pytest.raises(RuntimeError):
        run_simulation(cfg(), out=out, log=lambda s: None)
    assert len(read_records(out)) == 1
    text = partial_marker(out).read_text()
    assert "status=partial" in text and "disk on fire" in text


def test_calibration_store(tmp_path):
    store = tmp_path / "cal.json"
    with pytest.raises(CalibrationMissing):
        lookup_constant(1, 2, store)
    assert lookup_constant(2, 2, store)[0] == pytest.approx(0.5)
    save_calibration(store, Calibration(1, 2, 0.124, 0.001, (32, 64, 128)), 100, 1)
    first = json.loads(store.read_text())["j=1,d=2"]
    save_calibration(store, Calibration(1, 2, 0.126, 0.001, (32, 64, 128)), 100, 2)
    data = json.loads(store.read_text())
    assert data["j=1,d=2"]["c"] == 0.126 and "timestamp" in data["j=1,d=2"]
    assert data["j=1,d=2"]["master_seed"] == 2 and first["master_seed"] == 1
    assert lookup_constant(1, 2, store)[0] == 0.126


# -- CLI --------------------------------------------------------------------------


def _write(tmp_path, text, name="c.toml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


CONFIG = """
experiment_id = "cli"
j = 1
n_grid = [16, 32, 64, 128]
reps = 400
master_seed = 1
[body]
kind = "ball"
d = 2
"""


def test_cli_simulate_and_rate(tmp_path, capsys):
    path = _write(tmp_path, CONFIG)
    out = str(tmp_path / "o.csv")
    assert cli.main(["simulate", "--config", path, "--out", out]) == 0
    assert len(read_records(out)) == 4
    assert cli.main(["rate", "--records", out, "--config", path]) == 0
    assert "verdict PASS" in capsys.readouterr().out
    bad = _write(tmp_path, CONFIG + "[tolerance]\nrate_band = [-1.2, -0.8]\n", "bad.toml")
    assert cli.main(["rate", "--records", out, "--config", bad]) == 3


def test_cli_rate_synthetic(tmp_path, capsys):
    recs = [ResultRecord("s", "ball", 2, 1, "uniform", n, "Support", 10, 3.0 * n**-2.0, 0.0, None, 0.0, 0, "b")
            for n in (10, 20, 40, 80)]
    p = tmp_path / "s.csv"
    append_records(p, recs)
    assert cli.main(["rate", "--records", str(p)]) == 0
    assert "exponent = -2.0000" in capsys.readouterr().out


def test_cli_exit_codes(tmp_path, capsys):
    bad = _write(tmp_path, CONFIG.replace("reps = 400", "reps = 400\nfoo = 1"))
    assert cli.main(["simulate", "--config", bad]) == 1
    assert "foo" in capsys.readouterr().err
    assert cli.main(["predict", "--body", "kind=cube,d=3", "--j", "3", "--n", "100"]) == 1
    assert "no rolling ball" in capsys.readouterr().err
    store = str(tmp_path / "none.json")
    assert cli.main(["predict", "--body", "kind=ball,d=2", "--j", "1", "--calibration-store", store]) == 1


def test_cli_predict_values(capsys):
    assert cli.main(["predict", "--body", "kind=ball,d=3", "--j", "3", "--n", "1000,4000"]) == 0
    out = capsys.readouterr().out
    assert f"{16 * math.pi / 1000:.6g}" in out
    assert f"{16 * math.pi / 4000:.6g}" in out
    assert cli.main(["predict", "--body", "kind=capsule,d=3,radius=1,length=2", "--j", "3", "--n", "1000"]) == 0
    assert f"{32 * math.pi / 1000:.6g}" in capsys.readouterr().out


def test_cli_capcheck(capsys):
    assert cli.main(["capcheck", "--body", "kind=ball,d=3", "--direction", "0,0,1", "--check", "0.01"]) == 0
    assert "closed form 0.5" in capsys.readouterr().out
    assert cli.main(["capcheck", "--body", "kind=ball,d=2", "--direction", "1,0", "--check", "1e-12"]) == 3


def test_cli_calibrate(tmp_path, capsys):
    store = str(tmp_path / "cal.json")
    assert cli.main(["calibrate", "--j", "2", "--d", "2", "--n-grid", "32,64,128", "--reps", "300",
                     "--seed", "4", "--calibration-store", store]) == 0
    entry = json.loads(open(store).read())["j=2,d=2"]
    assert entry["c"] == pytest.approx(0.5, rel=0.15)


def test_cli_selftest(capsys):
    assert cli.main(["selftest"]) == 0
    assert "7/7 checks passed" in capsys.readouterr().out


def test_parse_spec():
    assert cli.parse_spec("kind=ellipsoid,semiaxes=2:1") == {"kind": "ellipsoid", "semiaxes": [2, 1]}
    assert cli.parse_spec("kind=ball,d=3,radius=1.5") == {"kind": "ball", "d": 3, "radius": 1.5}
    with pytest.raises(ConfigError):
        cli.parse_spec("kind")
