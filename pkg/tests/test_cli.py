import csv
import json
import subprocess
import sys

import pytest

from wavenets.cli import EXIT_CONFIG, EXIT_FAIL, EXIT_OK, load_scenario, main, shipped_scenarios
from wavenets.nets import load_net

FAST = ["conditions_minkowski_rw", "conditions_adversarial", "hadamard_minkowski",
        "negligible_data_uniqueness", "rw_domain_of_dependence"]


def _scenario_file(tmp_path, name, **changes):
    cfg = load_scenario(name)
    cfg.update(changes)
    path = tmp_path / f"{cfg['name']}.json"
    path.write_text(json.dumps(cfg))
    return path


def test_list_shows_shipped_scenarios(capsys):
    assert main(["list"]) == EXIT_OK
    names = [line.split("\t")[0] for line in capsys.readouterr().out.splitlines()]
    assert len(names) >= 8
    for expected in ("minkowski_standing_wave", "ppwave_gronwall", "riesz_fundamental_n2",
                     "rw_domain_of_dependence", "distributional_delta", "conditions_minkowski_rw"):
        assert expected in names


def test_every_scenario_has_analyses():
    for name, cfg in shipped_scenarios().items():
        assert cfg["name"] == name and cfg["analyses"]


@pytest.mark.parametrize("name", FAST)
def test_fast_scenarios_pass(tmp_path, name):
    assert main(["run", name, "--out", str(tmp_path / name)]) == EXIT_OK
    report = json.loads((tmp_path / name / "report.json").read_text())
    assert report["status"] == "PASS"
    assert (tmp_path / name / "metadata.json").exists()


def test_negative_final_time_is_a_config_error(tmp_path, capsys):
    path = _scenario_file(tmp_path, "minkowski_standing_wave", T=-1.0)
    assert main(["run", str(path), "--out", str(tmp_path / "out")]) == EXIT_CONFIG
    assert "config error" in capsys.readouterr().err


def test_unknown_scenario_and_bad_json(tmp_path):
    assert main(["run", "no_such_scenario", "--out", str(tmp_path / "a")]) == EXIT_CONFIG
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["run", str(bad), "--out", str(tmp_path / "b")]) == EXIT_CONFIG


def test_unknown_analysis_is_rejected(tmp_path):
    path = _scenario_file(tmp_path, "conditions_minkowski_rw", analyses=[{"type": "telepathy"}])
    assert main(["run", str(path), "--out", str(tmp_path / "out")]) == EXIT_CONFIG


def test_failing_expectation_exits_one(tmp_path):
    cfg = load_scenario("conditions_adversarial")
    for a in cfg["analyses"]:
        a["expect"] = {"A": True, "B": True}
    path = tmp_path / "flipped.json"
    path.write_text(json.dumps(cfg))
    assert main(["run", str(path), "--out", str(tmp_path / "out")]) == EXIT_FAIL


def test_reports_are_deterministic(tmp_path):
    for d in ("a", "b"):
        assert main(["conditions", "conditions_minkowski_rw", "--out", str(tmp_path / d)]) == EXIT_OK
    assert (tmp_path / "a" / "report.json").read_bytes() == (tmp_path / "b" / "report.json").read_bytes()


def test_solve_dumps_fields(tmp_path):
    out = tmp_path / "sw"
    code = main(["solve", "minkowski_standing_wave", "--out", str(out), "--eps-count", "4", "--resolution", "128"])
    assert code == EXIT_OK
    u = load_net(out / "fields" / "u")
    assert len(u.grid) == 4 and u.mesh.shape == (128,)
    rep = json.loads((out / "report.json").read_text())
    assert [a["type"] for a in rep["analyses"]] == ["solve"]


def test_energy_subcommand_writes_csv(tmp_path):
    out = tmp_path / "en"
    assert main(["energy", "minkowski_standing_wave", "--out", str(out), "--resolution", "256"]) == EXIT_OK
    with open(out / "energy.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["tau", "eps", "E0", "E1", "ratio"]
    assert all(abs(float(r[4]) - 0.5) < 1e-9 for r in rows[1:])


def test_riesz_subcommand(tmp_path):
    out = tmp_path / "rz"
    assert main(["riesz", "riesz_fundamental_n2", "--out", str(out)]) == EXIT_OK
    assert list(out.glob("riesz_*.csv"))


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "wavenets.cli", "list"], capture_output=True, text=True)
    assert proc.returncode == 0 and "ppwave_gronwall" in proc.stdout
