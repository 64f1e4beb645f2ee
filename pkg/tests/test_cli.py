import csv
import io
import json
import os
import subprocess
import sys

import pytest

from hardcore_sir.cli import main
from hardcore_sir.config import build_run_config, parse_models, parse_theta_grid, read_scenario_file
from hardcore_sir.errors import DomainError, ParseError

BUNDLED_TRACE = os.path.join(os.path.dirname(__file__), "..", "src", "hardcore_sir", "data", "synthetic_lane.csv")


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def csv_rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_outage_low_activity_discretization(capsys):
    code, out, _ = run(capsys, "outage", "--scenario", "low_activity")
    assert code == 0
    rows = {r["model"]: r for r in csv_rows(out)}
    assert float(rows["discretization"]["p_out"]) == pytest.approx(1 - 0.89968, abs=5e-4)
    assert float(rows["M1"]["p_out"]) == pytest.approx(1 - 0.90050, abs=5e-4)
    assert rows["lemma3"]["note"] == ""


def test_outage_annotates_out_of_regime(capsys):
    code, out, _ = run(capsys, "outage", "--scenario", "meta_half_activity", "--models", "lemma3,lemma4", "--theta-db", "0")
    assert code == 0
    notes = {r["model"]: r["note"] for r in csv_rows(out)}
    assert "out of regime" in notes["lemma3"]
    assert "out of regime" in notes["lemma4"]


def test_csv_uses_seventeen_digits(capsys):
    _, out, _ = run(capsys, "outage", "--scenario", "low_activity", "--models", "M1")
    value = csv_rows(out)[0]["p_out"]
    assert float(value) == float(f"{float(value):.17g}")
    assert len(value.replace("0.", "").lstrip("0")) >= 15


def test_json_and_csv_values_identical(capsys):
    args = ["outage", "--scenario", "outage_sweep", "--theta-db=-10,0,10", "--models", "M1,M2,M4"]
    _, out_csv, _ = run(capsys, *args)
    _, out_json, _ = run(capsys, *args, "--format", "json")
    doc = json.loads(out_json)
    assert doc["command"] == "outage"
    for a, b in zip(csv_rows(out_csv), doc["rows"]):
        assert float(a["p_out"]) == b["p_out"]
        assert float(a["theta_db"]) == b["theta_db"]
        assert a["model"] == b["model"]


def test_empty_selection_is_usage_error(capsys):
    code, _, err = run(capsys, "outage", "--scenario", "low_activity", "--models", "")
    assert code == 2
    assert "at least one model" in err


def test_missing_scenario_file(capsys):
    code, _, err = run(capsys, "outage", "--scenario", "/no/such/file.cfg")
    assert code == 2
    assert "/no/such/file.cfg" in err


def test_missing_trace_file(capsys):
    code, _, err = run(capsys, "fit-trace", "--trace", "/no/such/trace.csv")
    assert code == 2
    assert "/no/such/trace.csv" in err


def test_unknown_model_is_usage_error(capsys):
    code, _, err = run(capsys, "outage", "--scenario", "low_activity", "--models", "M9")
    assert code == 2
    assert "M9" in err


def test_parameters_without_scenario(capsys):
    code, out, _ = run(capsys, "outage", "--override-lambda", "0.025", "--override-c", "16", "--xi", "0.5", "--models", "M4", "--theta-db", "0")
    assert code == 0
    assert len(csv_rows(out)) == 1
    code, _, err = run(capsys, "outage", "--models", "M4")
    assert code == 2


def test_domain_error_exit_code(capsys):
    code, _, err = run(capsys, "outage", "--scenario", "low_activity", "--xi", "1.5")
    assert code == 1
    assert "error" in err


def test_meta_ccdf_readout(capsys):
    code, out, _ = run(capsys, "meta", "--scenario", "meta_half_activity", "--theta-db", "0")
    assert code == 0
    rows = csv_rows(out)
    pick = {(r["model"], float(r["u"])): float(r["ccdf"]) for r in rows}
    assert pick[("discretization", 0.8)] == pytest.approx(0.83, abs=0.02)
    assert pick[("M2", 0.8)] == pytest.approx(0.70, abs=0.02)
    assert sum(1 for r in rows if r["model"] == "M1") == 201


def test_meta_flags_infeasible_fit_and_exits_zero(capsys):
    code, out, err = run(capsys, "meta", "--scenario", "meta_gen_beta")
    assert code == 0
    rows = csv_rows(out)
    flags = {r["model"]: r["flag"] for r in rows}
    assert flags["M2"] in ("InfeasibleMoments", "NoConvergence")
    assert flags["discretization"] == ""
    assert "warning" in err
    m2 = [r for r in rows if r["model"] == "M2"]
    assert m2[0]["m1"] != "" and m2[0]["ccdf"] == ""


def test_meta_is_deterministic(capsys):
    args = ["meta", "--scenario", "meta_half_activity", "--theta-db", "10", "--models", "M1", "--configs", "30", "--seed", "4"]
    _, a, _ = run(capsys, *args)
    _, b, _ = run(capsys, *args)
    assert a == b
    assert "simulation" in {r["model"] for r in csv_rows(a)}


def test_simulate_byte_identical(tmp_path, capsys):
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for p in paths:
        code, _, _ = run(capsys, "simulate", "--scenario", "meta_half_activity", "--configs", "50", "--seed", "9", "--out", str(p))
        assert code == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()
    assert paths[0].read_text().splitlines()[0] == "theta_db,p_out,ci,m1,m2,cov"


def test_simulate_json_per_config(capsys):
    code, out, _ = run(capsys, "simulate", "--scenario", "meta_half_activity", "--configs", "10", "--format", "json", "--per-config")
    assert code == 0
    doc = json.loads(out)
    assert len(doc["per_config_success"]) == 10
    assert len(doc["rows"]) == 3


def test_simulate_sampled_fading(capsys):
    code, out, _ = run(capsys, "simulate", "--scenario", "meta_half_activity", "--configs", "5", "--fading", "200", "--theta-db", "0")
    assert code == 0
    assert 0 <= float(csv_rows(out)[0]["p_out"]) <= 1


def test_simulate_from_trace(capsys):
    code, out, _ = run(capsys, "simulate", "--scenario", "meta_half_activity", "--configs", "20", "--theta-db", "0", "--trace", BUNDLED_TRACE)
    assert code == 0
    assert len(csv_rows(out)) == 1


def test_fit_bundled_fixture(capsys):
    code, out, _ = run(capsys, "fit-trace", "--trace", BUNDLED_TRACE)
    assert code == 0
    row = csv_rows(out)[0]
    assert row["lane"] == "left"
    assert float(row["lambda_hat"]) == pytest.approx(0.0205, rel=0.02)
    assert float(row["c_hat"]) == pytest.approx(14.82, rel=0.05)
    code, out, _ = run(capsys, "fit-trace", "--trace", BUNDLED_TRACE, "--format", "json", "--override-c", "14.82")
    assert json.loads(out)["left"]["c_hat"] == 14.82


def test_rmin(capsys):
    _, out, _ = run(capsys, "rmin", "--scenario", "outage_sweep")
    row = csv_rows(out)[0]
    assert float(row["rmin_m"]) == pytest.approx(500, abs=2)
    assert int(row["K"]) == 32
    _, out, _ = run(capsys, "rmin", "--scenario", "snapshot_1000")
    row = csv_rows(out)[0]
    assert float(row["rmin_m"]) == pytest.approx(442, abs=2)
    assert int(row["K"]) == 30
    assert float(row["R_m"]) == pytest.approx(445, abs=2)
    _, out, _ = run(capsys, "rmin", "--scenario", "three_lanes")
    middle = {r["lane"]: r for r in csv_rows(out)}["middle"]
    assert int(middle["K"]) == 14


def test_sweep(capsys):
    code, out, _ = run(capsys, "sweep", "--scenario", "outage_sweep", "--param", "xi", "--values", "0.1,0.5,1", "--models", "M1", "--theta-db", "0")
    assert code == 0
    rows = csv_rows(out)
    assert [float(r["xi"]) for r in rows] == [0.1, 0.5, 1.0]
    p = [float(r["p_out"]) for r in rows]
    assert p == sorted(p)
    code, _, _ = run(capsys, "sweep", "--scenario", "outage_sweep", "--param", "xi", "--values", "a,b")
    assert code == 2


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "hardcore_sir", "rmin", "--scenario", "low_activity"], capture_output=True, text=True, check=False
    )
    assert proc.returncode == 0
    assert proc.stdout.startswith("lane,r0_m,rmin_m,K,R_m")


def test_theta_grid_grammar():
    assert parse_theta_grid("-10:30:10") == [-10.0, 0.0, 10.0, 20.0, 30.0]
    assert parse_theta_grid("0, 5") == [0.0, 5.0]
    assert parse_theta_grid("7") == [7.0]
    for bad in ("1:0:1", "0:1:0", "x"):
        with pytest.raises(DomainError):
            parse_theta_grid(bad)
    assert parse_models("m1, Discretization") == ["M1", "discretization"]


def test_scenario_parse_errors(tmp_path):
    cases = {
        "lam = 0.02\nbogus = 1\n": 2,
        "lam = 0.02\nlam = 0.03\n": 2,
        "# c\nlam = abc\n": 2,
        "lam 0.02\n": 1,
        "lane.mid.color = red\n": 1,
    }
    for text, line in cases.items():
        p = tmp_path / "s.cfg"
        p.write_text(text)
        with pytest.raises(ParseError) as err:
            read_scenario_file(str(p))
        assert err.value.line == line


def test_scenario_lanes_and_plan():
    cfg = build_run_config(read_scenario_file("three_lanes"), {"configs": 10})
    assert [ln.name for ln in cfg.other_lanes] == ["middle", "right"]
    assert cfg.other_lanes[0].K == 14
    assert cfg.plan.n_configs == 10 and cfg.plan.exact
    assert build_run_config(read_scenario_file("meta_half_activity")).plan is None
