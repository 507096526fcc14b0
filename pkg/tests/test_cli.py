import csv
import io
import json

import pytest

from freewass.cli import EXIT_CONFIG, EXIT_FAILED, EXIT_OK, REPORT_HEADER, list_checks, main
from freewass.config import ConfigError, parse_config
from freewass.verify import CHECKS

SC = {"type": "semicircle", "center": 0, "variance": 1}
SC2 = {"type": "dilate", "alpha": 2, "of": SC}


def write_config(tmp_path, **fields):
    raw = {"schema_version": 1, "output_dir": "out", "resolution": {"n_grid": 1024,
                                                                    "n_quantile": 4096},
           "measures": {"sc": SC, "sc2": SC2}}
    raw.update(fields)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(raw))
    return path


def read_report(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def test_semicircle_identities_exit_zero(tmp_path, capsys):
    path = write_config(tmp_path, checks=[
        {"check_id": c, "measures": ["sc"]}
        for c in ("check_lsi", "check_identity_i_ou", "check_phi_forms", "check_hilbert_pairing",
                  "check_sigma_nonnegative", "check_chi_scaling")])
    assert main(["run", str(path)]) == EXIT_OK
    rows = read_report(tmp_path / "out" / "report.csv")
    assert len(rows) == 8
    assert all(r["status"] == "pass" for r in rows)
    assert list(rows[0].keys()) == REPORT_HEADER
    manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert manifest["exit_status"] == 0
    assert manifest["config"]["measures"]["sc"] == SC
    assert len(manifest["config_sha256"]) == 64
    assert "report.csv" in manifest["outputs"]
    assert "0 fail" in capsys.readouterr().out


def test_reported_checks_never_fail_the_run(tmp_path):
    path = write_config(tmp_path, checks=[{"check_id": "check_talagrand", "measures": ["sc2"]}])
    assert main(["run", str(path)]) == EXIT_OK
    rows = read_report(tmp_path / "out" / "report.csv")
    assert [r["status"] for r in rows] == ["reported", "reported"]
    assert float(rows[0]["margin"]) == pytest.approx(-0.19315, abs=1e-3)
    assert float(rows[1]["margin"]) == pytest.approx(0.61370, abs=1e-3)


def test_failed_check_sets_exit_status(tmp_path, capsys):
    path = write_config(tmp_path, checks=[
        {"check_id": "check_lsi", "measures": ["sc2"], "tolerance": 1e-4},
        {"check_id": "check_hilbert_pairing", "measures": ["sc2"], "tolerance": 1e-300}])
    assert main(["run", str(path)]) == EXIT_FAILED
    assert "FAIL check_hilbert_pairing" in capsys.readouterr().out


def test_malformed_measure_names_field(tmp_path, capsys):
    path = write_config(tmp_path, measures={"bad": {"type": "semicircle", "variance": -1}})
    assert main(["run", str(path)]) == EXIT_CONFIG
    assert "measures.bad" in capsys.readouterr().err


@pytest.mark.parametrize("fields,where", [
    ({"schema_version": 2}, "schema_version"),
    ({"checks": [{"check_id": "check_nope", "measures": ["sc"]}]}, "checks[0].check_id"),
    ({"checks": [{"check_id": "check_lsi", "measures": ["zz"]}]}, "checks[0].measures[0]"),
    ({"checks": [{"check_id": "check_lsi", "measures": ["sc"], "tolerance": -1}]},
     "checks[0].tolerance"),
    ({"checks": [{"check_id": "check_talagrand", "measures": ["sc"], "tolerance": 1}]},
     "checks[0].tolerance"),
    ({"checks": [{"check_id": "check_lsi", "measures": ["sc"], "params": {"x": 1}}]},
     "checks[0].params.x"),
    ({"resolution": {"n_grid": 10}}, "resolution.n_grid"),
    ({"flow": {"measures": ["sc"], "t_grid": [-1]}}, "flow.t_grid[0]"),
    ({"oracle": {"measure": "sc", "n_dim": 5}}, "oracle[0].n_dim"),
    ({"extra": 1}, "extra"),
])
def test_config_errors_name_the_field(tmp_path, fields, where):
    raw = {"schema_version": 1, "measures": {"sc": SC}}
    raw.update(fields)
    with pytest.raises(ConfigError) as err:
        parse_config(raw)
    assert str(err.value).startswith(where)


def test_invalid_json_is_a_config_error(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    assert main(["run", str(path)]) == EXIT_CONFIG
    assert main(["run", str(tmp_path / "missing.json")]) == EXIT_CONFIG


def test_output_dir_relative_to_config(tmp_path):
    cfg = parse_config({"schema_version": 1, "measures": {"sc": SC}, "output_dir": "res"},
                       base_dir=tmp_path)
    assert cfg.output_dir == tmp_path / "res"


def test_list_checks():
    buf = io.StringIO()
    text = list_checks(buf)
    lines = text.strip().splitlines()
    assert len(lines) == len(CHECKS)
    lsi = next(line for line in lines if line.startswith("check_lsi\t"))
    assert "tolerance=0.0001" in lsi and "log-Sobolev" in lsi
    tal = next(line for line in lines if line.startswith("check_talagrand\t"))
    assert "reported-only" in tal
    assert main(["list-checks"]) == EXIT_OK


def test_dump_flow_and_oracle(tmp_path):
    path = write_config(tmp_path, measures={"sc2": SC2, "d0": {"type": "atoms", "atoms": [[0, 1]]}},
                        flow={"measures": ["sc2"], "t_grid": [0.0, 0.5]},
                        oracle={"measure": "d0", "n_dim": 64, "n_trials": 3, "seed": 5,
                                "ks_threshold": 0.2, "w2_threshold": 0.2})
    assert main(["dump-flow", str(path)]) == EXIT_OK
    rows = (tmp_path / "out" / "flow_sc2.csv").read_text().splitlines()
    assert rows[0] == "t,x,p,hp" and len(rows) == 1 + 2 * 1024
    assert main(["oracle", str(path)]) == EXIT_OK
    ev = (tmp_path / "out" / "eigenvalues_0_d0.csv").read_text().splitlines()
    assert len(ev) == 1 + 3 * 64
    manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert manifest["seeds"] == [5] and manifest["command"] == "oracle"


def test_runs_are_byte_identical(tmp_path, monkeypatch):
    fields = dict(checks=[{"check_id": "check_lsi", "measures": ["sc", "sc2"]},
                          {"check_id": "check_talagrand", "measures": ["sc2"]},
                          {"check_id": "check_burgers", "measures": ["sc2"]}],
                  oracle={"measure": "sc", "n_dim": 48, "n_trials": 2, "seed": 9,
                          "ks_threshold": 0.5, "w2_threshold": 0.5},
                  flow={"measures": ["sc2"], "t_grid": [0.5]})
    outputs = []
    for k, workers in enumerate(("1", "3")):
        d = tmp_path / f"run{k}"
        d.mkdir()
        monkeypatch.setenv("FREEWASS_WORKERS", workers)
        assert main(["run", str(write_config(d, **fields))]) == EXIT_OK
        outputs.append({p.name: p.read_bytes() for p in sorted((d / "out").glob("*.csv"))})
    assert outputs[0].keys() == outputs[1].keys()
    assert outputs[0] == outputs[1]
