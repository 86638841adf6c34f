import csv
import io
import json

import pytest

from geonc.analytics import residual_snc
from geonc.cli import main


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def rows(text):
    return list(csv.DictReader(io.StringIO("\n".join(l for l in text.splitlines() if not l.startswith("#")))))


def test_analyze(capsys):
    code, out, _ = run(["analyze", "--k", "50", "--q", "8", "--eps", "0.1,0.1", "--n-range", "60:60"], capsys)
    assert code == 0
    assert out.startswith("# geonc analyze")
    r = rows(out)
    assert [x["h"] for x in r] == ["1", "2"]
    eta = residual_snc(50, 60, 8, 0.1)
    assert float(r[1]["rho_nc"]) == pytest.approx((1 - eta) ** 2, rel=1e-9)
    assert float(r[1]["rho_unc"]) == pytest.approx(0.81)


def test_analyze_lossless_and_usage(capsys):
    _, out, _ = run(["analyze", "--k", "5", "--eps", "0"], capsys)
    assert {x["rho_nc"] for x in rows(out)} == {"1"}
    assert run(["analyze", "--eps", "0.1"], capsys)[0] == 2
    assert run(["analyze", "--k", "5", "--eps", "0.1", "--n-range", "3:4"], capsys)[0] == 2
    assert run(["nosuch"], capsys)[0] == 2


def test_simulate_determinism_and_schema(tmp_path, capsys, monkeypatch):
    monkeypatch.chdir(tmp_path)
    (tmp_path / "c.json").write_text(json.dumps({"k": 4, "n": [5, 6], "paths": [[0.2], [1.0]], "trials": 200}))
    assert main(["simulate", "--config", "c.json", "-o", "o.csv"]) == 0
    first = (tmp_path / "o.csv").read_bytes()
    assert main(["simulate", "--config", "c.json", "-o", "o.csv"]) == 0
    assert (tmp_path / "o.csv").read_bytes() == first
    r = rows(first.decode())
    assert [x["failure"] for x in r if x["eps"] == "1"] == ["1", "1"]
    assert "# seed=0" in first.decode()
    monkeypatch.setenv("NCF_SEED", "77")
    main(["simulate", "--config", "c.json", "-o", "p.csv"])
    assert "# seed=77" in (tmp_path / "p.csv").read_text()
    (tmp_path / "bad.json").write_text(json.dumps({"k": 4, "n": 5, "paths": [[2.0]], "trials": 10}))
    assert main(["simulate", "--config", "bad.json"]) == 2
    (tmp_path / "bad2.json").write_text(json.dumps({"k": 6, "n": 5, "paths": [[0.1]], "trials": 10}))
    assert main(["simulate", "--config", "bad2.json"]) == 2


def test_rate_region(capsys):
    code, out, _ = run(["rate-region", "--grid", "1"], capsys)
    assert code == 0
    assert len(rows(out)) == 2  # one cell per scheme
    assert "# area_ratio=1" in out
    assert run(["rate-region", "--r-min", "0.9", "--r-max", "0.5"], capsys)[0] == 2
    code, out, _ = run(["rate-region", "--diagnostic", "0.1", "--r-min", "0.3", "--k", "70"], capsys)
    assert code == 0 and "# breakpoint=0.08" in out


def test_optimize_and_infeasible(capsys):
    code, out, _ = run(["optimize", "--k", "50", "--eps", "0.1,0.1", "--beta0", "1023900"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["point"]["target_met"] and doc["operative_range"]["activate"]
    assert run(["optimize", "--k", "50", "--eps", "0.1", "--beta0", "1"], capsys)[0] == 3


def test_connectivity(capsys):
    code, out, _ = run(["connectivity", "--k", "50", "--eps", "0.1,0.2", "--rho0", "0.8,0.85", "--beta0", "1023900"], capsys)
    assert code == 0
    r = rows(out)
    assert list(r[0]) == ["beta0", "rho0", "eps", "h_nc", "h_unc", "gamma", "undefined_flag"]
    assert r[0]["h_unc"] == "2"
    assert r[3]["undefined_flag"] == "1"


def test_geo_and_lifecycle(tmp_path, capsys, monkeypatch):
    monkeypatch.chdir(tmp_path)
    (tmp_path / "r.csv").write_text(
        "node_id,peer_id,lat,lon,eps_est,samples,updated_at\nA,B,1,1,0.1,3,10\nB,C,1,1,0.05,3,10\nB,X,1,1,7,1,1\n"
    )
    code, out, _ = run(["geo", "ingest", "r.csv", "--store", "s.csv"], capsys)
    assert code == 0 and json.loads(out)["reports"][0]["rejected"] == 1
    code, out, _ = run(["geo", "query", "--store", "s.csv", "--path", "A,B,C"], capsys)
    assert json.loads(out)["eps"] == [0.1, 0.05]
    assert run(["geo", "query", "--store", "s.csv", "--path", "A,Q"], capsys)[0] == 2
    (tmp_path / "ev.txt").write_text("RequestActivate\nInstantiationAck\nRequestTerminate\nTerminationAck\n")
    code, out, _ = run(["lifecycle", "--script", "ev.txt", "--store", "s.csv", "--path", "A,B,C"], capsys)
    assert code == 0
    assert json.loads(out.strip().splitlines()[-1]) == {"final_state": "Inactive"}
    (tmp_path / "bad.txt").write_text("MonitorTick\n")
    assert run(["lifecycle", "--script", "bad.txt", "--strict"], capsys)[0] == 2


def test_docs_schema_matches_package_and_example_validates():
    from pathlib import Path

    import jsonschema

    from geonc.cli import load_schema

    docs = Path(__file__).resolve().parents[1] / "docs"
    assert json.loads((docs / "scenario.schema.json").read_text()) == load_schema()
    jsonschema.validate(json.loads((docs / "example.json").read_text()), load_schema())
