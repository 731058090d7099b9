import csv
import json

import pytest

from prophetlp.cli import ExperimentReport, main
from prophetlp.instances import dump_instance, generate_random_instance


@pytest.fixture
def toy_path(tmp_path, toy):
    path = tmp_path / "toy.json"
    dump_instance(toy, path)
    return str(path)


@pytest.fixture
def xos_path(tmp_path):
    path = tmp_path / "xos.json"
    dump_instance(generate_random_instance("xos", 3, 2, 2, rng=11), path)
    return str(path)


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip().startswith("{") else out)


def test_solve_prices_xos(capsys, toy_path):
    code, rep = run(capsys, "solve-prices", toy_path, "--class", "xos")
    assert code == 0
    assert rep["prices"] == pytest.approx([0.5])
    assert rep["primal_objective"] == pytest.approx(0, abs=1e-12)


def test_solve_prices_below_tight_ratio(capsys, toy_path):
    code, rep = run(capsys, "solve-prices", toy_path, "--alpha", "1.8", "--beta", "1")
    assert code == 1
    assert rep["primal_objective"] < 0


def test_malformed_instance(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"m": 1, "class": "xos"}')
    assert main(["solve-prices", str(bad)]) == 2
    bad.write_text("][")
    assert main(["solve-prices", str(bad)]) == 2
    assert main(["solve-prices", str(tmp_path / "missing.json")]) == 2


def test_bad_parameters(capsys, toy_path):
    assert main(["solve-prices", toy_path, "--alpha", "2", "--beta", "0"]) == 2
    assert main(["solve-prices", toy_path, "--alpha", "2"]) == 2
    assert main(["solve-prices", toy_path, "--class", "mph_balanced", "--k", "1"]) == 2


def test_simulate_from_lp_exact(capsys, toy_path):
    code, rep = run(capsys, "simulate", toy_path, "--from-lp", "--exact")
    assert code == 0
    assert rep["expected_welfare"] == 1.0
    assert rep["achieved_ratio"] == 1.0


def test_simulate_monte_carlo_deterministic(capsys, xos_path):
    argv = ["simulate", xos_path, "--from-lp", "--samples", "2000", "--seed", "1"]
    main(argv)
    first = capsys.readouterr().out
    main(argv)
    assert capsys.readouterr().out == first
    assert json.loads(first)["welfare_samples"] == 2000


def test_simulate_prices_file(capsys, tmp_path, toy_path):
    prices = tmp_path / "p.json"
    prices.write_text(json.dumps({"prices": [0.25]}))
    code, rep = run(capsys, "simulate", toy_path, "--prices", str(prices))
    assert code == 0 and rep["expected_welfare"] == 1.0
    prices.write_text(json.dumps([-1.0]))
    assert main(["simulate", toy_path, "--prices", str(prices)]) == 2
    prices.write_text(json.dumps([1.0, 2.0]))
    assert main(["simulate", toy_path, "--prices", str(prices)]) == 2


def test_verify_dual_from_lp_and_roundtrip(capsys, tmp_path, xos_path):
    cert = tmp_path / "cert.json"
    code, rep = run(capsys, "verify-dual", xos_path, "--from-lp", "--class", "xos",
                    "--export-certificate", str(cert))
    assert code == 0
    assert rep["eq1_min_margin"] >= -1e-9 and rep["claim1_min_margin"] >= -1e-7
    code2, rep2 = run(capsys, "verify-dual", xos_path, "--certificate", str(cert), "--class", "xos")
    assert code2 == 0
    for key in ("eq1_min_margin", "claim1_min_margin", "dual_objective"):
        assert rep2[key] == pytest.approx(rep[key], abs=1e-12)


def test_verify_dual_point_mass_on_everything(capsys, tmp_path, xos_path):
    cert = tmp_path / "cert.json"
    cert.write_text(json.dumps({"mu": [{"items": [0, 1, 2], "weight": 1.0}]}))
    code, rep = run(capsys, "verify-dual", xos_path, "--certificate", str(cert))
    assert code == 1
    assert rep["flags"]["eq1_feasible"] is False


def test_params(capsys):
    code, out = run(capsys, "params", "--class", "mph_balanced", "--k", "2", "--json")
    assert code == 0
    assert "6" in out and "0.5" in out
    main(["params", "--class", "mph_improved", "--k", "3", "--json"])
    (row,) = json.loads(capsys.readouterr().out)
    assert row["alpha"] == pytest.approx(2 * 3 + 2 * 6 ** 0.5 - 1)
    assert row["beta"] == pytest.approx(1.5 ** 0.5 - 1)
    main(["params", "--class", "xos", "--json"])
    (row,) = json.loads(capsys.readouterr().out)
    assert (row["alpha"], row["beta"]) == (2, 1)


def test_report_roundtrip(capsys, tmp_path, xos_path):
    out = tmp_path / "rep.json"
    table = tmp_path / "rep.csv"
    code = main(["report", xos_path, "--output", str(out), "--csv", str(table)])
    assert code == 0
    doc = json.loads(out.read_text())
    rep = ExperimentReport.from_dict(doc)
    assert rep.passed and rep.to_dict() == doc
    assert rep.achieved_ratio <= rep.parameters["alpha"]
    rows = list(csv.DictReader(table.open()))
    assert rows[0]["command"] == "report"


def test_report_validation_catches_tampering(capsys, xos_path):
    main(["report", xos_path])
    doc = json.loads(capsys.readouterr().out)
    doc["claim1_min_margin"] = -1.0
    with pytest.raises(ValueError):
        ExperimentReport.from_dict(doc)


def test_missing_price_source(capsys, toy_path):
    assert main(["simulate", toy_path]) == 2
    assert main(["verify-dual", toy_path]) == 2
