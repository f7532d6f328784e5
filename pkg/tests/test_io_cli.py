import json
import subprocess
import sys
from importlib.resources import files

import jsonschema
import numpy as np
import pytest

from opdelta import basis
from opdelta.brownian import BrownianModel, default_grid, sample_paths, true_rho2
from opdelta.cli import RunConfig, CliError, main
from opdelta.io import DataError, SplitError, dumps, format_float, ingest, read_csv, write_csv


def schema(name):
    return json.loads((files("opdelta") / "schemas" / f"{name}.schema.json").read_text())


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    return code, capsys.readouterr().out


def write_lines(path, lines):
    path.write_text("\n".join(lines) + "\n")
    return path


def test_round_trip_recovers_coefficients(tmp_path, rng):
    grid = default_grid(201)
    coeffs = rng.standard_normal((5, 12)) / np.arange(1, 13)
    write_csv(tmp_path / "c.csv", grid, basis.synthesize(grid, coeffs, 1.0))
    sample, structure = ingest(tmp_path / "c.csv", 1.0, 12)
    assert (structure.dim, structure.split) == (12, 6)
    np.testing.assert_allclose(sample.data, coeffs, atol=1e-3)


def test_split_off_grid_uses_one_sided_edge_values(tmp_path, rng):
    grid = np.linspace(0.0, 2.0, 400)
    coeffs = rng.standard_normal((3, 8)) / np.arange(1, 9)
    write_csv(tmp_path / "c.csv", grid, basis.synthesize(grid, coeffs, 0.9))
    sample, _ = ingest(tmp_path / "c.csv", 0.9, 8)
    np.testing.assert_allclose(sample.data, coeffs, atol=1e-3)


def test_constant_curves_give_equal_coefficients(tmp_path):
    path = write_lines(tmp_path / "k.csv", ["0,0.5,1,1.5,2", "1,1,1,1,1", "1,1,1,1,1"])
    sample, _ = ingest(path, 1.0, 4)
    np.testing.assert_array_equal(sample.data[0], sample.data[1])


def test_ragged_row_reports_line(tmp_path):
    path = write_lines(tmp_path / "r.csv", ["0,1,2", "1,2,3", "1,2"])
    with pytest.raises(DataError, match="line 3") as info:
        read_csv(path)
    assert info.value.line == 3


def test_non_numeric_value_reports_line(tmp_path):
    path = write_lines(tmp_path / "r.csv", ["0,1,2", "1,x,3"])
    with pytest.raises(DataError, match="line 2"):
        read_csv(path)


def test_non_monotone_grid(tmp_path):
    path = write_lines(tmp_path / "r.csv", ["0,1,0.5,2", "1,2,3,4"])
    with pytest.raises(DataError, match="line 1.*strictly increasing"):
        read_csv(path)


@pytest.mark.parametrize("split", [0.0, 2.0, 3.5, -1.0, 0.5])
def test_split_out_of_range(tmp_path, split):
    path = write_lines(tmp_path / "r.csv", ["0,1,2", "1,2,3", "2,1,0"])
    with pytest.raises(SplitError):
        ingest(path, split, 4)


def test_empty_file(tmp_path):
    path = write_lines(tmp_path / "e.csv", [])
    with pytest.raises(DataError):
        read_csv(path)


def test_format_float_seventeen_digits():
    assert format_float(0.1) == "0.10000000000000001"
    assert float(format_float(np.pi)) == np.pi
    with pytest.raises(ValueError):
        format_float(float("nan"))


def test_dumps_round_trips_exactly(rng):
    vals = rng.standard_normal(10)
    doc = json.loads(dumps({"x": vals, "k": 3, "flag": True, "none": None}))
    np.testing.assert_array_equal(doc["x"], vals)
    assert doc["k"] == 3 and doc["flag"] is True and doc["none"] is None


def test_run_config_validation():
    RunConfig(alpha=0.1).validate()
    for cfg, code in [(RunConfig(0.0), "config.alpha_nonpositive"), (RunConfig(0.1, basis_size=2), "config.basis_size"),
                      (RunConfig(0.1, confidence=1.0), "config.confidence")]:
        with pytest.raises(CliError) as info:
            cfg.validate()
        assert info.value.code == code and info.value.exit_status == 3


def test_fit_missing_file(tmp_path, capsys):
    code, out = run(capsys, "fit", "--data", tmp_path / "nope.csv", "--split", 1, "--alpha", 0.1)
    assert code == 2
    doc = json.loads(out)
    jsonschema.validate(doc, schema("error"))
    assert doc["error"]["code"] == "io.not_found"


def test_fit_alpha_zero(tmp_path, capsys):
    path = write_lines(tmp_path / "r.csv", ["0,1,2", "1,2,3", "2,1,0"])
    code, out = run(capsys, "fit", "--data", path, "--split", 1, "--alpha", 0)
    assert code == 3
    assert json.loads(out)["error"]["code"] == "config.alpha_nonpositive"


def test_fit_malformed_and_split_codes(tmp_path, capsys):
    bad = write_lines(tmp_path / "r.csv", ["0,1,2", "1,2"])
    code, out = run(capsys, "fit", "--data", bad, "--split", 1, "--alpha", 0.1)
    assert code == 2 and json.loads(out)["error"]["code"] == "io.malformed_csv"
    assert "line 2" in json.loads(out)["error"]["message"]
    good = write_lines(tmp_path / "g.csv", ["0,1,2", "1,2,3", "2,1,0"])
    code, out = run(capsys, "fit", "--data", good, "--split", 5, "--alpha", 0.1, "--basis-size", 4)
    assert code == 3 and json.loads(out)["error"]["code"] == "config.split_out_of_range"


def test_fit_constant_curves_degenerate(tmp_path, capsys):
    path = write_lines(tmp_path / "k.csv", ["0,0.5,1,1.5,2", "1,1,1,1,1", "1,1,1,1,1"])
    code, out = run(capsys, "fit", "--data", path, "--split", 1, "--alpha", 0.1, "--basis-size", 4)
    assert code == 4
    doc = json.loads(out)
    jsonschema.validate(doc, schema("error"))
    assert doc["error"]["code"] == "numeric.degenerate"


def test_fit_single_curve(tmp_path, capsys):
    path = write_lines(tmp_path / "one.csv", ["0,1,2", "1,2,3"])
    code, out = run(capsys, "fit", "--data", path, "--split", 1, "--alpha", 0.1, "--basis-size", 4)
    assert code == 4 and json.loads(out)["error"]["code"] == "numeric.insufficient_data"


def test_fit_on_simulated_csv(tmp_path, capsys):
    csv_path = tmp_path / "bm.csv"
    assert run(capsys, "simulate", "--a1sq", 0.81, "--n", 400, "--seed", 3, "--out", csv_path)[0] == 0
    out_path = tmp_path / "fit.json"
    code, _ = run(capsys, "fit", "--data", csv_path, "--split", 1, "--alpha", 0.1, "--out", out_path)
    assert code == 0
    doc = json.loads(out_path.read_text())
    jsonschema.validate(doc, schema("fit_report"))
    assert doc["n"] == 400 and doc["M"] == 20
    assert abs(doc["rho2"] - true_rho2(BrownianModel.single_mode(0.81, 0.1))) < 0.1
    assert doc["ci"][0] < doc["rho2"] < doc["ci"][1]


def test_simulate_matches_library(tmp_path, capsys):
    csv_path = tmp_path / "bm.csv"
    run(capsys, "simulate", "--a1sq", 0.5, "--n", 7, "--seed", 2, "--kl-terms", 10, "--grid-points", 51, "--out", csv_path)
    grid, rows = read_csv(csv_path)
    np.testing.assert_array_equal(grid, default_grid(51))
    np.testing.assert_array_equal(rows, sample_paths(BrownianModel.single_mode(0.5, 1.0, 10), 7, grid, 2))


def test_simulate_rejects_even_grid(tmp_path, capsys):
    code, out = run(capsys, "simulate", "--a1sq", 0.5, "--n", 5, "--grid-points", 50, "--out", tmp_path / "x.csv")
    assert code == 3 and json.loads(out)["error"]["code"] == "config.invalid"


def test_mc_single_rep(capsys):
    code, out = run(capsys, "mc", "--a1sq", 0.5, "--alpha", 0.1, "--n", 50, "--reps", 1, "--kl-terms", 10)
    assert code == 0
    doc = json.loads(out)
    jsonschema.validate(doc, schema("mc_result"))
    assert len(doc["standardized"]) == 1


def test_mc_bad_params(capsys):
    code, out = run(capsys, "mc", "--a1sq", 1.5, "--alpha", 0.1, "--n", 50, "--reps", 2)
    assert code == 3
    code, out = run(capsys, "mc", "--a1sq", 0.5, "--alpha", -1, "--n", 50, "--reps", 2)
    assert code == 3 and json.loads(out)["error"]["code"] == "config.alpha_nonpositive"
    code, out = run(capsys, "mc", "--a1sq", 0.5, "--alpha", 0.1, "--n", 50, "--reps", 0)
    assert code == 3


def test_mc_byte_identical_subprocess(tmp_path):
    outs = []
    for i, threads in enumerate(("1", "3")):
        path = tmp_path / f"mc{i}.json"
        cmd = [sys.executable, "-m", "opdelta", "mc", "--a1sq", "0.81", "--alpha", "0.1", "--n", "60",
               "--reps", "6", "--seed", "5", "--kl-terms", "10", "--threads", threads, "--out", str(path)]
        subprocess.run(cmd, check=True)
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]
    jsonschema.validate(json.loads(outs[0]), schema("mc_result"))


def test_oracle_command(capsys):
    code, out = run(capsys, "oracle", "--dim", 4, "--seed", 1, "--instances", 5)
    assert code == 0
    doc = json.loads(out)
    jsonschema.validate(doc, schema("oracle_report"))
    assert doc["passed"] and doc["max_abs_diff"] <= 1e-6


def test_oracle_rejects_dim(capsys):
    code, out = run(capsys, "oracle", "--dim", 12)
    assert code == 3
