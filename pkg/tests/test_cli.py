import csv
import json
import math
import os
from fractions import Fraction

import numpy as np
import pytest

from gkpdd import cli
from gkpdd.errors import OutputError, PreconditionError
from gkpdd.fockspace import SQRT_2PI
from gkpdd.twirl import twirl_measure


def run(tmp_path, *argv, name="out"):
    path = tmp_path / name
    code = cli.main([*argv, "--out", str(path)])
    return code, path


def test_twirl_measure_roundtrip(tmp_path):
    code, path = run(tmp_path, "twirl-measure", "--N", "3", "--variant", "stabilizer", name="m.csv")
    assert code == 0
    m = cli.read_measure_table(str(path), 3, "stabilizer")
    assert m.weights == twirl_measure(3, "stabilizer").weights
    rows = list(csv.DictReader(open(path)))
    assert len(rows) == 49
    assert float(rows[0]["weight_float"]) == pytest.approx(float(Fraction(1, 4096)))


def test_twirl_measure_json(tmp_path):
    code, path = run(tmp_path, "twirl-measure", "--N", "1", "--format", "json")
    rows = json.loads(path.read_text())
    assert code == 0 and len(rows) == 9
    center = [r for r in rows if r["n"] == 0 and r["m"] == 0][0]
    assert center["weight_float"] == 0.25


def test_filter_grid_peak_width(tmp_path):
    code, path = run(tmp_path, "filter-grid", "--N", "10", "--extent", "3", "--points", "61")
    rows = [{k: float(v) for k, v in r.items()} for r in csv.DictReader(open(path))]
    assert code == 0 and len(rows) == 61 * 61
    axis = sorted((r["re_delta"], r["filter"]) for r in rows if r["im_delta"] == 0)
    xs, vals = np.array(axis).T
    assert vals[np.argmin(np.abs(xs))] == pytest.approx(1)
    # the peak narrows as 1/sqrt(N): at N=10 the half maximum sits well inside sqrt(2pi)/4
    half = xs[(vals >= 0.5) & (np.abs(xs) < 1)]
    assert half.max() < SQRT_2PI / 4


def test_schedule_json(tmp_path):
    code, path = run(tmp_path, "schedule", "--N", "2")
    doc = json.loads(path.read_text())
    assert code == 0
    assert doc["header"] == {"N": 2, "shift_set": "logical", "M": 25}
    assert sum(Fraction(e["tau_num"], e["tau_den"]) for e in doc["entries"]) == 1
    assert doc["entries"][0]["Q_re"] == 0 and doc["entries"][0]["Q_im"] == 0


def test_schedule_csv(tmp_path):
    code, path = run(tmp_path, "schedule", "--N", "1", "--shift-set", "pauli_x", "--format", "csv")
    rows = list(csv.DictReader(open(path)))
    assert code == 0 and len(rows) == 9
    assert max(math.hypot(float(r["P_re"]), float(r["P_im"])) for r in rows) <= math.sqrt(5 * math.pi / 2) + 1e-12


def test_spectrum_table(tmp_path):
    code, path = run(tmp_path, "spectrum", "--N", "1,4")
    rows = cli.read_spectrum_table(str(path))
    assert code == 0
    assert [int(r["N"]) for r in rows] == [1, 4]
    assert float(rows[0]["E0"]) == pytest.approx(-0.152165, abs=1e-6)
    assert rows[1]["converged"] == "true"
    assert float(rows[1]["delta_q0"]) == pytest.approx(float(rows[1]["delta_p0"]))


def test_spectrum_convergence_failure_row(tmp_path, capsys):
    code, path = run(tmp_path, "spectrum", "--N", "20", "--start-cutoff", "300", "--max-cutoff", "400")
    rows = cli.read_spectrum_table(str(path))
    assert code == 0
    assert rows[0]["converged"] == "false" and rows[0]["E0"] == "nan"
    assert "N=20" in capsys.readouterr().err


def test_wigner_vacuum(tmp_path):
    code, path = run(tmp_path, "wigner", "--state", "vacuum", "--extent", "1", "--points", "3", "--cutoff", "30")
    rows = list(csv.DictReader(open(path)))
    assert code == 0
    center = [r for r in rows if float(r["re_alpha"]) == 0 and float(r["im_alpha"]) == 0][0]
    assert float(center["wigner"]) == pytest.approx(2 / math.pi)


def test_chi_closed_vs_kraus(tmp_path):
    args = ("chi", "--channel", "loss:0.5", "--points", "3", "--extent", "1", "--beta-re", "0.2", "--cutoff", "200")
    _, closed = run(tmp_path, *args, name="closed")
    _, kraus = run(tmp_path, *args, "--kraus", name="kraus")
    a = np.array([[float(v) for v in r.values()] for r in csv.DictReader(open(closed))])
    b = np.array([[float(v) for v in r.values()] for r in csv.DictReader(open(kraus))])
    np.testing.assert_allclose(a, b, atol=1e-10)


def test_check_params(tmp_path):
    code, path = run(tmp_path, "check-params", "--freq-ghz", "5.26", "--T-X", "1e-12")
    doc = json.loads(path.read_text())
    assert code == 0
    assert doc["T_X_bound"] == pytest.approx(1.3443e-10, rel=1e-4)
    assert doc["feasible"] is True


def test_check_params_csv_without_tx(tmp_path):
    code, path = run(tmp_path, "check-params", "--omega", "1e10", "--format", "csv")
    rows = list(csv.DictReader(open(path)))
    assert code == 0 and rows[0]["T_X"] == "" and rows[0]["feasible"] == ""


def test_tolerance_override(tmp_path):
    _, path = run(tmp_path, "check-params", "--omega", "1e10", "--T-X", "1e-10", "--tolerance", "margin=1")
    assert json.loads(path.read_text())["feasible"] is True
    _, path = run(tmp_path, "check-params", "--omega", "1e10", "--T-X", "1e-10")
    assert json.loads(path.read_text())["feasible"] is False


def test_precondition_exit_code(tmp_path, capsys):
    code, path = run(tmp_path, "twirl-measure", "--N", "0")
    assert code == 2
    assert not path.exists()
    assert "error" in capsys.readouterr().err


def test_output_error_exit_code(tmp_path):
    code = cli.main(["twirl-measure", "--N", "1", "--out", str(tmp_path / "missing" / "x.csv")])
    assert code == 4


def test_failed_command_leaves_existing_file(tmp_path):
    path = tmp_path / "keep.csv"
    path.write_text("old")
    assert cli.main(["twirl-measure", "--N", "-1", "--out", str(path)]) == 2
    assert path.read_text() == "old"
    assert os.listdir(tmp_path) == ["keep.csv"]


def test_stdout_output(capsys):
    assert cli.main(["twirl-measure", "--N", "1"]) == 0
    assert capsys.readouterr().out.startswith("n,m,weight_numerator")


def test_bad_tolerance_and_range():
    with pytest.raises(PreconditionError):
        cli.parse_tolerance(["oops"])
    with pytest.raises(PreconditionError):
        cli.parse_range("a..b")
    assert cli.parse_range("2..4") == [2, 3, 4]


def test_bad_state_and_channel():
    with pytest.raises(PreconditionError):
        cli.parse_state("squeezed:1", 20)
    with pytest.raises(PreconditionError):
        cli.parse_channel("dephasing:0.1", 20, False)


def test_write_output_error(tmp_path):
    with pytest.raises(OutputError):
        cli.write_output("x", str(tmp_path / "nope" / "file"))


def test_json_writer():
    assert cli.to_json({"a": [1, 0.1, math.nan, None, True]}) == '{\n  "a": [\n    1,\n    0.10000000000000001,\n    null,\n    null,\n    true\n  ]\n}'


def test_outputs_deterministic(tmp_path):
    _, a = run(tmp_path, "filter-grid", "--N", "2", "--points", "21", name="a")
    _, b = run(tmp_path, "filter-grid", "--N", "2", "--points", "21", name="b")
    assert a.read_bytes() == b.read_bytes()
