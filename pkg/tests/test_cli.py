import json
import math
import subprocess
import sys

import pytest

from ospqes.cli import main
from ospqes.records import (
    RecordError,
    dumps,
    fmt_float,
    load_records,
    point_from_record,
    record_from_point,
)
from ospqes.spectra import derive_context, make_point

SOLVE0 = ["solve", "--zalpha", "0.3", "--l", "-1", "--n", "0"]


@pytest.fixture
def n0_file(tmp_path):
    path = tmp_path / "n0.json"
    assert main(SOLVE0 + ["--out", str(path)]) == 0
    return path


def test_solve_writes_one_record(n0_file):
    recs = json.loads(n0_file.read_text())
    assert len(recs) == 1
    rec = recs[0]
    assert rec["schema_version"] == 1
    assert rec["point"]["Qcoeffs"] == [1.0]
    assert rec["point"]["E"] == pytest.approx(-1.25, abs=1e-12)
    assert rec["provenance"]["timestamp"] is None
    assert rec["provenance"]["scan"]["grid_points"] == 20001


def test_solve_then_check_passes(n0_file, capsys):
    assert main(["check", "--in", str(n0_file)]) == 0
    assert "RESULT: PASS" in capsys.readouterr().out


def test_check_detects_corrupted_energy(n0_file, tmp_path, capsys):
    recs = json.loads(n0_file.read_text())
    recs[0]["point"]["E"] *= 1 + 1e-6
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(recs))
    assert main(["check", "--in", str(bad)]) == 1
    out = capsys.readouterr().out
    assert "E = f(x0)" in out and "FAIL" in out


def test_check_ignores_stored_residuals(n0_file, tmp_path):
    recs = json.loads(n0_file.read_text())
    recs[0]["residuals"] = {k: 0.0 for k in recs[0]["residuals"]}
    recs[0]["point"]["Pcoeffs"][0] = -2.9
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(recs))
    assert main(["check", "--in", str(bad)]) == 1


def test_check_empty_array(tmp_path, capsys):
    empty = tmp_path / "empty.json"
    empty.write_text("[]")
    assert main(["check", "--in", str(empty)]) == 0
    assert "warning" in capsys.readouterr().err
    assert main(["check", "--in", str(empty), "--strict"]) == 1


def test_check_strict_rejects_unknown_fields(n0_file, tmp_path):
    recs = json.loads(n0_file.read_text())
    recs[0]["point"]["extra"] = 1
    path = tmp_path / "extra.json"
    path.write_text(json.dumps(recs))
    assert main(["check", "--in", str(path)]) == 0
    assert main(["check", "--in", str(path), "--strict"]) == 2


@pytest.mark.parametrize("text", ["{not json", '"a string"', '[{"schema_version": 1}]', "[1]"])
def test_check_unreadable_input(tmp_path, text):
    path = tmp_path / "broken.json"
    path.write_text(text)
    assert main(["check", "--in", str(path)]) == 2


def test_check_missing_file(tmp_path):
    assert main(["check", "--in", str(tmp_path / "nope.json")]) == 2


def test_solve_rejects_unphysical_coupling(capsys):
    assert main(["solve", "--zalpha", "0.6", "--l", "0", "--n", "0"]) == 3
    assert "error" in capsys.readouterr().err


@pytest.mark.parametrize(
    "argv",
    [
        ["verify-algebra", "--n", "foo"],
        ["solve", "--zalpha", "0.3", "--l", "-1", "--n", "-1"],
        ["solve", "--zalpha", "0.3", "--l", "-1"],
        ["solve", "--zalpha", "0.3", "--l", "-1", "--n", "0", "--x0-min", "2", "--x0-max", "1"],
        [],
    ],
)
def test_bad_flags_exit_2(argv):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 2


def test_verify_algebra_text(capsys):
    assert main(["verify-algebra"]) == 0
    out = capsys.readouterr().out
    assert "INFO: [Qbar2,T+] = Qbar1" in out
    assert "INFO: printed T_Q vs master-ODE T_Q" in out
    assert out.rstrip().endswith("RESULT: PASS")


def test_verify_algebra_json_numeric_n(tmp_path):
    out = tmp_path / "alg.json"
    assert main(["verify-algebra", "--n", "3/2", "--json", "--out", str(out)]) == 0
    data = json.loads(out.read_text())
    assert data["n"] == "3/2" and data["pass"] is True
    assert len(data["info"]) == 2


def test_solve_csv_summary(capsys):
    assert main(SOLVE0 + ["--csv"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "x0,E,eB,t,branch,dirac_max"
    assert len(lines) == 2 and ",antiparticle," in lines[1]


def test_solve_is_byte_identical(tmp_path):
    paths = [tmp_path / f"run{i}.json" for i in range(2)]
    assert main(SOLVE0[:-1] + ["2", "--out", str(paths[0])]) == 0
    assert main(SOLVE0[:-1] + ["2", "--workers", "4", "--out", str(paths[1])]) == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_solve_timestamp_flag(tmp_path):
    out = tmp_path / "stamped.json"
    assert main(SOLVE0 + ["--timestamp", "--out", str(out)]) == 0
    assert json.loads(out.read_text())[0]["provenance"]["timestamp"].endswith("+00:00")


def test_wavefunction_table(n0_file, tmp_path):
    out = tmp_path / "wf.csv"
    assert main(["wavefunction", "--in", str(n0_file), "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "r,x,F,G"
    assert len(lines) == 65
    r, x, F, G = map(float, lines[-1].split(","))
    lB = json.loads(n0_file.read_text())[0]["point"]["lB"]
    assert r == pytest.approx(10 * lB) and x == pytest.approx(10)
    assert G / F == pytest.approx(-3 - math.sqrt(10) * x, rel=1e-12)


def test_wavefunction_bad_index(n0_file):
    with pytest.raises(SystemExit) as exc:
        main(["wavefunction", "--in", str(n0_file), "--index", "3"])
    assert exc.value.code == 2


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "ospqes", "--version"], capture_output=True, text=True, check=True
    )
    assert proc.stdout.strip().startswith("ospqes ")


# -- records -------------------------------------------------------------------


def test_fmt_float_round_trips():
    for v in (0.1, -1.2500000000000004, 1e-300, 2.0**0.5, 6.02214076e23):
        assert float(fmt_float(v)) == v
    assert fmt_float(math.nan) == "null" and fmt_float(math.inf, "nan") == "nan"


def test_dumps_is_valid_json():
    obj = {"a": [1.0, 2, -0.5], "b": {"c": None, "d": True}, "e": [], "f": [{"g": "h"}]}
    assert json.loads(dumps(obj)) == obj


def test_record_round_trip_is_exact():
    p = make_point(derive_context(1.0, 0.3, -1, 0), -(0.9**0.5))
    rec = record_from_point(p)
    back = point_from_record(json.loads(dumps(rec)))
    for name in ("x0", "E", "lB", "eB", "x0p", "bp", "cp", "Qcoeffs", "Pcoeffs"):
        assert getattr(back, name) == getattr(p, name)
    assert back.ctx == p.ctx


def test_point_from_record_rejects_bad_values(tmp_path):
    p = make_point(derive_context(1.0, 0.3, -1, 0), -(0.9**0.5))
    rec = json.loads(dumps(record_from_point(p)))
    rec["point"]["E"] = "oops"
    with pytest.raises(RecordError):
        point_from_record(rec)
    rec["point"]["E"] = -1.25
    rec["schema_version"] = 9
    with pytest.raises(RecordError):
        point_from_record(rec)
    path = tmp_path / "single.json"
    path.write_text(dumps(record_from_point(p)))
    assert len(load_records(path)) == 1
