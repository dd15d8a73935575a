from __future__ import annotations

import csv
import io
import json
import os

import pytest

from caliblab import experiments, geometry
from caliblab.cli import EXIT_CONFIG, EXIT_FAIL, EXIT_OK, EXIT_PARSE, main


def _rows(text: str) -> list[list[str]]:
    return list(csv.reader(io.StringIO(text)))


def test_lemma324_passes(capsys):
    assert main(["lemma324"]) == EXIT_OK
    out = _rows(capsys.readouterr().out)
    vals = {r[2]: float(r[3]) for r in out if r[0] == "row" and r[1] == "signsum.blocks"}
    assert abs(vals["max over 9 blocks x 16 signs"] - 3.0) <= 1e-9
    assert out[-1][:2] == ["summary", "pass"]


def test_comass_subcommand(capsys):
    assert main(["comass", "1", "0", "0", "0", "0", "1", "--seed", "3", "--format", "json"]) == EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    assert doc["schema"] == "caliblab-report/1"
    assert list(doc)[:5] == ["schema", "command", "config", "failures", "rows"]
    assert doc["rows"][0]["value"] == pytest.approx(1.0)


def test_seed_required(monkeypatch, capsys):
    monkeypatch.delenv("CALIBLAB_SEED", raising=False)
    assert main(["lemma41"]) == EXIT_CONFIG
    assert "config" in capsys.readouterr().err
    monkeypatch.setenv("CALIBLAB_SEED", "5")
    assert main(["lemma41", "--format", "json"]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["config"]["seed"] == 5


@pytest.mark.parametrize("argv", [["lemma324", "--tol.lemma=-1"], ["lemma324", "--tol.bogus=1"], ["lemma324", "--refine", "0"]])
def test_bad_config(argv, capsys):
    assert main(argv) == EXIT_CONFIG


def test_tiny_tolerance_fails_with_records(capsys):
    assert main(["lemma324", "--tol.lemma=1e-300", "--format", "json"]) == EXIT_FAIL
    doc = json.loads(capsys.readouterr().out)
    assert doc["failures"] and doc["summary"]["status"] == "fail"
    rec = doc["failures"][0]
    assert set(rec) == {"case", "expected", "observed"}


def test_csv_failures_precede_rows(capsys):
    main(["lemma324", "--tol.lemma=1e-300"])
    kinds = [r[0] for r in _rows(capsys.readouterr().out)[2:]]
    assert kinds == sorted(kinds, key=["failure", "row", "summary"].index)


def test_malformed_file_is_parse_error(tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("not a competitor\n")
    out = tmp_path / "report.csv"
    assert main(["calibrate", str(bad), "--out", str(out)]) == EXIT_PARSE
    assert not out.exists()
    assert "parse" in capsys.readouterr().err
    assert main(["calibrate", str(tmp_path / "missing.txt")]) == EXIT_CONFIG


def test_calibrate_and_decompose(tmp_path, capsys):
    setup = experiments.aligned_setup(1)
    comp = experiments.canonical_competitor(setup)
    fills = {(j, l): comp.fills[j][l] for j in range(2) for l in range(2)}
    path = tmp_path / "canon.txt"
    path.write_text(experiments.competitor_to_text(comp.complex, comp.gammas, fills))
    assert main(["calibrate", str(path)]) == EXIT_OK
    assert main(["homology", "decompose", "--competitor", str(path)]) == EXIT_OK


def test_homology_solve_with_files(tmp_path, capsys):
    T = geometry.triangulate_yxy(1)
    kfile, cfile, fill = tmp_path / "k.txt", tmp_path / "z.txt", tmp_path / "fill.txt"
    kfile.write_text(T.complex.to_text())
    cfile.write_text(T.gammas[0][0].to_text(T.complex))
    args = ["homology", "solve", "--complex", str(kfile), "--chain", str(cfile), "--fill-out", str(fill)]
    assert main(args) == EXIT_OK
    assert fill.exists()
    assert main(["homology", "check", "--complex", str(kfile)]) == EXIT_OK
    cfile.write_text("garbage\n")
    assert main(args[:-2]) == EXIT_PARSE


def test_ffproject_trace(tmp_path, capsys):
    trace = tmp_path / "trace.csv"
    assert main(["ffproject", "--seed", "1", "--refine", "1", "--trace", str(trace)]) == EXIT_OK
    assert trace.read_text().startswith("stage,dim,cell,roundness")


def test_minimize_saves_competitor(tmp_path, capsys):
    saved = tmp_path / "comp.txt"
    assert main(["minimize", "--seed", "2", "--seeds", "2", "--save-competitor", str(saved)]) == EXIT_OK
    experiments.competitor_from_text(saved.read_text())


def test_cones_subcommand(capsys):
    assert main(["cones"]) == EXIT_OK


@pytest.mark.slow
def test_report_all_is_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["report-all", "--seed", "7", "--out", str(a)]) == EXIT_OK
    assert main(["report-all", "--seed", "7", "--out", str(b)]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()
    assert not [p for p in os.listdir(tmp_path) if p.startswith(".caliblab-")]
