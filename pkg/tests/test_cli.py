import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from idfilter.cli import run
from idfilter.dataset import load_csv
from idfilter.mbfr import SelectionTrace, StepRecord
from idfilter.plots import emit_loglog_svg, emit_profile_svg


@pytest.fixture(scope="module")
def bfly_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "butterfly.csv"
    assert run(["generate", "butterfly", "--n", "3000", "--seed", "7", "--out", str(path), "--quiet"]) == 0
    return path


def _json(capsys, argv):
    code = run(argv + ["--json"])
    out, err = capsys.readouterr()
    assert code == 0, err
    return json.loads(out)


def test_generate_butterfly(tmp_path, capsys):
    out = tmp_path / "b.csv"
    data = _json(capsys, ["generate", "butterfly", "--n", "500", "--noise", "0.25", "--seed", "7",
                          "--out", str(out)])
    assert data["rows"] == 500
    with open(out) as fh:
        header = next(csv.reader(fh))
    assert header == ["X1", "X2", "J3", "J4", "J5", "I6", "I7", "I8", "Y"]
    assert load_csv(out, "Y").n_rows == 500


def test_generate_friedman(tmp_path, capsys):
    data = _json(capsys, ["generate", "friedman", "--n", "200", "--out", str(tmp_path / "f.csv")])
    assert len(data["columns"]) == 11


def test_estimate_id(bfly_csv, capsys):
    data = _json(capsys, ["estimate-id", "--input", str(bfly_csv), "--target", "Y",
                          "--columns", "X1,X2", "--scales", "1,2,4,8"])
    assert data["columns"] == ["X1", "X2"]
    assert data["scales"] == [1, 2, 4, 8]
    assert data["intrinsic_dim"] == pytest.approx(2.0, abs=0.1)


def test_choose_scales(bfly_csv, tmp_path, capsys):
    svg = tmp_path / "loglog.svg"
    data = _json(capsys, ["choose-scales", "--input", str(bfly_csv), "--target", "Y", "--svg", str(svg)])
    assert len(data["scales"]) >= 2
    assert data["window"][0] <= data["window"][1] <= data["occupied_limit"]
    assert svg.read_text().startswith("<?xml")


def test_select_writes_outputs(bfly_csv, tmp_path, capsys):
    data = _json(capsys, ["select", "--input", str(bfly_csv), "--target", "Y", "--scales", "5..20",
                          "--out", str(tmp_path)])
    assert data["C"] == 8
    assert [s["feature"] for s in data["steps"]][:2] == ["X1", "X2"]
    assert json.loads((tmp_path / "trace.json").read_text()) == data
    rows = (tmp_path / "trace.csv").read_text().splitlines()
    assert rows[0] == "step,feature,diss,id_with,id_without" and len(rows) == 9
    svg = (tmp_path / "trace.svg").read_text()
    assert "<svg" in svg and "M2(Y)" in svg and "X1" in svg


def test_dr_and_classify(bfly_csv, capsys):
    dr = _json(capsys, ["dr", "--input", str(bfly_csv), "--target", "Y", "--scales", "5..20",
                        "--features", "X1,X2"])
    assert dr["dr"] == pytest.approx(0.97, abs=0.05)
    reps = _json(capsys, ["classify", "--input", str(bfly_csv), "--target", "Y", "--scales", "5..20",
                          "--rejected", "J3,I6", "--selected", "X1,X2"])
    scores = {r["feature"]: r["score"] for r in reps}
    assert scores["J3"] >= 0.8 and scores["I6"] <= 0.2
    via_trace = _json(capsys, ["classify", "--input", str(bfly_csv), "--target", "Y",
                               "--scales", "5..20", "--rejected", "I6", "--n-selected", "2"])
    assert via_trace[0]["selected"] == ["X1", "X2"]


def test_montecarlo(tmp_path, capsys):
    data = _json(capsys, ["montecarlo", "butterfly", "--n", "1500", "--sims", "2", "--C", "3",
                          "--threads", "1", "--out", str(tmp_path)])
    assert data["seeds"] == [0, 1]
    assert len(data["step_mean_diss"]) == 3
    assert (tmp_path / "summary.json").exists()
    assert len((tmp_path / "selections.csv").read_text().splitlines()) == 3


def test_evaluate(bfly_csv, tmp_path, capsys):
    out_csv = tmp_path / "eval.csv"
    data = _json(capsys, ["evaluate", "--input", str(bfly_csv), "--target", "Y",
                          "--features", "X1,X2", "--features", "I6", "--splits", "2", "--folds", "3",
                          "--retrains", "3", "--csv", str(out_csv), "--dataset-name", "bfly"])
    assert [r["features"] for r in data["reports"]] == [["X1", "X2"], ["I6"]]
    assert "runtime" not in data["reports"][0]
    rows = out_csv.read_text().splitlines()
    assert rows[0] == "dataset,subset_id,n_features,mean_re,sd_re"
    assert rows[1].startswith("bfly,1,2,")


def test_quiet_prints_nothing(bfly_csv, capsys):
    assert run(["estimate-id", "--input", str(bfly_csv), "--target", "Y", "--scales", "1,2,4",
                "--quiet"]) == 0
    out, err = capsys.readouterr()
    assert out == "" and err == ""


def test_human_output(bfly_csv, capsys):
    assert run(["dr", "--input", str(bfly_csv), "--target", "Y", "--scales", "5..20",
                "--features", "X1"]) == 0
    assert capsys.readouterr().out.startswith("DR = ")


@pytest.mark.parametrize("argv, code, kind", [
    (["frobnicate"], 1, "usage"),
    (["estimate-id", "--target", "Y"], 1, "usage"),
    (["estimate-id", "--input", "x.csv", "--target", "Y", "--scales", "4,2"], 1, "usage"),
    (["estimate-id", "--input", "/nonexistent/x.csv", "--target", "Y"], 2, "data"),
    (["select", "--input", "{bfly}", "--target", "Y", "--scales", "5..20", "--C", "99"], 3, "numerical"),
    (["dr", "--input", "{bfly}", "--target", "Nope", "--features", "X1"], 2, "data"),
    (["estimate-id", "--input", "{bfly}", "--target", "Y", "--scales", "900,1000"], 3, "numerical"),
    (["evaluate", "--input", "{bfly}", "--target", "Y"], 1, "usage"),
])
def test_exit_codes(argv, code, kind, bfly_csv, tmp_path, capsys):
    argv = [a.replace("{bfly}", str(bfly_csv)) for a in argv]
    if "select" in argv:
        argv += ["--out", str(tmp_path)]
    assert run(argv) == code
    err = capsys.readouterr().err
    lines = err.strip().splitlines()
    assert len(lines) == 1
    assert lines[0].startswith(f"idfilter: error: {kind}: ")


def test_bad_cell_reports_position(tmp_path, capsys):
    p = tmp_path / "bad.csv"
    p.write_text("x,y\n0,1\n1,NaN\n")
    assert run(["estimate-id", "--input", str(p), "--target", "y"]) == 2
    assert "row 3" in capsys.readouterr().err


def test_outputs_byte_identical(bfly_csv, tmp_path):
    outs = []
    for i in range(2):
        d = tmp_path / f"run{i}"
        assert run(["select", "--input", str(bfly_csv), "--target", "Y", "--scales", "5..20",
                    "--out", str(d), "--quiet"]) == 0
        outs.append([(d / f).read_bytes() for f in ("trace.json", "trace.csv", "trace.svg")])
    assert outs[0] == outs[1]


def test_module_entry_point(bfly_csv):
    res = subprocess.run([sys.executable, "-m", "idfilter", "estimate-id", "--input", str(bfly_csv),
                          "--target", "Y", "--columns", "X1", "--scales", "2,4,8", "--json"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0
    assert json.loads(res.stdout)["embedding_dim"] == 1


# --- SVG -----------------------------------------------------------------------------

def test_single_step_svg(tmp_path):
    trace = SelectionTrace([StepRecord("X1", 0.3, 1.2, 0.9, {"X1": 0.3})], 0.9, (1, 2))
    svg = emit_profile_svg(trace, tmp_path / "one.svg").read_text()
    assert svg.count("<circle") == 1
    assert "stroke-dasharray=\"6,4\"" in svg
    assert "<polyline" not in svg


def test_empty_trace_svg_rejected(tmp_path):
    with pytest.raises(ValueError):
        emit_profile_svg(SelectionTrace([], 1.0, (1, 2)), tmp_path / "x.svg")


def test_loglog_svg(tmp_path):
    svg = emit_loglog_svg([1, 2, 4], [0.0, np.log(2), -np.inf], tmp_path / "l.svg", (1, 2)).read_text()
    assert svg.count("<circle") == 2 and "fill-opacity" in svg
