import json
import subprocess
import sys

import pytest

from timescales.cli import main
from timescales.ingest import ColumnSpec, parse_prices


def read_summary(outdir, name):
    with open(outdir / f"summary_{name}.json") as fh:
        return json.load(fh)


@pytest.fixture(scope="module")
def fbm_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("synth") / "fbm.csv"
    assert main(["synth", "--model", "fbm", "--H", "0.5", "--n", "65536", "--seed", "7", "-o", str(path)]) == 0
    return path


def test_synth_header_and_format(fbm_file):
    lines = fbm_file.read_text().splitlines()
    assert lines[0].startswith("# synth model=fbm n=65536 seed=7 H=0.5")
    assert lines[1] == "timestamp,price"
    with open(fbm_file) as fh:
        series = parse_prices(fh, ColumnSpec("timestamp", "price"))
    assert len(series) == 65536


def test_synth_then_hurst(fbm_file, tmp_path):
    assert main(["hurst", "--input", str(fbm_file), "--outdir", str(tmp_path)]) == 0
    fit = read_summary(tmp_path, "hurst")["results"]["hurst"]["fits"][0]
    assert 0.47 <= fit["H"] <= 0.53
    assert "total_err" in fit


def test_synth_stdout(capsys):
    assert main(["synth", "--model", "gaussian_iid", "--n", "5"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0].startswith("# synth model=gaussian_iid")
    assert len(out) == 2 + 6


def test_xy_headers(tmp_path):
    argv = ["pipeline", "--model", "student_t_iid", "--n", "20000", "--outdir", str(tmp_path), "--scales", "1,4"]
    assert main(argv) == 0
    doc = read_summary(tmp_path, "pipeline")
    assert set(doc["results"]) == {"distfit", "facmom", "gaps", "hurst"}
    assert doc["version"] and doc["created"]
    for name in doc["files"]:
        first = (tmp_path / name).read_text().splitlines()[0]
        assert first.startswith("# module=")
        assert "formula=" in first
        assert f"config={doc['config_hash']}" in first


def test_pipeline_t3(tmp_path):
    argv = ["pipeline", "--model", "student_t_iid", "--nu", "3", "--n", "100000", "--seed", "0", "--outdir", str(tmp_path)]
    assert main(argv) == 0
    rows = read_summary(tmp_path, "pipeline")["results"]["distfit"]["scales"]
    by_m = {r["m"]: r for r in rows}
    assert by_m[1]["regime"] == "power_law"
    assert by_m[96]["nu"] > by_m[1]["nu"]


def test_tables_deterministic(tmp_path):
    base = ["pipeline", "--model", "vol_cluster", "--n", "30000", "--seed", "3", "--scales", "1,2,4"]
    assert main(base + ["--outdir", str(tmp_path / "a")]) == 0
    assert main(base + ["--outdir", str(tmp_path / "b")]) == 0
    files = read_summary(tmp_path / "a", "pipeline")["files"]
    for name in files:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    a = read_summary(tmp_path / "a", "pipeline")
    b = read_summary(tmp_path / "b", "pipeline")
    assert a["results"] == b["results"]


def test_returns_subcommand(tmp_path):
    src = tmp_path / "p.csv"
    src.write_text("timestamp,price\n0,1\n300,2\n600,4\n900,8\n")
    assert main(["returns", "--input", str(src), "--outdir", str(tmp_path), "--m", "1"]) == 0
    lines = (tmp_path / "returns_m1.csv").read_text().splitlines()
    assert lines[1] == "timestamp_start,value"
    assert len(lines) == 5
    assert float(lines[2].split(",")[1]) == pytest.approx(0.6931471805599453)


def test_gaps_and_facmom_subcommands(tmp_path):
    common = ["--model", "gaussian_iid", "--n", "20000", "--outdir", str(tmp_path)]
    assert main(["gaps", "--direction", "positive_gap", "--fit-range", "1,8"] + common) == 0
    g = read_summary(tmp_path, "gaps")["results"]["gaps"]
    assert g["fit_range"] == [1, 8]
    assert main(["facmom", "--bins", "1,2,4", "--kinds", "pp,pm"] + common) == 0
    assert (tmp_path / "facmom_xy_pm.csv").exists()


def test_empty_input_exit_code(tmp_path, capsys):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    assert main(["distfit", "--input", str(empty), "--outdir", str(tmp_path)]) == 2
    assert "data error" in capsys.readouterr().err


def test_bad_row_exit_code(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("timestamp,price\n0,1\n300,-1\n")
    assert main(["hurst", "--input", str(bad), "--outdir", str(tmp_path)]) == 2


def test_numeric_failure_exit_code(tmp_path):
    argv = ["hurst", "--model", "gaussian_iid", "--n", "1000", "--taus", "1,2,5000", "--outdir", str(tmp_path)]
    assert main(argv) == 3


def test_usage_errors(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["distfit", "--bogus"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main(["facmom", "--bins", "a,b"])
    assert exc.value.code == 1
    assert main(["hurst", "--outdir", str(tmp_path)]) == 1
    assert main(["facmom", "--model", "gaussian_iid", "--n", "2000", "--kinds", "xy", "--outdir", str(tmp_path)]) == 1


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "timescales", "gaps", "--model", "gaussian_iid", "--n", "5000", "--outdir", str(tmp_path)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    proc = subprocess.run([sys.executable, "-m", "timescales", "nope"], capture_output=True, text=True)
    assert proc.returncode == 1
