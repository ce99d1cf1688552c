import csv
import json
import subprocess
import sys
from pathlib import Path

import pytest

from widom_trace.cli import SCHEMA_LINE, main, run

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def read_csv(path):
    lines = Path(path).read_text().splitlines()
    assert lines[0] == SCHEMA_LINE
    return list(csv.DictReader(lines[1:]))


def write(tmp_path, text, name="exp.toml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_coefficient_cauchy_square(tmp_path):
    out = tmp_path / "out"
    assert main(["--config", str(CONFIGS / "cauchy_square.toml"), "--out", str(out)]) == 0
    rows = read_csv(out / "result.csv")
    assert [r["method"] for r in rows] == ["direct-U", "via-V", "hilbert"]
    for r in rows:
        assert float(r["B"]) == pytest.approx(-0.0625, abs=1e-7)
        assert float(r["error"]) >= 0
    summ = json.loads((out / "summary.json").read_text())
    assert summ["kind"] == "coefficient" and summ["schema"] == 1


def test_identical_runs_identical_bytes(tmp_path):
    cfg = CONFIGS / "covering.toml"
    main(["--config", str(cfg), "--out", str(tmp_path / "a")])
    main(["--config", str(cfg), "--out", str(tmp_path / "b"), "--threads", "4"])
    for name in ("result.csv", "covering.csv", "summary.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_covering_dump_columns(tmp_path):
    out = tmp_path / "out"
    assert main(["--config", str(CONFIGS / "covering.toml"), "--out", str(out)]) == 0
    cov = read_csv(out / "covering.csv")
    assert list(cov[0]) == ["j", "eta", "tau"]
    res = {r["quantity"]: float(r["value"]) for r in read_csv(out / "result.csv")}
    assert res["partition_residual"] < 1e-12
    assert res["max_overlap"] <= res["N_nu"]


def test_trace_check_small(tmp_path):
    cfg = write(tmp_path, """
kind = "trace-check"
schedule = [[0.2, 100]]
[symbol]
family = "gaussian"
[testfn]
class = "analytic"
name = "square"
""")
    out = tmp_path / "out"
    assert main(["--config", str(cfg), "--out", str(out)]) == 0
    rows = read_csv(out / "result.csv")
    assert rows[-1]["row"].startswith("B:")
    ext = [r for r in rows if r["row"] == "extrapolated"][0]
    assert float(ext["value"]) == pytest.approx(float(rows[-1]["value"]), abs=1e-6)


def test_lemma_suite_seed_changes_sample(tmp_path):
    cfg = write(tmp_path, 'kind = "lemma-suite"\ninstances = 200\nsuites = ["zeros", "agamma"]\n')
    main(["--config", str(cfg), "--out", str(tmp_path / "a"), "--seed", "1"])
    main(["--config", str(cfg), "--out", str(tmp_path / "b"), "--seed", "2"])
    ra, rb = read_csv(tmp_path / "a" / "result.csv"), read_csv(tmp_path / "b" / "result.csv")
    assert all(r["status"] == "pass" for r in ra + rb)
    assert [r["max_ratio"] for r in ra] != [r["max_ratio"] for r in rb]


@pytest.mark.parametrize("text,code", [
    ('kind = "coefficient"\n[symbol]\nfamily = "cauchy"\n', 2),  # missing testfn
    ('kind = "nonsense"\n', 2),
    ('kind = "coefficient\n', 2),  # TOML syntax error
    ('kind = "coefficient"\n[symbol]\nfamily = "lorentz"\n[testfn]\nclass = "analytic"\nname = "exp"\n', 2),
    ('kind = "coefficient"\nmethods = ["hilbert"]\n[symbol]\nfamily = "cauchy"\n'
     '[testfn]\nclass = "cusp"\ngamma = 0.5\n', 3),
    ('kind = "bounds-report"\n[symbol]\nfamily = "polynomial-window"\ncoeffs = [1.0]\nsupport = [0, 1]\n'
     'smoothness = 2\n[testfn]\nclass = "cusp"\ngamma = 0.25\n', 3),
])
def test_failures_leave_no_files(tmp_path, capsys, text, code):
    cfg = write(tmp_path, text)
    out = tmp_path / "out"
    assert main(["--config", str(cfg), "--out", str(out)]) == code
    rec = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert rec["exit_code"] == code and rec["error"] and rec["message"]
    assert not out.exists() or not any(out.iterdir())


def test_run_api_returns_summary(tmp_path):
    summ = run({"kind": "covering-dump", "box": [-2.0, 2.0], "tau": {"kind": "constant", "value": 0.5}},
               tmp_path)
    assert summ["covering"]["partition_residual"] < 1e-12


def test_console_entry_point(tmp_path):
    out = tmp_path / "out"
    proc = subprocess.run([sys.executable, "-m", "widom_trace", "--config", str(CONFIGS / "covering.toml"),
                           "--out", str(out)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (out / "result.csv").exists()
