import csv
import io
import json
import subprocess
import sys
from pathlib import Path

import pytest

from sublln.cli import main

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def _write(tmp_path, name, raw):
    p = tmp_path / name
    p.write_text(json.dumps(raw, indent=1))
    return str(p)


def test_choquet_expected_value(capsys):
    code, out, _ = run(capsys, "choquet", "--config", str(CONFIGS / "scenario_c.json"))
    assert code == 0
    row = next(csv.DictReader(io.StringIO(out)))
    assert float(row["value"]) == pytest.approx(4.75, abs=1e-6)


def test_choquet_non_integrable_fails(capsys, tmp_path):
    raw = json.loads((CONFIGS / "scenario_c.json").read_text())
    raw["transform"] = {"kind": "abs_power", "r": 1.95}
    code, _, err = run(capsys, "choquet", "--config", _write(tmp_path, "x.json", raw))
    assert code == 1 and "diverges" in err


def test_config_error_exit_code(capsys, tmp_path):
    p = tmp_path / "broken.json"
    p.write_text('{\n "theta": [],\n "domination": 3\n}')
    code, _, err = run(capsys, "wlln", "--config", str(p))
    assert code == 2 and "broken.json" in err


def test_domination_violation_exit_code(capsys, tmp_path):
    raw = json.loads((CONFIGS / "scenario_c.json").read_text())
    raw["theta"] = [{"kind": "pareto", "alpha": 1.9, "scale": 2.0}]
    code, _, err = run(capsys, "audit", "--config", _write(tmp_path, "v.json", raw))
    assert code == 2 and "domination" in err


@pytest.mark.parametrize("which", ["step1", "step2", "borel-cantelli"])
def test_series_commands(capsys, which):
    code, out, _ = run(capsys, "series", which, "--config", str(CONFIGS / "scenario_c.json"))
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert rows[-1]["N"] == "10000"
    assert float(rows[-1]["partial_sum"]) < float(rows[-1]["bound"])


def test_series_kronecker(capsys, tmp_path):
    raw = json.loads((CONFIGS / "scenario_b.json").read_text())
    raw["kronecker"] = {"x": "alternating", "N": 10000}
    code, out, _ = run(capsys, "series", "kronecker", "--config", _write(tmp_path, "k.json", raw),
                       "--format", "json")
    assert code == 0 and json.loads(out)[-1]["N"] == 10000


def test_capacity_exact_and_json(capsys):
    code, out, _ = run(capsys, "capacity", "exact", "--config", "/dev/null")
    assert code == 2
    code, out, _ = run(capsys, "capacity", "exact", "--config", str(CONFIGS / "scenario_a.json"),
                       "--format", "json")
    assert code == 0
    row = json.loads(out)[0]
    assert row["method"] == "exact_dp" and row["n"] == 4
    assert row["value"] == pytest.approx(0.3430, abs=5e-5)


def test_audit_command(capsys):
    code, out, _ = run(capsys, "audit", "--config", str(CONFIGS / "scenario_a.json"))
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) > 5 and all(float(r["max_violation"]) <= 1e-12 for r in rows)


def test_threads_do_not_change_bytes(tmp_path):
    outs = []
    for t in (1, 4):
        p = tmp_path / f"w{t}.csv"
        assert main(["wlln", "--config", str(CONFIGS / "scenario_b.json"), "--reps", "300",
                     "--threads", str(t), "--out", str(p)]) == 0
        outs.append(p.read_bytes())
    assert outs[0] == outs[1]


def test_seed_override_and_bad_threads(capsys):
    code, _, err = run(capsys, "wlln", "--config", str(CONFIGS / "scenario_b.json"), "--threads", "0")
    assert code == 2
    with pytest.raises(SystemExit):
        main(["wlln", "--config", str(CONFIGS / "scenario_b.json"), "--seed", "-3"])


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "sublln.cli", "choquet", "--config",
                           str(CONFIGS / "scenario_a.json")], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("scenario,transform")
