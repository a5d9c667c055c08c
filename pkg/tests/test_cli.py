import csv
import io
import json
import math
import subprocess
import sys

import pytest

from ifmsim.cli import main
from ifmsim.estimation import SWEEP_COLUMNS

S = 1 / math.sqrt(2)


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_simulate_pretty(capsys):
    code, out, _ = run(capsys, "simulate", "ev_bomb")
    assert code == 0
    rows = {line.split()[0]: line.split()[1:] for line in out.splitlines()[1:]}
    assert rows["a"] == ["1+0i", "0.707107+0i", "0.707107+0i", "0.5+0i"]
    assert rows["b"] == ["0+0i", "0+0.707107i", "0+0i", "0+0.5i"]
    assert rows["E"] == ["0+0i", "0+0i", "0+0.707107i", "0+0.707107i"]


def test_simulate_json_full_precision(capsys):
    code, out, _ = run(capsys, "simulate", "ev_bomb", "--format", "json")
    d = json.loads(out)
    assert d["channels"] == ["a", "b", "E"]
    final = [complex(*p) for p in d["final"]]
    assert final == pytest.approx([0.5, 0.5j, 1j * S], abs=1e-12)
    assert d["trace"][1]["element"] == "absorber"


def test_simulate_reference(capsys):
    _, out, _ = run(capsys, "simulate", "ev_bomb", "--reference", "--format", "json")
    assert [complex(*p) for p in json.loads(out)["final"]] == pytest.approx([0, 1j, 0], abs=1e-12)


def test_silhouette(capsys):
    code, out, _ = run(capsys, "silhouette", "ev_bomb")
    assert code == 0
    assert "0.5+0i" in out and "0-0.5i" in out and "0+0.707107i" in out
    _, out, _ = run(capsys, "silhouette", "ev_bomb", "--format", "json")
    d = json.loads(out)
    assert [complex(*p) for p in d["amplitude"]] == pytest.approx([0.5, -0.5j, 1j * S], abs=1e-12)
    assert set(d["forward"]) == {"a", "b"} and set(d["reaction"]) == {"E"}


def test_sample_and_estimate(capsys, tmp_path):
    obj, ref = tmp_path / "obj.json", tmp_path / "ref.json"
    assert run(capsys, "sample", "partial_object", "--shots", "1000000", "--seed", "1", "--out", str(obj))[0] == 0
    assert run(capsys, "sample", "partial_object", "--reference", "--shots", "1000000",
               "--seed", "2", "--out", str(ref))[0] == 0
    rec = json.loads(obj.read_text())
    assert rec["seed"] == 1 and rec["rng_algorithm"]
    code, out, _ = run(capsys, "estimate", str(obj), str(ref))
    assert code == 0
    est = json.loads(out)
    assert abs(est["W"] - 0.64) < 0.005
    assert abs(est["cos_chi"] - S) < 0.01


def test_estimate_perfect_absorber(capsys, tmp_path):
    obj, ref = tmp_path / "obj.json", tmp_path / "ref.json"
    run(capsys, "sample", "ev_bomb", "--shots", "1000000", "--seed", "1", "--out", str(obj))
    run(capsys, "sample", "ev_bomb", "--reference", "--shots", "1000000", "--seed", "2", "--out", str(ref))
    code, _, err = run(capsys, "estimate", str(obj), str(ref))
    assert code == 2 and "phase" in err
    code, out, _ = run(capsys, "estimate", str(obj), str(ref), "--allow-undefined-phase")
    est = json.loads(out)
    assert code == 0
    assert est["phase_undefined"] and est["cos_chi"] is None
    assert est["W"] == pytest.approx(1, abs=0.005) and est["object_present"]


def test_sweep_csv(capsys):
    code, out, _ = run(capsys, "sweep", "--t-grid", "0,0.6,1", "--chi-grid", "linspace:0:pi:3",
                       "--shots", "10000", "--seed", "5")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert tuple(rows[0]) == SWEEP_COLUMNS
    assert len(rows) == 9
    # full precision floats
    assert float(rows[4]["chi"]) == math.pi / 2
    assert rows[3]["P2_exact"] == repr(float(rows[3]["P2_exact"]))


def test_sweep_jsonl(capsys):
    _, out, _ = run(capsys, "sweep", "--t-grid", "0", "--chi-grid", "1", "--shots", "100",
                    "--seed", "5", "--format", "json")
    row = json.loads(out.splitlines()[0])
    assert row["chi_est"] is None


def test_sample_deterministic_between_processes(tmp_path):
    cmd = [sys.executable, "-m", "ifmsim.cli", "sample", "ev_bomb", "--shots", "300000", "--seed", "42"]
    first = subprocess.run(cmd, capture_output=True, check=True).stdout
    second = subprocess.run(cmd, capture_output=True, check=True).stdout
    sharded = subprocess.run(cmd + ["--shards", "4"], capture_output=True, check=True).stdout
    assert first == second == sharded


@pytest.mark.parametrize("argv,code", [
    (["simulate", "no_such_file"], 1),
    (["frobnicate"], 1),
    (["sample", "ev_bomb", "--seed", "1"], 1),
    (["sample", "ev_bomb", "--shots", "0", "--seed", "1"], 2),
    (["sweep", "--t-grid", "2", "--chi-grid", "0", "--shots", "1", "--seed", "1"], 1),
])
def test_exit_codes(capsys, argv, code):
    assert run(capsys, *argv)[0] == code


def test_parse_error_exit_code(capsys, tmp_path):
    bad = tmp_path / "bad.ifm"
    bad.write_text("channel a photon\nbs a b pi/4\n")
    code, _, err = run(capsys, "simulate", str(bad))
    assert code == 1 and "line 2" in err


def test_malformed_record(capsys, tmp_path):
    p = tmp_path / "r.json"
    p.write_text("{not json")
    assert run(capsys, "estimate", str(p), str(p))[0] == 1
