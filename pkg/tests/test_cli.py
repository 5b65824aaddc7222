import json
import subprocess
import sys

import pytest

from supbounds import __version__
from supbounds.cli import main
from supbounds.pickands import read_curve_csv


def run(capsys, *argv):
    rc = main(list(argv))
    out = capsys.readouterr()
    return rc, out.out, out.err


def run_json(capsys, *argv):
    rc, out, err = run(capsys, *argv)
    assert rc == 0, err
    return json.loads(out), err


def test_bm_exact(capsys):
    payload, err = run_json(capsys, "bm", "exact", "--a", "1", "--b", "0", "--t", "1")
    assert payload["command"] == "bm exact"
    assert payload["result"]["value"] == pytest.approx(0.682689, abs=1e-6)
    assert payload["provenance"] == {"constants_mode": "explicit", "version": __version__, "seed": None, "samples": None}
    assert err == ""


@pytest.mark.parametrize("action,extra", [
    ("lemma1", ["--a", "10", "--b", "-5", "--t", "4"]),
    ("lemma2", ["--a", "1", "--b", "-0.5", "--t", "1", "--H", "1"]),
    ("lemma3", ["--a", "2", "--b", "-1", "--t0", "1", "--t", "9"]),
])
def test_bm_lemmas(capsys, action, extra):
    payload, _ = run_json(capsys, "bm", action, *extra, "--constants", "shape")
    assert payload["result"]["value"] > 0
    assert payload["provenance"]["constants_mode"] == "shape"


def test_bm_mc_prints_seed(capsys):
    payload, err = run_json(capsys, "bm", "mc", "--a", "1", "--b", "-1", "--t", "1",
                            "--samples", "20000", "--seed", "5", "--method", "bridge", "--step", "0.01")
    assert "seed: 5" in err
    r = payload["result"]
    assert r["ci_low"] <= r["mean"] <= r["ci_high"] and r["method"] == "bridge"
    assert payload["provenance"]["seed"] == 5 and payload["provenance"]["samples"] == 20000


def test_bm_precondition_exit_1(capsys):
    rc, out, err = run(capsys, "bm", "lemma1", "--a", "1", "--b", "-1", "--t", "1")
    assert rc == 1 and out == ""
    assert json.loads(err)["type"] == "ValueError"
    rc, _, _ = run(capsys, "bm", "lemma3", "--a", "1", "--b", "-1", "--t", "1")
    assert rc == 1


def test_usage_error_exit_2(capsys):
    with pytest.raises(SystemExit) as e:
        main(["bm", "nonsense", "--a", "1", "--t", "1"])
    assert e.value.code == 2
    with pytest.raises(SystemExit) as e:
        main(["frobnicate"])
    assert e.value.code == 2


def test_cov_check(capsys):
    payload, _ = run_json(capsys, "cov", "check", "--model", "exponential", "--rate", "0.5", "--u", "3", "--n", "10")
    assert payload["result"]["report"]["passed"]
    payload, _ = run_json(capsys, "cov", "check", "--model", "shao", "--alpha", "0.5", "--u", "3", "--grid-b", "6.02448")
    assert payload["result"]["n"] == 183
    assert not payload["result"]["report"]["r1_condition"]


def test_cov_table(capsys, tmp_path):
    p = tmp_path / "r.csv"
    p.write_text("lag,r\n0,1.0\n1,0.9\n2,0.95\n")
    payload, _ = run_json(capsys, "cov", "check", "--model", "table", "--table", str(p), "--u", "3", "--n", "3")
    assert payload["result"]["report"]["monotone_witness"] == 2
    rc, _, _ = run(capsys, "cov", "check", "--model", "table", "--u", "3", "--n", "3")
    assert rc == 1


def test_bound_theorems(capsys):
    common = ["--model", "exponential", "--rate", "1", "--u", "3", "--n", "10"]
    t1, _ = run_json(capsys, "bound", "eval", "--theorem", "1", *common)
    t2, _ = run_json(capsys, "bound", "eval", "--theorem", "2", *common, "--C", "0.3333333333333333")
    t3, err = run_json(capsys, "bound", "eval", "--theorem", "3", *common, "--C", "1", "--K", "0.5", "--N", "3",
                       "--samples", "20000")
    assert "seed: 0" in err
    t3bm, _ = run_json(capsys, "bound", "eval", "--theorem", "3", *common, "--C", "1", "--K", "0.5", "--N", "3",
                       "--walk", "bm")
    for p in (t1, t2, t3, t3bm):
        assert p["result"]["value"] > 0
    assert t3bm["result"]["value"] <= t3["result"]["value"]
    assert t2["result"]["value"] <= t1["result"]["value"] * 40 / 12


def test_bound_delta_file(capsys, tmp_path):
    p = tmp_path / "delta.txt"
    p.write_text("# thresholds\n" + "\n".join(["0.1"] * 9) + "\n")
    payload, _ = run_json(capsys, "bound", "eval", "--theorem", "3", "--model", "exponential", "--u", "2",
                          "--n", "10", "--delta-file", str(p), "--samples", "20000")
    assert payload["result"]["params"]["delta"] == [0.1] * 9


def test_bound_prop2(capsys):
    payload, _ = run_json(capsys, "bound", "eval", "--theorem", "2", "--model", "shao", "--alpha", "0.5",
                          "--u", "3", "--grid-b", "6.02448", "--prop2")
    assert payload["result"]["params"]["N"] == 41
    assert payload["result"]["log_value"] == pytest.approx(-31.703342657623203, rel=1e-12)
    assert payload["result"]["hypotheses_ok"] is False


def test_bound_missing_params(capsys):
    rc, _, _ = run(capsys, "bound", "eval", "--theorem", "2", "--model", "exponential", "--u", "3", "--n", "10")
    assert rc == 1
    rc, _, _ = run(capsys, "bound", "eval", "--theorem", "1", "--model", "exponential", "--u", "0.5", "--n", "10")
    assert rc == 1


def test_gp_simulate(capsys):
    payload, err = run_json(capsys, "gp", "simulate", "--model", "exponential", "--u", "2", "--n", "2",
                            "--samples", "50000", "--seed", "3")
    assert "seed: 3" in err
    assert 0 < payload["result"]["exceedance"]["mean"] < 1
    rc, _, _ = run(capsys, "gp", "simulate", "--model", "exponential", "--u", "4", "--n", "2", "--samples", "1000")
    assert rc == 1


def test_verify_chain(capsys):
    payload, _ = run_json(capsys, "verify", "chain", "--model", "exponential", "--u", "2", "--n", "10",
                          "--samples", "50000")
    assert payload["result"]["passed"]
    assert len(payload["result"]["inequalities"]) == 5


def test_optimize(capsys):
    payload, _ = run_json(capsys, "optimize", "pickands")
    r = payload["result"]
    assert r["kappa_star"] == pytest.approx(1.18267, abs=1e-4)
    assert r["g_star_over_e"] >= 1.15279
    assert all(r["constraints"].values())


def test_curve_csv_and_json(capsys, tmp_path):
    out = tmp_path / "curve.csv"
    rc, stdout, _ = run(capsys, "curve", "halpha", "--alpha-min", "0.5", "--alpha-max", "2", "--points", "4",
                        "--output", str(out))
    assert rc == 0 and stdout == ""
    rows = read_curve_csv(out.read_text())
    assert [r["alpha"] for r in rows] == [0.5, 1.0, 1.5, 2.0]
    payload, _ = run_json(capsys, "curve", "halpha", "--points", "3", "--format", "json", "--c", "0.5")
    assert payload["result"]["c"] == 0.5 and len(payload["result"]["rows"]) == 3
    rc, _, _ = run(capsys, "curve", "halpha", "--alpha-min", "0", "--points", "3")
    assert rc == 1


def test_config_file_and_precedence(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# defaults\na = 1\nb = -1\nt = 1\nconstants = shape\n")
    payload, _ = run_json(capsys, "bm", "exact", "--config", str(cfg))
    assert payload["result"]["value"] == pytest.approx(0.3319, abs=1e-4)
    assert payload["provenance"]["constants_mode"] == "shape"
    payload, _ = run_json(capsys, "bm", "exact", "--config", str(cfg), "--b", "0")
    assert payload["result"]["value"] == pytest.approx(0.682689, abs=1e-6)
    bad = tmp_path / "bad.cfg"
    bad.write_text("just words\n")
    rc, _, _ = run(capsys, "bm", "exact", "--config", str(bad))
    assert rc == 1
    rc, _, _ = run(capsys, "bm", "exact", "--config", str(tmp_path / "missing.cfg"))
    assert rc == 1


def test_repeat_output_identical(capsys):
    argv = ["bm", "mc", "--a", "0.5", "--b", "-2", "--t0", "0.25", "--t", "2", "--samples", "20000", "--seed", "7"]
    _, first, _ = run(capsys, *argv)
    _, second, _ = run(capsys, *argv)
    assert first == second
    _, third, _ = run(capsys, *argv, "--workers", "2")
    assert json.loads(third)["result"] == json.loads(first)["result"]


def test_console_script():
    proc = subprocess.run([sys.executable, "-m", "supbounds.cli", "bm", "exact", "--a", "1", "--t", "1"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["result"]["value"] == pytest.approx(0.682689, abs=1e-6)
    proc = subprocess.run([sys.executable, "-m", "supbounds.cli", "bm"], capture_output=True, text=True, check=False)
    assert proc.returncode == 2
