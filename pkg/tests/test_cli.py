import csv
import json

import numpy as np
import pytest

from unified_descent.artifacts import load_run
from unified_descent.cli import EXIT_CHECK, EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, main
from unified_descent.config import load_schema, validate
from unified_descent.optimizer import TrajectoryRecord

F1 = {"name": "f1_polyak", "problem": {"kind": "zoo", "tag": "F1_SQUARE"},
      "policy": {"kind": "POLYAK", "c1": 1.0, "fstar": 0.0}, "progress": {"kind": "GAP"},
      "x0": [1.0], "max_iters": 20}
HS = {"name": "hs", "problem": {"kind": "halfspace"}, "policy": {"kind": "CONSTANT", "gamma": 0.05},
      "max_iters": 200, "batch_size": 1,
      "certify": {"c1": 1.0, "progress": {"kind": "SAMPLE_GAP"}, "set": "proxy"}}


def write(path, doc):
    path.write_text(json.dumps(doc))
    return str(path)


def test_run_writes_artifacts(tmp_path):
    cfg = write(tmp_path / "f1.json", F1)
    out = tmp_path / "r"
    assert main(["run", "--config", cfg, "--out", str(out)]) == EXIT_OK
    summ = json.loads((out / "summary.json").read_text())
    assert summ["run_id"] == "f1_polyak" and summ["summary"]["total_steps"] == 20
    validate(summ, "summary")
    rows = list(csv.reader((out / "trajectory.csv").open()))
    assert rows[0] == ["k", "f", "grad_norm_sq", "gamma", "dist_sq", "inner_prod", "sample_ids"]
    assert len(rows) == 22
    run = load_run(out)
    assert run.record.iterate_array()[:, 0].tolist() == [2.0**-k for k in range(21)]


def test_run_output_dir_from_env(tmp_path, monkeypatch):
    monkeypatch.setenv("UD_OUTPUT_DIR", str(tmp_path / "env"))
    assert main(["run", "--config", write(tmp_path / "f1.json", F1)]) == EXIT_OK
    assert (tmp_path / "env" / "summary.json").exists()


def test_override_is_recorded(tmp_path):
    out = tmp_path / "r"
    assert main(["run", "--config", write(tmp_path / "f1.json", F1), "--set", "policy.c1=0.5",
                 "--set", "max_iters=3", "--out", str(out)]) == EXIT_OK
    summ = json.loads((out / "summary.json").read_text())
    assert summ["config"]["policy"]["c1"] == 0.5 and summ["summary"]["total_steps"] == 3


def test_config_errors_exit_2(tmp_path, capsys):
    bad = dict(F1, policy={"kind": "NOPE"})
    assert main(["run", "--config", write(tmp_path / "bad.json", bad), "--out", str(tmp_path / "o")]) == EXIT_CONFIG
    assert "config error" in capsys.readouterr().err
    assert main(["run", "--config", str(tmp_path / "missing.json")]) == EXIT_CONFIG
    assert main(["run", "--config", write(tmp_path / "f1.json", F1), "--set", "noequals"]) == EXIT_CONFIG


def test_policy_error_exit_3(tmp_path):
    doc = dict(F1, policy={"kind": "POLYAK", "c1": 1.0, "fstar": 5.0})
    assert main(["run", "--config", write(tmp_path / "e.json", doc), "--out", str(tmp_path / "o")]) == EXIT_RUNTIME


def test_certify_negative_gap_exit_3(tmp_path):
    out = tmp_path / "r"
    main(["run", "--config", write(tmp_path / "f1.json", F1), "--out", str(out)])
    assert main(["certify", "--run", str(out), "--fstar", "0.5"]) == EXIT_RUNTIME


def test_certify_deterministic_and_idempotent(tmp_path, capsys):
    out = tmp_path / "r"
    main(["run", "--config", write(tmp_path / "f1.json", F1), "--out", str(out)])
    capsys.readouterr()
    assert main(["certify", "--run", str(out), "--c1", "1.0"]) == EXIT_OK
    first = capsys.readouterr().out
    cert = json.loads(first)
    validate(cert, "certificate")
    assert cert["empirical_c2"] == 0.0 and cert["inner_nonneg"] is True
    assert all(b["pass"] for b in cert["bounds"])
    assert cert["oracle"]["value"] == pytest.approx(0.0, abs=1e-9)
    saved = (out / "certificate.json").read_bytes()
    assert main(["certify", "--run", str(out), "--c1", "1.0"]) == EXIT_OK
    assert capsys.readouterr().out == first
    assert (out / "certificate.json").read_bytes() == saved


def test_certify_multiple_runs(tmp_path):
    runs = []
    for seed in (0, 1):
        out = tmp_path / f"s{seed}"
        main(["run", "--config", write(tmp_path / "hs.json", HS), "--set", f"seed={seed}", "--out", str(out)])
        runs += ["--run", str(out)]
    agg_dir = tmp_path / "agg"
    assert main(["certify", *runs, "--out", str(agg_dir)]) == EXIT_OK
    agg = json.loads((agg_dir / "aggregate.json").read_text())
    assert len(agg["runs"]) == 2 and agg["all_bounds_pass"]
    rows = list(csv.reader((agg_dir / "c2_series.csv").open()))
    assert rows[0] == ["k", "mean", "max", "min"] and len(rows) == 202


def test_halfspace_run_round_trips_dataset(tmp_path):
    out = tmp_path / "r"
    main(["run", "--config", write(tmp_path / "hs.json", HS), "--out", str(out)])
    run = load_run(out)
    assert (out / "dataset.csv").read_text() == run.problem.dataset.to_csv()
    rec = TrajectoryRecord.from_csv((out / "trajectory.csv").read_text(), (out / "iterates.csv").read_text(), 4, True)
    assert rec.to_csv() == (out / "trajectory.csv").read_text()
    assert np.array_equal(rec.iterate_array(), run.record.iterate_array())


def test_oracle_command(tmp_path):
    path = tmp_path / "oracle.json"
    assert main(["oracle", "--grid", "20001", "--output", str(path)]) == EXIT_OK
    doc = json.loads(path.read_text())
    validate(doc, "oracle")
    assert doc["all_pass"] and len(doc["rows"]) == 5


def test_oracle_mismatch_exit_1(tmp_path, monkeypatch):
    from dataclasses import replace

    from unified_descent import cli
    from unified_descent.certify import oracle

    wrong = (replace(oracle.ORACLE_CASES[0], expected=2.0),)
    monkeypatch.setattr(cli, "oracle_table", lambda **kw: oracle.oracle_table(wrong, **kw))
    assert main(["oracle", "--grid", "2001", "--output", str(tmp_path / "o.json")]) == EXIT_CHECK
    assert json.loads((tmp_path / "o.json").read_text())["all_pass"] is False


def test_oracle_window_missing_the_peak_exit_3(tmp_path):
    # the f3 peak near -0.58 lies outside [-0.3, 0.3]
    code = main(["oracle", "--interval", "-0.3", "0.3", "--grid", "2001", "--output", str(tmp_path / "o.json")])
    assert code == EXIT_RUNTIME


def test_classify_command(tmp_path):
    path = tmp_path / "c.json"
    assert main(["classify", "--function", "F2_SQRT_TAIL", "--cell", "F1", "--cell", "F3",
                 "--output", str(path)]) == EXIT_OK
    doc = json.loads(path.read_text())
    validate(doc, "classify")
    verdicts = {e["cell"]: e["verdict"] for e in doc["entries"]}
    assert verdicts == {"F1": "OUT", "F3": "IN"}


def test_zoo_command(capsys):
    assert main(["zoo", "--x", "0"]) == EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    f3 = next(f for f in doc["functions"] if f["tag"] == "F3_DOUBLE_WELL")
    assert f3["value"] == 0.5 and f3["minimizers"] == [-1.0, 1.0]


def test_sweep_layout_and_empty_grid(tmp_path):
    cfg = write(tmp_path / "hs.json", dict(HS, max_iters=50))
    out = tmp_path / "sw"
    assert main(["sweep", "--config", cfg, "--seeds", "0", "1", "--param", "certify.c1=[0.1,1.0]",
                 "--out", str(out)]) == EXIT_OK
    runs = sorted(p.name for p in (out / "runs").iterdir())
    assert runs == ["c000-s0", "c000-s1", "c001-s0", "c001-s1"]
    rows = list(csv.DictReader((out / "aggregate.csv").open()))
    assert [r["run_id"] for r in rows] == runs
    assert [float(r["certify.c1"]) for r in rows] == [0.1, 0.1, 1.0, 1.0]
    for r in runs:
        validate(json.loads((out / "runs" / r / "certificate.json").read_text()), "certificate")
    assert main(["sweep", "--config", cfg, "--seeds", "--out", str(tmp_path / "e")]) == EXIT_CONFIG
    assert main(["sweep", "--config", str(tmp_path / "nope.json")]) == EXIT_CONFIG


def test_schemas_are_valid_documents():
    from jsonschema import Draft202012Validator
    for name in ("config", "summary", "certificate", "oracle", "classify"):
        Draft202012Validator.check_schema(load_schema(name))
