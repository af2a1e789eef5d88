"""Command surface: config validation, report IO, and the exit-code
contract on fast ladders.  The full scripted matrix at acceptance scale
lives in test_acceptance.py."""

import csv
import json
import os

import pytest

from freeparticle.cli import (
    EXIT_CHECK_FAILED,
    EXIT_OK,
    EXIT_USAGE,
    SCHEMA_VERSION,
    RunConfig,
    _atomic_write,
    load_report,
    main,
    make_report,
)


def run_cli(*argv):
    return main(list(argv))


# ---------------------------------------------------------------------------
# validation


def test_odd_grid_size_rejected():
    cfg = RunConfig(command="verify", class_tag="massive_plus", grid_sizes=[15])
    assert any("odd" in p for p in cfg.validate())


def test_small_grid_rejected():
    cfg = RunConfig(command="verify", class_tag="massive_plus", grid_sizes=[4])
    assert cfg.validate()


def test_mass_sign_constraints():
    cfg = RunConfig(command="verify", class_tag="massive_plus", grid_sizes=[8], mu=0.0)
    assert any("positive mass" in p for p in cfg.validate())
    cfg = RunConfig(command="verify", class_tag="massless_pm", grid_sizes=[8], mu=1.0)
    assert any("massless" in p for p in cfg.validate())


def test_coupling_only_for_massless_two_block():
    cfg = RunConfig(command="verify", class_tag="massive_plus", grid_sizes=[8], mu=1.0, m=2)
    assert any("coupling" in p for p in cfg.validate())


def test_unknown_suite_and_override_names():
    cfg = RunConfig(command="verify", class_tag="massive_plus", grid_sizes=[8], mu=1.0,
                    suites=["exact", "bogus"])
    assert any("unknown suites" in p for p in cfg.validate())
    cfg = RunConfig(command="verify", class_tag="massive_plus", grid_sizes=[8], mu=1.0,
                    tolerance_overrides={"nope": 1.0})
    assert any("tolerance overrides" in p for p in cfg.validate())


def test_momentum_support_rule():
    cfg = RunConfig(command="evolve", class_tag="massive_plus", grid_sizes=[8], mu=1.0,
                    center=[5.0, 0.0, 0.0], width=1.0)
    assert any("boundary rule" in p for p in cfg.validate())


# ---------------------------------------------------------------------------
# report plumbing


def test_atomic_write_and_load_report(tmp_path):
    path = tmp_path / "rep.json"
    cfg = RunConfig(command="verify", class_tag="massive_plus", grid_sizes=[8], mu=1.0)
    doc = make_report(cfg, [])
    _atomic_write(str(path), json.dumps(doc))
    back = load_report(str(path))
    assert back["schema_version"] == SCHEMA_VERSION
    assert back["config"]["class_tag"] == "massive_plus"
    assert not list(tmp_path.glob("*.tmp*"))


def test_load_report_rejects_unknown_fields(tmp_path):
    path = tmp_path / "rep.json"
    cfg = RunConfig(command="verify", class_tag="massive_plus", grid_sizes=[8], mu=1.0)
    doc = make_report(cfg, [])
    doc["extra"] = True
    path.write_text(json.dumps(doc))
    with pytest.raises(ValueError):
        load_report(str(path))


def test_load_report_rejects_schema_drift(tmp_path):
    path = tmp_path / "rep.json"
    cfg = RunConfig(command="verify", class_tag="massive_plus", grid_sizes=[8], mu=1.0)
    doc = make_report(cfg, [])
    doc["schema_version"] = SCHEMA_VERSION + 1
    path.write_text(json.dumps(doc))
    with pytest.raises(ValueError):
        load_report(str(path))


# ---------------------------------------------------------------------------
# exit codes on fast ladders


def test_verify_ok_and_report(tmp_path):
    out = tmp_path / "rep.json"
    code = run_cli("verify", "--class", "massive_plus", "--n", "8,12",
                   "--suites", "exact", "--output", str(out))
    assert code == EXIT_OK
    rep = load_report(str(out))
    assert rep["passed"] is True
    assert all(c["passed"] for c in rep["checks"])


def test_verify_odd_n_exits_2():
    assert run_cli("verify", "--class", "massive_plus", "--n", "15",
                   "--suites", "exact") == EXIT_USAGE


def test_verify_bad_class_exits_2():
    assert run_cli("verify", "--class", "massive_diagonal", "--n", "8",
                   "--suites", "exact") == EXIT_USAGE


def test_verify_kg_on_single_block_exits_2():
    assert run_cli("verify", "--class", "massive_plus", "--n", "8,12",
                   "--suites", "kg") == EXIT_USAGE


def test_verify_tightened_tolerance_exits_1(tmp_path):
    code = run_cli("verify", "--class", "massive_plus", "--n", "8,12",
                   "--suites", "exact", "--tol", "exact=1e-20",
                   "--output", str(tmp_path / "r.json"))
    assert code == EXIT_CHECK_FAILED


def test_localizability_requires_m():
    assert run_cli("localizability", "--n", "16,24,32") == EXIT_USAGE


def test_localizability_needs_three_rungs():
    assert run_cli("localizability", "--m", "0", "--n", "16,24") == EXIT_USAGE


def test_evolve_writes_csv(tmp_path):
    out = tmp_path / "traj.csv"
    code = run_cli("evolve", "--class", "massive_plus", "--n", "12",
                   "--center", "1,0,0", "--width", "1.5", "--t-max", "1.0",
                   "--steps", "5", "--output", str(out))
    assert code == EXIT_OK
    with open(out) as f:
        rows = list(csv.reader(f))
    assert rows[0] == ["t", "q1", "q2", "q3", "p1", "p2", "p3",
                       "energy", "kinetic_energy", "norm"]
    assert len(rows) == 6
    assert float(rows[1][9]) == pytest.approx(1.0, abs=1e-10)


def test_evolve_boundary_violation_exits_2(tmp_path):
    out = tmp_path / "traj.csv"
    code = run_cli("evolve", "--class", "massive_plus", "--n", "8",
                   "--center", "1,0,0", "--width", "0.2", "--t-max", "50",
                   "--steps", "5", "--output", str(out))
    assert code == EXIT_USAGE
    assert not out.exists()


def test_evolve_kg_on_single_block_exits_2(tmp_path):
    code = run_cli("evolve", "--class", "massive_plus", "--n", "12",
                   "--kg", "--kg-prefix", str(tmp_path / "rho"),
                   "--output", str(tmp_path / "t.csv"))
    assert code == EXIT_USAGE


def test_evolve_kg_slices(tmp_path):
    code = run_cli("evolve", "--class", "massive_pm_1", "--n", "12",
                   "--center", "1,0,0", "--width", "1.5", "--weights", "1,1",
                   "--t-max", "1.0", "--steps", "5",
                   "--kg", "--kg-prefix", str(tmp_path / "rho"),
                   "--output", str(tmp_path / "t.csv"))
    assert code == EXIT_OK
    for idx in range(3):
        with open(tmp_path / f"rho_t{idx}.csv") as f:
            rows = list(csv.reader(f))
        assert rows[0][0] == "x1\\x2"
        vals = [float(v) for row in rows[1:] for v in row[1:]]
        assert min(vals) >= 0


def test_thread_env_var(monkeypatch, tmp_path):
    monkeypatch.setenv("FREEPARTICLE_THREADS", "1")
    out = tmp_path / "rep.json"
    code = run_cli("verify", "--class", "massive_plus", "--n", "8",
                   "--suites", "exact", "--output", str(out))
    assert code == EXIT_OK
    assert load_report(str(out))["config"]["threads"] == 1


def test_version_flag_exits_zero(capsys):
    assert run_cli("--version") == 0
    assert "freeparticle" in capsys.readouterr().out
