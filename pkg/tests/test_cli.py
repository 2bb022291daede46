import json
import subprocess
import sys

import numpy as np
import pytest

from agcontracts.casestudy import (build_contract_C, build_contract_C1,
                                   build_contract_C2, build_follower_system, build_triple)
from agcontracts.cli import main
from agcontracts.contracts import LinearContract, save_contract
from agcontracts.files import (load_init, load_system, load_triple, save_init, save_system,
                               save_triple, validate_document)
from agcontracts.refinement import theorem_triples


@pytest.fixture
def files(tmp_path, params):
    paths = {}
    for name, c in (("c1", build_contract_C1(params)), ("c2", build_contract_C2(params)),
                    ("c", build_contract_C(params))):
        paths[name] = tmp_path / f"{name}.json"
        save_contract(c, paths[name])
    system, init = build_follower_system(params)
    paths["system"] = tmp_path / "system.json"
    paths["init"] = tmp_path / "init.json"
    save_system(system, paths["system"])
    save_init(init, paths["init"])
    return paths


def run(*args):
    return main([str(a) for a in args])


def test_refine_case_study(files, tmp_path, capsys):
    report = tmp_path / "r.json"
    assert run("refine", files["c1"], files["c2"], files["c"], "-o", report) == 0
    out = capsys.readouterr().out
    assert "rho_D = +0" in out and "rho_otimes = +0" in out and "rho_Omega = +0" in out
    assert "refinement holds" in out
    doc = json.loads(report.read_text())
    validate_document(doc, "verdict")
    assert doc["aggregate"]["holds"] is True
    assert doc["manifest"]["command"] == "refine"
    assert doc["manifest"]["overrides"]["horizon_ii"] == 2


def test_refine_perturbed_prints_witness(files, params, capsys):
    save_contract(build_contract_C(params).replace(guar_rhs=[-0.01]), files["c"])
    assert run("refine", files["c1"], files["c2"], files["c"]) == 1
    out = capsys.readouterr().out
    assert "violated: Omega row 0 theta = +0.01" in out
    assert "witness" in out


def test_refine_explicit_horizon_wins(files, capsys):
    assert run("refine", files["c1"], files["c2"], files["c"],
               "--horizon-ii", "1", "--horizon-iii", "1") == 1
    assert "+inf" in capsys.readouterr().out


def test_refine_missing_file(files, tmp_path, capsys):
    assert run("refine", files["c1"], tmp_path / "nope.json", files["c"]) == 2
    assert "error" in capsys.readouterr().err


def test_refine_bad_json(files, capsys):
    files["c"].write_text("{ not json")
    assert run("refine", files["c1"], files["c2"], files["c"]) == 2
    assert "line 1" in capsys.readouterr().err


def test_refine_dimension_mismatch(files, capsys):
    save_contract(LinearContract.empty(3, 2), files["c2"])
    assert run("refine", files["c1"], files["c2"], files["c"]) == 2


def test_refine_solver_failure(files, monkeypatch, capsys):
    from agcontracts import cli
    from agcontracts.lp import PivotBudgetExceeded

    def broken(*args, **kwargs):
        raise PivotBudgetExceeded(7)
    monkeypatch.setattr(cli, "check_refinement", broken)
    assert run("refine", files["c1"], files["c2"], files["c"]) == 3
    assert "7 pivots" in capsys.readouterr().err


def test_refine_tolerance_from_environment(files, params, monkeypatch, capsys):
    save_contract(build_contract_C(params).replace(guar_rhs=[-0.01]), files["c"])
    monkeypatch.setenv("AGCONTRACTS_TOL", "0.1")
    assert run("refine", files["c1"], files["c2"], files["c"]) == 0
    assert "tol 0.1" in capsys.readouterr().out


def test_refine_extendability_policies(files, tmp_path, capsys):
    report = tmp_path / "r.json"
    assert run("refine", files["c1"], files["c2"], files["c"], "--check-extendability",
               "-o", report) == 0
    err = capsys.readouterr().err
    assert "triple 1 is not extendable" in err
    assert "dimension 12" in err
    doc = json.loads(report.read_text())
    validate_document(doc, "verdict")
    assert [e["extendable"] for e in doc["extendability"]] == [False, False, None]
    assert run("refine", files["c1"], files["c2"], files["c"], "--check-extendability",
               "--extendability-policy", "fail") == 4


def test_satisfy_case_study(files, tmp_path, capsys):
    report = tmp_path / "s.json"
    assert run("satisfy", files["system"], files["c2"], files["init"], "-o", report) == 0
    out = capsys.readouterr().out
    assert "theta[base, row 0] = +0" in out
    assert "satisfaction holds" in out
    validate_document(json.loads(report.read_text()), "verdict")


def test_satisfy_weaker_controller(files, params, capsys):
    with pytest.warns(UserWarning):
        q = params.with_overrides(lam=params.lam - 0.1)
    save_system(build_follower_system(q)[0], files["system"])
    assert run("satisfy", files["system"], files["c2"], files["init"]) == 1
    assert "theta[step, row 0] = +0.1" in capsys.readouterr().out


def test_satisfy_zero_guarantee(files, capsys):
    save_contract(LinearContract.empty(2, 2), files["c2"])
    assert run("satisfy", files["system"], files["c2"], files["init"]) == 0
    assert "0 LPs" in capsys.readouterr().out


def test_satisfy_bad_system(files, capsys):
    files["system"].write_text(json.dumps({"schema_version": "1", "F": [[1]], "B": [[1]]}))
    assert run("satisfy", files["system"], files["c2"], files["init"]) == 2


def test_extend_commands(tmp_path, triple, capsys):
    path = tmp_path / "t.json"
    save_triple([[1.0]], [[0.0]], [1.0], path)
    assert run("extend", path) == 0
    save_triple(*theorem_triples(triple)[0], path, label="leader kinematics")
    assert run("extend", path) == 1
    assert "u1 = [0.0, -2.94]" in capsys.readouterr().out
    save_triple(np.eye(9), np.zeros((9, 9)), np.ones(9), path)
    report = tmp_path / "e.json"
    assert run("extend", path, "-o", report) == 4
    assert "dimension 18" in capsys.readouterr().out
    validate_document(json.loads(report.read_text()), "extendability")
    path.write_text(json.dumps({"schema_version": "1", "V1": [[1]], "V0": [[1, 2]], "v0": [1]}))
    assert run("extend", path) == 2


def test_file_round_trips(tmp_path, params):
    system, init = build_follower_system(params)
    save_system(system, tmp_path / "s.json")
    save_init(init, tmp_path / "i.json")
    s2, i2 = load_system(tmp_path / "s.json"), load_init(tmp_path / "i.json")
    np.testing.assert_array_equal(s2.state_matrix, system.state_matrix)
    np.testing.assert_array_equal(s2.input_matrix, system.input_matrix)
    np.testing.assert_array_equal(i2.matrix, init.matrix)
    V1, V0, v0 = theorem_triples(build_triple(params))[1]
    save_triple(V1, V0, v0, tmp_path / "t.json")
    for a, b in zip(load_triple(tmp_path / "t.json"), (V1, V0, v0)):
        np.testing.assert_array_equal(a, b)


def test_casestudy_single_run(tmp_path, capsys):
    out = tmp_path / "out"
    assert run("casestudy", "--runs", 1, "--seed", 42, "--out", out) == 0
    assert "verified+simulated" in capsys.readouterr().out
    lines = (out / "traces.csv").read_text().splitlines()
    assert len(lines) == 301
    assert lines[0].startswith("run,k,t,p_l")
    ts = (out / "timeseries.csv").read_text().splitlines()
    assert ts[0] == "run,k,t,headway,spec,v_f" and len(ts) == 301
    summary = json.loads((out / "summary.json").read_text())
    validate_document(summary, "summary")
    validate_document(json.loads((out / "refinement.json").read_text()), "verdict")
    validate_document(json.loads((out / "satisfaction.json").read_text()), "verdict")
    assert summary["status"] == "verified+simulated"
    assert summary["aggregate"]["n_steps"] == 300
    # the written files feed the other subcommands
    assert run("refine", out / "C1.json", out / "C2.json", out / "C.json") == 0
    assert run("satisfy", out / "system.json", out / "C2.json", out / "init.json") == 0


def test_casestudy_outputs_are_reproducible(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run("casestudy", "--runs", 3, "--seed", 5, "--out", a, "--set", "delta_v=0.05") == 0
    assert run("casestudy", "--runs", 3, "--seed", 5, "--out", b, "--set", "delta_v=0.05") == 0
    for name in ("traces.csv", "timeseries.csv", "C1.json", "system.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    sa = json.loads((a / "summary.json").read_text())
    sb = json.loads((b / "summary.json").read_text())
    sa.pop("manifest"), sb.pop("manifest")
    assert sa == sb
    man = json.loads((a / "summary.json").read_text())["manifest"]
    assert man["overrides"] == {"delta_v": 0.05} and man["seed"] == 5


def test_casestudy_tau_too_large(tmp_path, capsys):
    assert run("casestudy", "--runs", 1, "--out", tmp_path, "--set", "tau=0.4") == 2
    assert "tau" in capsys.readouterr().err


def test_casestudy_bad_override(tmp_path, capsys):
    assert run("casestudy", "--out", tmp_path, "--set", "tau") == 2
    assert run("casestudy", "--out", tmp_path, "--set", "bogus=1") == 2


def test_casestudy_refinement_stage_failure(tmp_path, capsys):
    assert run("casestudy", "--runs", 1, "--out", tmp_path, "--set", "delta_v=0.2") == 5
    assert "refinement-failed" in capsys.readouterr().out


def test_casestudy_satisfaction_stage_failure(tmp_path, capsys):
    with pytest.warns(UserWarning):
        code = run("casestudy", "--runs", 1, "--out", tmp_path, "--set", "lam=1.5")
    assert code == 6


def test_casestudy_scenario_file(tmp_path, capsys):
    scen = tmp_path / "scenario.json"
    scen.write_text(json.dumps({"schema_version": "1", "params": {"delta_p": 0.4},
                                "duration_s": 30.0}))
    assert run("casestudy", scen, "--runs", 2, "--out", tmp_path / "o") == 0
    summary = json.loads((tmp_path / "o" / "summary.json").read_text())
    assert summary["params"]["delta_p"] == 0.4
    assert summary["aggregate"]["n_steps"] == 100
    scen.write_text(json.dumps({"schema_version": "1", "params": {"tau": "x"}}))
    assert run("casestudy", scen, "--out", tmp_path / "o") == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "agcontracts", "--version"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.strip()
