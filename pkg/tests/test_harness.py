import csv
import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from inexactfw.harness import cli, config, runner
from inexactfw.harness.verify import verify_all


def bundled(name):
    return config.load(cli.resolve_config(name))


# -- configs ---------------------------------------------------------------------

def test_bundled_configs_present():
    names = set(cli.bundled_configs())
    assert {"scalar_floor", "nonconvex_box", "relative_ball", "backtracking_box", "reduction",
            "convex_simplex", "bad_curvature"} <= names


@pytest.mark.parametrize("name", ["scalar_floor", "nonconvex_box", "relative_ball", "reduction"])
def test_config_round_trip(name):
    cfg = bundled(name)
    again = config.loads(cfg.dumps())
    assert again == cfg
    assert config.loads(again.dumps()).to_dict() == cfg.to_dict()


@given(st.floats(0, 1, allow_nan=False), st.integers(0, 5000), st.integers(0, 2**31))
def test_config_round_trip_property(delta, K, seed):
    cfg = bundled("nonconvex_box").with_updates("oracle", delta=delta, seed=seed)
    cfg = cfg.with_updates("solver", K_max=K)
    assert config.loads(cfg.dumps()) == cfg


def test_validation_lists_every_problem():
    cfg = bundled("scalar_floor").to_dict()
    cfg["objective"] = {"kind": "quadratic", "diag": [-1.0]}
    cfg["oracle"] = {"model": "relative_worst", "delta": 0.1}
    cfg["solver"]["x0"] = [3.0]
    problems = config.validate(config.ExperimentConfig.from_dict(cfg))
    text = "\n".join(problems)
    assert "convex objective" in text
    assert "additive or exact oracle" in text
    assert "not feasible" in text


def test_relative_solver_needs_relative_oracle():
    cfg = bundled("relative_ball").with_updates("oracle", model="additive_worst")
    assert any("relative oracle" in p for p in config.validate(cfg))


def test_unknown_top_level_key():
    with pytest.raises(config.ConfigInvalid):
        config.loads('name = "x"\n[solvers]\nK_max = 1\n')


def test_check_must_match_variant():
    cfg = bundled("scalar_floor").with_updates("checks", enabled=["nonconvex_rate_prefix"])
    assert any("does not apply" in p for p in config.validate(cfg))


# -- run -------------------------------------------------------------------------

def test_scalar_floor_passes(tmp_path):
    res = runner.run(bundled("scalar_floor"), tmp_path)
    assert res.exit_code == 0
    assert res.summary["final_suboptimality"] <= 2 * 0.05 + 0.01
    verdict = json.loads(res.paths["verdict"].read_text())
    assert verdict["pass"] is True
    assert {c["name"] for c in verdict["checks"]} >= {"convex_one_step", "convex_floor"}
    for c in verdict["checks"]:
        assert set(c) >= {"name", "lhs", "rhs", "slack", "pass"}


def test_nonconvex_box_passes(tmp_path):
    res = runner.run(bundled("nonconvex_box"), tmp_path)
    assert res.exit_code == 0
    check = next(c for c in res.checks if c.name == "nonconvex_rate_prefix")
    assert check.passed and check.slack >= -1e-9


def test_bad_curvature_exit_code_and_message(tmp_path):
    res = runner.run(bundled("bad_curvature"), tmp_path)
    assert res.exit_code == 2
    assert any("C invariant" in e for e in res.summary["errors"])
    assert not res.paths


def test_failing_check_sets_exit_code(tmp_path):
    # two steps from 0.7 end at x = 17/60, above the 0.01 floor that delta = 0 allows
    cfg = bundled("scalar_floor").with_updates("solver", K_max=2).with_updates("oracle", delta=0.0)
    res = runner.run(cfg, tmp_path)
    assert res.exit_code == 1
    assert not next(c for c in res.checks if c.name == "convex_floor").passed
    assert res.exit_code == (0 if all(c.passed for c in res.checks) else 1)


def test_trace_csv_schema(tmp_path):
    res = runner.run(bundled("scalar_floor").with_updates("solver", K_max=10), tmp_path)
    text = res.paths["trace"].read_text().splitlines()
    assert text[0] == "# inexactfw-trace v1"
    rows = list(csv.DictReader(text[1:]))
    assert list(rows[0]) == ["k", "f", "gap_exact", "gap_approx", "step", "grad_norm",
                             "slack_onestep", "beta"]
    assert len(rows) == 11
    assert rows[-1]["step"] == ""


def test_output_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(runner.OUTPUT_ENV, str(tmp_path / "envout"))
    res = runner.run(bundled("backtracking_box"))
    assert res.paths["trace"].parent == tmp_path / "envout"
    assert res.paths["trace"].exists()


def test_no_partial_files_left(tmp_path):
    runner.run(bundled("scalar_floor").with_updates("solver", K_max=10), tmp_path)
    assert sorted(p.name for p in tmp_path.iterdir()) == ["scalar_floor_trace.csv", "scalar_floor_verdict.json"]


def test_reduce_mode(tmp_path):
    cfg = bundled("reduction").with_updates("reduction", n_instances=60)
    res = runner.reduce(cfg, tmp_path)
    assert res.exit_code == 0
    lines = res.paths["instances"].read_text().splitlines()
    assert lines[0].startswith("# inexactfw-trace v1")
    assert len(lines) == 2 + 60


def test_reduce_rejects_nonpositive_eps(tmp_path):
    res = runner.reduce(bundled("reduction").with_updates("reduction", eps=0.0), tmp_path)
    assert res.exit_code == 2


# -- sweeps ----------------------------------------------------------------------

def test_delta_sweep_floor(tmp_path):
    deltas = [0.01, 0.02, 0.04, 0.08]
    res = runner.sweep(bundled("scalar_floor"), "delta", deltas, tmp_path)
    subs = [r["final_suboptimality"] for r in res.rows]
    assert res.summary["nondecreasing"]
    assert all(s <= 2 * d + 0.01 for s, d in zip(subs, deltas))
    assert res.paths["csv"].read_text().startswith("# inexactfw-trace v1 sweep")


def test_delta_sweep_slope_is_at_most_two():
    deltas = [0.01, 0.02, 0.04, 0.08, 0.16, 0.32]
    res = runner.sweep(bundled("scalar_floor"), "delta", deltas, write=False)
    subs = np.array([r["final_suboptimality"] for r in res.rows])
    slope = np.polyfit(deltas, subs, 1)[0]
    assert slope <= 2 + 0.05


def test_lambda_sweep_scaling():
    cfg = bundled("reduction").with_updates("reduction", n_instances=90)
    res = runner.sweep(cfg, "lambda", [10.0, 100.0, 1000.0], write=False)
    assert res.summary["pass"]
    assert res.summary["rhs_times_lambda_spread"] <= 1e-9
    assert all(r["max_gap"] <= r["bound_rhs"] + 1e-9 for r in res.rows)


def test_step_sweep_parses_rules():
    res = runner.sweep(bundled("scalar_floor"), "step", ["harmonic", "power:0.75", "power:1.0"], write=False)
    assert [r["pass"] for r in res.rows] == [True, True, True]


def test_sweep_unknown_param():
    with pytest.raises(ValueError):
        runner.sweep(bundled("scalar_floor"), "temperature", [1.0], write=False)


def test_parallel_sweep_matches_serial():
    cfg = bundled("nonconvex_box")
    serial = runner.sweep(cfg, "K_max", [10, 50, 100], write=False)
    parallel = runner.sweep(cfg, "K_max", [10, 50, 100], jobs=2, write=False)
    assert serial.rows == parallel.rows


def test_loglog_slope_recovers_power():
    xs = np.array([10, 100, 1000])
    assert runner.loglog_slope(xs, 3.0 * xs ** -0.5) == pytest.approx(-0.5)
    assert np.isnan(runner.loglog_slope(xs, [1.0, 0.0, -1.0]))


# -- verify ----------------------------------------------------------------------

def test_verify_negative_control_names_the_failure():
    report = verify_all(0, oracle_inflate=10.0, suites=["oracles"])
    assert not report["pass"]
    assert any(n.startswith(("subproblem_transfer", "inexact_lower_model")) for n in report["failures"])


def test_verify_seed_sweep_has_identical_pass_set():
    fast = ["geometry.projection", "solvers", "reduction"]
    passes = []
    for seed in range(10):
        rep = verify_all(seed, suites=fast)
        passes.append({c["name"]: c["pass"] for s in rep["suites"].values() for c in s["checks"]})
    assert all(p == passes[0] for p in passes)


# -- cli -------------------------------------------------------------------------

def test_cli_run_and_exit_codes(tmp_path, capsys):
    assert cli.main(["run", "scalar_floor", "--out", str(tmp_path)]) == 0
    assert "convex_floor" in capsys.readouterr().out
    assert cli.main(["run", "bad_curvature", "--out", str(tmp_path)]) == 2
    assert "C invariant" in capsys.readouterr().err


def test_cli_sweep(tmp_path, capsys):
    code = cli.main(["sweep", "scalar_floor", "--param", "delta", "--values", "0.01,0.02", "--out", str(tmp_path)])
    assert code == 0
    assert (tmp_path / "scalar_floor_sweep_delta.csv").exists()


def test_cli_reduce(tmp_path):
    path = tmp_path / "small.toml"
    path.write_text(bundled("reduction").with_updates("reduction", n_instances=30).dumps())
    assert cli.main(["reduce", str(path), "--out", str(tmp_path)]) == 0


def test_cli_unknown_config():
    with pytest.raises(SystemExit):
        cli.main(["run", "no_such_config"])
