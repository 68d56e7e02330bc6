import json

import pytest

from macsched import Allocation, ConfigError
from macsched.harness import (
    ExperimentPlan, PolicyRef, emit_outputs, first_exceeding, profile_timing, run_experiment, summarize,
)
from macsched.harness.cli import main, parse_seeds
from macsched.metrics import MetricsReport
from macsched.policies import Policy, make_policy


class Constant(Policy):
    name = "constant"

    def allocate(self, metrics, ctx, budget):
        return Allocation({})


def small_plan(**kw):
    base = dict(scenarios=("iperf24",), policies=(PolicyRef("pf"), PolicyRef("rr")), seeds=(1, 2),
                duration_s=2.0)
    base.update(kw)
    return ExperimentPlan(**base)


def test_plan_validation():
    with pytest.raises(ConfigError):
        ExperimentPlan(seeds=(1, 1)).configs()
    with pytest.raises(ConfigError):
        ExperimentPlan(repetitions=0).configs()
    assert ExperimentPlan().seed_list == tuple(range(1, 11))


def test_unresolved_reference_aborts_before_running():
    plan = small_plan(policies=(PolicyRef("pf"), PolicyRef("nope")))
    with pytest.raises(ConfigError):
        run_experiment(plan)
    with pytest.raises(ConfigError):
        run_experiment(small_plan(scenarios=("iperf24", "missing")))


def test_one_report_per_run_and_summary():
    res = run_experiment(small_plan())
    assert [(r.policy, r.seed) for r in res.reports] == [("pf", 1), ("pf", 2), ("rr", 1), ("rr", 2)]
    assert [s["policy"] for s in res.summary] == ["pf", "rr"]


def test_single_run_summary_equals_report():
    res = run_experiment(small_plan(policies=(PolicyRef("pf"),), seeds=(3,)))
    rep, s = res.reports[0], res.summary[0]
    assert s["mean_jain"] == rep.jain and s["mean_gini"] == rep.gini
    assert s["pooled_delay_ms"] == rep.to_dict()["pooled_delay_ms"]


def test_starvation_rate_counting():
    class R:
        def __init__(self, seed, starved):
            self.scenario, self.policy, self.seed = "s", "p", seed
            self.any_starved, self.jain, self.gini, self.ues = starved, None, None, []

        def pooled_delays(self):
            import numpy as np
            return np.zeros(0)

    reports = [R(k, k < 3) for k in range(10)]
    assert summarize(reports)[0]["starvation_rate"] == pytest.approx(0.3)


def test_parallel_equals_serial():
    a = run_experiment(small_plan(workers=1))
    b = run_experiment(small_plan(workers=2))
    assert [r.to_json() for r in a.reports] == [r.to_json() for r in b.reports]


def test_emit_outputs_deterministic(tmp_path):
    res = run_experiment(small_plan())
    files = emit_outputs(res, tmp_path / "a")
    emit_outputs(res, tmp_path / "b")
    names = sorted(p.name for p in files)
    assert "iperf24__pf__seed1.json" in names and "similarity__iperf24.csv" in names
    assert "fairness.csv" in names and "iperf24__rr__seed2__cdf.csv" in names
    for n in names:
        assert (tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes()
    rep = json.loads((tmp_path / "a" / "iperf24__pf__seed1.json").read_text())
    assert rep["schema_version"] == 1 and len(rep["ues"]) == 5


def test_emit_empty_report_header_only(tmp_path):
    rep = MetricsReport("s", "p", 1, 0.0, 0)
    emit_outputs([rep], tmp_path)
    assert (tmp_path / "s__p__seed1__series.csv").read_text().count("\n") == 1
    assert (tmp_path / "s__p__seed1__delays.csv").read_text() == "rnti,delay_ms\n"


def test_emit_reports_offending_path(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError) as e:
        emit_outputs([MetricsReport("s", "p", 1, 0.0, 0)], blocker / "sub")
    assert str(blocker / "sub") in str(e.value)


def test_profile_constant_policy_fast():
    p = profile_timing(Constant(), ue_count=10, trials=200)
    assert set(p) >= {"p50", "p99", "max"}
    assert p["p99"] < 380


def test_profile_bcqi_not_slower_than_qos_log_rule():
    b = profile_timing(make_policy("bcqi"), 100, trials=300, seed=1)
    q = profile_timing(make_policy("qos_log_rule"), 100, trials=300, seed=1)
    assert b["p50"] <= q["p50"]


def test_profile_rejects_zero_ues():
    with pytest.raises(ValueError):
        profile_timing(Constant(), 0)


def test_first_exceeding():
    rows = [{"ue_count": 10, "max": 50.0}, {"ue_count": 200, "max": 900.0}, {"ue_count": 100, "max": 400.0}]
    assert first_exceeding(rows, 380) == 100
    assert first_exceeding(rows[:1], 380) is None


def test_policy_ref_parse():
    r = PolicyRef.parse("gpfb:beta=0.6,gamma=0.7,use_buffer=true")
    assert r.name == "gpfb" and r.params == {"beta": 0.6, "gamma": 0.7, "use_buffer": True}
    with pytest.raises(ConfigError):
        PolicyRef.parse("gpf:beta")


def test_parse_seeds():
    assert parse_seeds("1-3,7") == (1, 2, 3, 7)
    with pytest.raises(ConfigError):
        parse_seeds("a")


# ---------------------------------------------------------------- CLI

def test_cli_list(capsys):
    assert main(["list"]) == 0
    out = capsys.readouterr().out
    assert "policies:" in out and "gpfb" in out and "adaptive_delay" in out


def test_cli_validate(capsys, tmp_path):
    assert main(["validate", "--scenario", "listing2", "--composition", "listing3"]) == 0
    bad = tmp_path / "bad.yaml"
    bad.write_text("grouping: {name: single}\ngroups:\n  - rounds:\n      - {limit: {name: x}, value: {name: pf}}\n")
    assert main(["validate", "--composition", str(bad)]) == 1
    assert "line 4" in capsys.readouterr().err


def test_cli_run_and_exit_codes(tmp_path, capsys):
    out = tmp_path / "o"
    rc = main(["run", "--scenario", "iperf24", "--policy", "pf", "--seeds", "1", "--duration", "1",
               "--out", str(out), "--check"])
    assert rc == 0 and (out / "iperf24__pf__seed1.json").exists()
    assert main(["run", "--scenario", "iperf24", "--policy", "bogus"]) == 1
    assert main(["run", "--scenario", "nowhere.yaml"]) == 1


def test_cli_plan_file(tmp_path):
    plan = tmp_path / "plan.yaml"
    plan.write_text("scenarios: [iperf24]\npolicies: [ft, {name: gpf, params: {beta: 1, gamma: 1}}]\n"
                    f"seeds: [4]\nduration_s: 1\nout: {tmp_path / 'res'}\n")
    assert main(["run", "--plan", str(plan)]) == 0
    assert (tmp_path / "res" / "iperf24__gpf_beta1_gamma1__seed4.json").exists()


def test_cli_profile(tmp_path, capsys):
    assert main(["profile", "--policy", "pf", "--ues", "5", "--trials", "20",
                 "--out", str(tmp_path / "p.json")]) == 0
    rows = json.loads((tmp_path / "p.json").read_text())
    assert rows[0]["policy"] == "pf" and rows[0]["ue_count"] == 5


def test_cli_runtime_failure_exit_code(monkeypatch):
    import macsched.harness.cli as cli

    def boom(plan):
        raise RuntimeError("disk on fire")
    monkeypatch.setattr(cli, "run_experiment", boom)
    assert cli.main(["run", "--scenario", "iperf24", "--policy", "pf", "--seeds", "1"]) == 2
