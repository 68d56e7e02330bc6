import numpy as np
import pytest

from macsched import CellConfig, ConfigError, make_policy
from macsched.sim import (
    CbrSource, ChannelModel, FullBufferSource, OnOffSource, PduQueue, ScenarioConfig, UeConfig, World,
    arrivals_per_slot, generate_channel, load_scenario, run_scenario,
)
from macsched.sim.scenario import PRESET_NAMES, scenario_from_dict, scenario_to_dict
from macsched.sim.simulator import step_slot

CAPACITY_MBPS = 126.8064  # 222 B x 51 PRBs x 0.7 / 0.5 ms, by hand


def one_ue(traffic, cqi=15, bler=0.0, duration=2.0, jitter=0.0, **kw):
    return ScenarioConfig("t", (UeConfig(1, cqi, traffic, bler),), duration_s=duration,
                          channel=ChannelModel(jitter_std=jitter), check_invariants=True, **kw)


# ---------------------------------------------------------------- building blocks

def test_queue_fifo_and_partial_pop():
    q = PduQueue(10_000)
    q.push(1000, 2, slot=3)
    q.push(500, 1, slot=5)
    delays = []
    assert q.pop_bytes(1200, 7, delays) == 1200
    assert delays == [4] and q.bytes == 1300 and q.head_slot() == 3
    q.pop_bytes(10_000, 9, delays)
    assert delays == [4, 6, 4] and q.bytes == 0 and q.check() == []


def test_queue_tail_drop():
    q = PduQueue(2500)
    assert q.push(1000, 4, 0) == 2
    assert q.dropped == 2000 and q.dropped_pdus == 2
    assert q.arrived == q.delivered + q.bytes + q.dropped


def test_cbr_rate_and_phase():
    src = CbrSource(24.0, 1500)
    t = src.arrival_times(10.0, np.random.default_rng(1))
    assert len(t) * 1500 * 8 / 10 / 1e6 == pytest.approx(24.0, rel=1e-3)
    t2 = src.arrival_times(10.0, np.random.default_rng(2))
    assert t[0] != t2[0]
    assert np.allclose(np.diff(t), src.interval_s)


def test_onoff_statistics():
    src = OnOffSource(2.0, 2.0, 2000, 1000)
    rng = np.random.default_rng(0)
    on = src.on_periods(4000.0, rng)
    lengths = [b - a for a, b in on[:-1]]
    assert np.mean(lengths) == pytest.approx(2.0, rel=0.1)
    t = src.arrival_times(400.0, np.random.default_rng(3))
    assert len(t) / 400 == pytest.approx(1000, rel=0.15)
    assert np.all(np.diff(t) >= 0)


@pytest.mark.parametrize("bad", [dict(rate_mbps=0), dict(rate_mbps=1, pdu_bytes=0)])
def test_cbr_validation(bad):
    with pytest.raises(ValueError):
        CbrSource(**bad)


def test_arrivals_per_slot():
    c = arrivals_per_slot(np.array([0.0, 0.0004, 0.0006, 0.0051, 9.0]), 0.0005, 12)
    assert c.tolist() == [2, 1, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0]


def test_channel_clamped_and_frozen_without_jitter():
    tr = generate_channel([1, 15, 7.4], ChannelModel(jitter_std=3.0), 20_000, np.random.default_rng(0))
    assert tr.cqi.min() >= 1 and tr.cqi.max() <= 15
    flat = generate_channel([4, 12], ChannelModel(jitter_std=0.0), 2000, np.random.default_rng(0))
    assert (flat.cqi == [4, 12]).all()
    with pytest.raises(ValueError):
        ChannelModel(ar_coef=1.0)


# ---------------------------------------------------------------- runs

def test_empty_buffers_no_transmission():
    w = World(one_ue(CbrSource(1.0)))
    rec = step_slot(w)
    assert rec.is_dl and rec.alloc.total == 0 and rec.served == {}


def test_no_dl_on_special_or_uplink_slots():
    seen = []
    run_scenario(one_ue(FullBufferSource(), duration=0.1), on_slot=lambda w, t, *a: seen.append(t))
    assert seen and all(t % 10 < 7 for t in seen)
    assert len(seen) == 0.7 * 200


def test_bler_zero_goodput_equals_throughput():
    r = run_scenario(one_ue(FullBufferSource(), duration=2.0))
    u = r.ues[0]
    assert u.delivered_bytes == u.tx_bytes > 0
    assert r.violations == []


def test_bler_lln():
    r = run_scenario(one_ue(FullBufferSource(), bler=0.2, duration=20.0))
    u = r.ues[0]
    assert u.delivered_bytes / u.tx_bytes == pytest.approx(0.8, abs=0.03)
    assert r.counters["failed_blocks"] > 0


def test_capacity_oracle_short():
    r = run_scenario(one_ue(FullBufferSource(), duration=5.0))
    assert r.ues[0].avg_goodput_mbps == pytest.approx(CAPACITY_MBPS, rel=0.05)


def test_duration_zero():
    r = run_scenario(one_ue(CbrSource(5.0), duration=0.0))
    assert r.n_slots == 0 and not r.any_starved and r.jain is None
    assert r.ues[0].delay.empty


def test_delays_at_least_one_slot_and_counts_match():
    cfg = load_scenario("bursty").replace(duration_s=5.0, check_invariants=True)
    r = run_scenario(cfg)
    assert r.violations == []
    for u in r.ues:
        assert u.delays_ms.size == u.delivered_pdus
        if u.delays_ms.size:
            assert u.delays_ms.min() >= 0.5


def test_same_seed_identical_report():
    cfg = load_scenario("iperf24").replace(duration_s=3.0)
    assert run_scenario(cfg).to_json() == run_scenario(cfg).to_json()
    assert run_scenario(cfg).to_json() != run_scenario(cfg.replace(seed=2)).to_json()


def test_timing_does_not_change_results():
    cfg = load_scenario("iperf24").replace(duration_s=2.0)
    a = run_scenario(cfg)
    b = run_scenario(cfg.replace(record_timing=True))
    assert b.timing_ns is not None and b.timing_ns.size == b.counters["dl_slots"]
    da, db = a.to_dict(), b.to_dict()
    db.pop("timing_us")
    assert da == db


def test_swap_policy_at_slot_boundary():
    cfg = load_scenario("iperf24").replace(duration_s=1.0)
    w = World(cfg)
    for _ in range(1000):
        w.step()
    w.swap_policy(make_policy("bcqi"))
    rec = [w.step() for _ in range(7)]
    dl = [r for r in rec if r.is_dl]
    assert all(r.alloc.total <= 51 for r in dl)


def test_starvation_zero_delivery():
    cfg = one_ue(CbrSource(1.0), cqi=15, duration=31.0)
    never = type("Never", (), {"allocate": lambda self, m, c, b: __import__("macsched").Allocation({}),
                                "observe": lambda self, *a: None})()
    r = run_scenario(cfg, policy=never)
    assert r.ues[0].starved and r.ues[0].max_gap_s > 30


# ---------------------------------------------------------------- scenario files

@pytest.mark.parametrize("name", PRESET_NAMES)
def test_presets_load(name):
    cfg = load_scenario(name)
    assert len(cfg.ues) == 5 and cfg.duration_s == 60
    assert scenario_to_dict(cfg)["name"] == name


def test_iperf_preset_oversubscribes_cell():
    cfg = load_scenario("iperf24")
    assert sum(u.traffic.rate_mbps for u in cfg.ues) == 120
    assert all(isinstance(u.traffic, CbrSource) for u in cfg.ues)


def test_scenario_errors_listed_together():
    with pytest.raises(ConfigError) as e:
        scenario_from_dict({"ues": [{"rnti": 1, "mean_cqi": 20, "traffic": {"type": "cbr", "rate_mbps": 1}},
                                    {"rnti": 1, "mean_cqi": 5, "traffic": {"type": "cbr", "rate_mbps": 1}}],
                            "policy": "nope", "bogus": 1})
    msg = str(e.value)
    assert "bogus" in msg and "nope" in msg


def test_scenario_validation_collects_all():
    cfg = ScenarioConfig("x", (UeConfig(1, 20, CbrSource(1), bler=1.0, five_qi=4242),), duration_s=-1)
    assert len(cfg.problems()) == 4


def test_unknown_scenario():
    with pytest.raises(ConfigError):
        load_scenario("does-not-exist")


def test_scenario_file_with_composition_ref(tmp_path):
    (tmp_path / "comp.yaml").write_text(
        "grouping: {name: single}\ngroups:\n  - rounds:\n      - {limit: {name: default}, value: {name: ft}}\n")
    (tmp_path / "s.yaml").write_text(
        "name: s\nduration_s: 1\ncomposition: comp.yaml\n"
        "ues:\n  - {rnti: 1, mean_cqi: 9, traffic: {type: cbr, rate_mbps: 5}}\n")
    cfg = load_scenario(tmp_path / "s.yaml")
    assert cfg.composition is not None
    assert run_scenario(cfg).ues[0].delivered_bytes > 0


def test_cell_override_in_scenario():
    cfg = scenario_from_dict({"cell": {"n_prbs": 106}, "ues": [
        {"rnti": 1, "mean_cqi": 9, "traffic": {"type": "full"}}]})
    assert cfg.cell == CellConfig(n_prbs=106)
