import itertools
import random
import textwrap

import pytest

from conftest import make_ctx, ue
from macsched import ConfigError
from macsched.ibs import (
    CompositionPolicy, CompositionSpec, FnRef, GroupSpec, KnapsackRound, LeftoverSpec, RoundSpec,
    compose_schedule, composition_from_dict, group_by_burstiness, group_by_cqi, group_by_rank,
    limit_default, limit_target_throughput, load_composition, make_value, round_objective,
    solve_knapsack_round, split_budget,
)
from macsched.ibs.values import LttiMulti, LttiTarget
from macsched.policies import make_policy


def brute_force(rnd: KnapsackRound, work_conserving=False) -> float:
    """Exhaustive optimum over all integer allocations within bounds.

    ``work_conserving`` additionally requires every PRB that some UE can
    take to be handed out, which is how rounds treat negative values.
    """
    best = -float("inf")
    ranges = [range(lo, hi + 1) for lo, hi in zip(rnd.lower, rnd.upper)]
    full = min(rnd.budget, sum(rnd.upper))
    for theta in itertools.product(*ranges):
        s = sum(theta)
        if s <= rnd.budget and (not work_conserving or s == full):
            best = max(best, round_objective(rnd, theta))
    return best


def random_round(rng, n_max=6, budget_max=12, upper_max=5, vmin=0.0):
    n = rng.randint(1, n_max)
    budget = rng.randint(0, budget_max)
    upper = [rng.randint(0, upper_max) for _ in range(n)]
    lower = [rng.randint(0, u) for u in upper]
    while sum(lower) > budget:
        i = rng.randrange(n)
        lower[i] = max(0, lower[i] - 1)
    vals = [round(rng.uniform(vmin, 10), 1) for _ in range(n)]
    return KnapsackRound(list(range(1, n + 1)), vals, lower, upper, budget)


# ---------------------------------------------------------------- knapsack

def test_knapsack_examples():
    r = solve_knapsack_round(KnapsackRound([1, 2, 3], [5, 3, 1], [0] * 3, [10] * 3, 4))
    assert r.theta == [4, 0, 0]
    r = solve_knapsack_round(KnapsackRound([1, 2, 3], [5, 3, 1], [0] * 3, [2] * 3, 4))
    assert r.theta == [2, 2, 0]


def test_knapsack_ties_by_rnti():
    r = solve_knapsack_round(KnapsackRound([7, 3], [1.0, 1.0], [0, 0], [5, 5], 5))
    assert r.theta == [0, 5]


def test_knapsack_matches_bruteforce_small():
    rng = random.Random(2)
    for _ in range(300):
        rnd = random_round(rng)
        res = solve_knapsack_round(rnd)
        assert not res.degraded
        assert res.total <= rnd.budget
        assert all(lo <= t <= hi for lo, t, hi in zip(rnd.lower, res.theta, rnd.upper))
        assert round_objective(rnd, res.theta) == pytest.approx(brute_force(rnd))


def test_knapsack_work_conserving_with_negative_values():
    rng = random.Random(8)
    for _ in range(300):
        rnd = random_round(rng, vmin=-5.0)
        res = solve_knapsack_round(rnd)
        assert res.total == min(rnd.budget, sum(rnd.upper))
        assert round_objective(rnd, res.theta) == pytest.approx(brute_force(rnd, work_conserving=True))


def test_knapsack_degraded_lower_bounds():
    rnd = KnapsackRound([1, 2, 3], [1, 9, 5], [3, 3, 3], [3, 3, 3], 5)
    res = solve_knapsack_round(rnd)
    assert res.degraded and "lower-bounds-degraded" in res.flags
    assert res.theta == [0, 3, 2]


def test_knapsack_rejects_bad_bounds():
    with pytest.raises(ValueError):
        KnapsackRound([1], [1.0], [3], [2], 5)
    with pytest.raises(ValueError):
        KnapsackRound([1], [1.0], [0], [2], -1)


def test_knapsack_neg_inf_not_filled():
    r = solve_knapsack_round(KnapsackRound([1, 2], [float("-inf"), 1.0], [0, 0], [9, 2], 9))
    assert r.theta == [0, 2]


# ---------------------------------------------------------------- budgets and groups

def test_split_budget_rules():
    assert split_budget([0.7, 0.3], 51) == [36, 15]
    assert split_budget([0.8, 0.2], 51) == [41, 10]
    assert split_budget([1.0], 51) == [51]
    assert split_budget([0.5], 51) == [25]


def test_split_budget_conserves():
    rng = random.Random(0)
    for _ in range(200):
        k = rng.randint(1, 4)
        raw = [rng.random() for _ in range(k)]
        shares = [x / sum(raw) * rng.uniform(0.2, 1.0) for x in raw]
        b = split_budget(shares, 51)
        assert sum(b) == int(sum(shares) * 51 + 1e-9)
        assert all(x >= 0 for x in b)


def test_group_by_cqi():
    ms = [ue(1, cqi=5), ue(2, cqi=15), ue(3, cqi=9), ue(4, cqi=12)]
    g = group_by_cqi(0.5, 0.7)(ms, make_ctx())
    assert g[0].rntis == (2, 4) and g[1].rntis == (1, 3)
    assert (g[0].share, g[1].share) == (0.7, pytest.approx(0.3))
    flat = [ue(r, cqi=7) for r in (4, 3, 2, 1)]
    g = group_by_cqi(0.5, 0.7)(flat, make_ctx())
    assert set(g[0].rntis) == {1, 2}


def test_group_by_burstiness():
    ms = [ue(1, five_qi=79), ue(2, five_qi=9)]
    g = group_by_burstiness(0.8)(ms, make_ctx())
    assert g[0].rntis == (1,) and g[1].rntis == (2,)
    g = group_by_burstiness(0.8)([ue(2, five_qi=9)], make_ctx())
    assert g[0].rntis == ()
    g = group_by_burstiness(0.8, five_qis=[9])([ue(2, five_qi=9)], make_ctx())
    assert g[1].rntis == ()


def test_group_by_rank():
    ms = [ue(r) for r in range(1, 6)]
    ctx = make_ctx(range(1, 6), r_ave={1: 5.0, 2: 1.0, 3: 4.0, 4: 0.5, 5: 9.0})
    assert group_by_rank(0.4)(ms, ctx)[0].rntis == (2, 4)
    tie = make_ctx(range(1, 6))
    assert group_by_rank(0.4)(ms, tie)[0].rntis == (1, 2)
    assert group_by_rank(0.4)([ue(7)], make_ctx([7]))[0].rntis == (7,)


@pytest.mark.parametrize("bad", [0, 1, 1.5])
def test_grouping_fraction_ranges(bad):
    with pytest.raises(ValueError):
        group_by_cqi(bad, 0.5)


# ---------------------------------------------------------------- limits and values

def test_limit_target_throughput():
    ms = [ue(1), ue(2)]
    ctx = make_ctx([1, 2], r_ave={1: 12.0, 2: 9.9})
    lo, hi = limit_target_throughput(10)(ms, ctx, 30)
    assert lo == [0, 0] and hi == [0, 30]
    with pytest.raises(ValueError):
        limit_target_throughput(0)


def test_limit_default():
    assert limit_default()([ue(1)], make_ctx([1]), 17) == ([0], [17])
    assert limit_default()([ue(1)], make_ctx([1]), 0) == ([0], [0])


def test_policy_names_double_as_values():
    ms = [ue(1, tbs=50), ue(2, tbs=150)]
    ctx = make_ctx([1, 2])
    assert make_value("pf")(ms, ctx) == make_policy("pf").values(ms, ctx)
    with pytest.raises(ConfigError):
        make_value("eufs")  # multi-stage only, no value vector


def test_conditional_adaptive_delay():
    fn = make_value("conditional", selector="adaptive_delay")
    two = [ue(1, five_qi=79), ue(2, five_qi=79)]
    fn(two, make_ctx([1, 2]))
    assert isinstance(fn.last_choice, LttiTarget) and fn.last_choice.delta_s == pytest.approx(0.05)
    four = [ue(r, five_qi=79, dl_rsrp=-100 + r) for r in (1, 2, 3, 4)]
    fn(four, make_ctx([1, 2, 3, 4]))
    choice = fn.last_choice
    assert isinstance(choice, LttiMulti)
    assert {r for r, (d, _) in choice.targets.items() if d == pytest.approx(0.05)} == {3, 4}
    assert {r for r, (d, _) in choice.targets.items() if d == pytest.approx(0.3)} == {1, 2}


def test_conditional_constant_is_identity():
    ms = [ue(1, tbs=50), ue(2, tbs=150, buf=0)]
    ctx = make_ctx([1, 2])
    fn = make_value("conditional", selector="constant", value="pf")
    assert fn(ms, ctx) == make_value("pf")(ms, ctx)


def test_conditional_bad_selector_output():
    from macsched.ibs.values import SELECTORS, register_selector
    register_selector("_broken")(lambda: (lambda metrics, ctx: "pf"))
    try:
        fn = make_value("conditional", selector="_broken")
        with pytest.raises(ConfigError):
            fn([ue(1)], make_ctx([1]))
    finally:
        del SELECTORS["_broken"]
    with pytest.raises(ConfigError):
        make_value("conditional", selector="nope")


# ---------------------------------------------------------------- composition

def _single(value="pf", limit="default"):
    return CompositionSpec(FnRef("single"), (GroupSpec((RoundSpec(FnRef(limit), FnRef(value)),)),))


def test_single_round_pf_equals_pf():
    rng = random.Random(3)
    comp = _single().compile()
    pf = make_policy("pf")
    for _ in range(200):
        ms = [ue(r, tbs=rng.randint(1, 222), buf=rng.choice([0, 300, 5000, 10**6])) for r in range(1, 7)]
        ctx = make_ctx(range(1, 7), r_ave={r: rng.uniform(0.01, 30) for r in range(1, 7)})
        assert compose_schedule(comp, ms, ctx)[0].prbs == pf.allocate(ms, ctx, 51).prbs


def test_round_budget_carry():
    # round 1 capped at 6 PRBs in total, round 2 gets the rest of the group's budget
    spec = CompositionSpec(FnRef("single", {"share": 10 / 51}), (GroupSpec((
        RoundSpec(FnRef("target_throughput", {"cap_mbps": 5}), FnRef("pf")),
        RoundSpec(FnRef("default"), FnRef("ft")),
    )),))
    ms = [ue(1, tbs=100, buf=550), ue(2, tbs=100, buf=10**6)]  # UE 1 needs 6 PRBs
    ctx = make_ctx([1, 2], r_ave={1: 1.0, 2: 50.0})  # UE 2 is over the cap in round 1
    alloc, trace = compose_schedule(spec.compile(), ms, ctx)
    assert trace.group_budgets == [10]
    assert trace.round_budgets == [[10, 4]]
    assert alloc.get(1) == 6 and alloc.get(2) == 4


def test_empty_group_budget_flows_to_leftover():
    spec = CompositionSpec(
        FnRef("by_burstiness", {"share": 0.8}),
        (GroupSpec((RoundSpec(FnRef("default"), FnRef("pf")),)),
         GroupSpec((RoundSpec(FnRef("default"), FnRef("pf")),))),
        LeftoverSpec(FnRef("default"), FnRef("pf")))
    ms = [ue(1, buf=10**6, five_qi=9)]
    alloc, trace = compose_schedule(spec.compile(), ms, make_ctx([1]))
    assert trace.group_budgets == [41, 10]
    assert trace.group_used == [0, 10]
    assert trace.leftover_budget == 41 and alloc.get(1) == 51


def test_leftover_respects_group_limits():
    spec = CompositionSpec(
        FnRef("single"), (GroupSpec((RoundSpec(FnRef("target_throughput", {"cap_mbps": 1}), FnRef("pf")),)),),
        LeftoverSpec(FnRef("default"), FnRef("pf"), respect_group_limits=True))
    ms = [ue(1, buf=10**6)]
    alloc, _ = compose_schedule(spec.compile(), ms, make_ctx([1], r_ave={1: 5.0}))
    assert alloc.total == 0
    loose = CompositionSpec(spec.grouping, spec.groups, LeftoverSpec(FnRef("default"), FnRef("pf")))
    alloc, _ = compose_schedule(loose.compile(), ms, make_ctx([1], r_ave={1: 5.0}))
    assert alloc.total == 51


def test_composition_errors_at_load_time():
    bad = CompositionSpec(FnRef("by_cqi", {"split_fraction": 0.5, "share_high": 0.7}),
                          (GroupSpec((RoundSpec(FnRef("nope"), FnRef("pf")),)),
                           GroupSpec((RoundSpec(FnRef("default"), FnRef("zzz")),))))
    with pytest.raises(ConfigError) as e:
        bad.compile()
    assert len(e.value.problems) == 2
    with pytest.raises(ConfigError):
        CompositionSpec(FnRef("single"), ()).compile()


YAML = textwrap.dedent("""\
    name: demo
    grouping: {name: by_cqi, params: {split_fraction: 0.5, share_high: 0.7}}
    groups:
      - rounds:
          - {limit: {name: target_throughput, params: {cap_mbps: 10}}, value: {name: vt_sh}}
      - rounds:
          - limit: {name: default}
            value: {name: nope}
    leftover: {limit: {name: default}, value: {name: pf}}
    """)


def test_yaml_error_reports_line_and_field():
    with pytest.raises(ConfigError) as e:
        load_composition(YAML)
    msg = str(e.value)
    assert "line 8" in msg and "groups[1].rounds[0].value" in msg and "nope" in msg


def test_yaml_roundtrip_valid(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text(YAML.replace("nope", "pf"))
    spec = load_composition(p)
    assert spec.name == "demo" and len(spec.groups) == 2
    spec.compile()


def test_yaml_syntax_error():
    with pytest.raises(ConfigError):
        load_composition("grouping: [unclosed")


def test_composition_from_dict_unknown_key():
    with pytest.raises(ConfigError):
        composition_from_dict({"grouping": {"name": "single"}, "groups": [], "extra": 1})


def test_composition_policy_deterministic():
    spec = load_composition(YAML.replace("nope", "pf"))
    ms = [ue(r, tbs=30 * r, buf=10**5, cqi=3 * r, five_qi=80 if r < 3 else 9) for r in range(1, 6)]
    outs = []
    for _ in range(2):
        pol = CompositionPolicy(spec)
        ctx = make_ctx(range(1, 6))
        seq = []
        for _ in range(5):
            a = pol.allocate(ms, ctx, 51)
            pol.observe(ms, {}, ctx)
            seq.append(a.prbs)
            assert a.total <= 51
        outs.append(seq)
    assert outs[0] == outs[1]
