"""Command line entry point: ``macsched run|profile|list|validate``.

Exit codes: 0 success, 1 configuration error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import yaml

from ..ibs import GROUPINGS, LIMITS, SELECTORS, value_names
from ..model import ConfigError
from ..policies import POLICIES, make_policy
from ..sim.scenario import PRESET_NAMES, load_scenario
from .experiment import ExperimentPlan, PolicyRef, run_experiment
from .output import emit_outputs
from .timing import CUTOFF_US, first_exceeding, profile_timing

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


def parse_seeds(text: str) -> tuple[int, ...]:
    """``"1-10"``, ``"1,3,5"`` or a mix of both."""
    out: list[int] = []
    for part in filter(None, text.split(",")):
        a, sep, b = part.partition("-")
        try:
            out.extend(range(int(a), int(b) + 1) if sep else [int(a)])
        except ValueError:
            raise ConfigError(f"--seeds: cannot parse {part!r}") from None
    if not out:
        raise ConfigError("--seeds: empty")
    return tuple(out)


def plan_from_args(args) -> ExperimentPlan:
    data = {}
    if args.plan:
        p = Path(args.plan)
        if not p.exists():
            raise ConfigError(f"--plan: no such file {p}")
        data = yaml.safe_load(p.read_text()) or {}
    scenarios = args.scenario or data.get("scenarios") or []
    refs = [PolicyRef.parse(s) for s in args.policy or []]
    refs += [PolicyRef.from_composition(c) for c in args.composition or []]
    if not refs:
        for p in data.get("policies") or []:
            refs.append(PolicyRef.parse(p) if isinstance(p, str)
                        else PolicyRef(p["name"], dict(p.get("params") or {})))
        refs += [PolicyRef.from_composition(c) for c in data.get("compositions") or []]
    seeds = parse_seeds(args.seeds) if args.seeds else tuple(data.get("seeds") or ())
    out = args.out or data.get("out")
    return ExperimentPlan(
        scenarios=tuple(scenarios), policies=tuple(refs), seeds=seeds,
        repetitions=int(data.get("repetitions", 10)),
        duration_s=args.duration if args.duration is not None else data.get("duration_s"),
        out_dir=Path(out) if out else None, timing=args.timing or bool(data.get("timing")),
        workers=args.workers or int(data.get("workers", 1)),
        check_invariants=args.check)


def cmd_run(args) -> int:
    plan = plan_from_args(args)
    plan.configs()  # fail fast before any run
    result = run_experiment(plan)
    for row in result.summary:
        d = row["pooled_delay_ms"]
        jain = "-" if row["mean_jain"] is None else f"{row['mean_jain']:.3f}"
        p95 = "-" if d["p95"] is None else f"{d['p95']:.2f}"
        print(f"{row['scenario']:12s} {row['policy']:28s} runs={row['runs']:<3d} "
              f"jain={jain} starved={row['starvation_rate']:.2f} p95_ms={p95}")
    bad = [r for r in result.reports if r.violations]
    for r in bad:
        print(f"{r.stem}: {len(r.violations)} invariant violations, first: {r.violations[0]}",
              file=sys.stderr)
    if plan.out_dir is not None:
        print(f"wrote outputs to {plan.out_dir}")
    return EXIT_RUNTIME if bad else EXIT_OK


def cmd_profile(args) -> int:
    names = args.policy or sorted(POLICIES)
    policies = {n: make_policy(n) for n in names}
    rows = []
    for n in names:
        prof = [profile_timing(policies[n], u, args.trials, args.seed) for u in args.ues]
        for p in prof:
            rows.append({"policy": n, **p})
            print(f"{n:14s} ues={p['ue_count']:<5d} p50={p['p50']:9.1f}us "
                  f"p99={p['p99']:9.1f}us max={p['max']:9.1f}us")
        lim = first_exceeding(prof, args.cutoff)
        if lim is not None:
            print(f"{n:14s} first exceeds {args.cutoff:.0f}us at {lim} UEs")
    if args.out:
        Path(args.out).write_text(json.dumps(rows, indent=1, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_list(args) -> int:
    tables = {
        "policies": sorted(POLICIES), "groupings": sorted(GROUPINGS), "limits": sorted(LIMITS),
        "values": value_names(), "selectors": sorted(SELECTORS), "presets": list(PRESET_NAMES),
    }
    which = [args.what] if args.what else list(tables)
    for k in which:
        print(f"{k}: {' '.join(tables[k])}")
    return EXIT_OK


def cmd_validate(args) -> int:
    from ..sim.scenario import load_composition_ref
    errors = 0
    for s in args.scenario or []:
        try:
            load_scenario(s)
            print(f"{s}: ok")
        except ConfigError as exc:
            errors += 1
            for p in exc.problems:
                print(p, file=sys.stderr)
    for c in args.composition or []:
        try:
            load_composition_ref(c).compile()
            print(f"{c}: ok")
        except ConfigError as exc:
            errors += 1
            for p in exc.problems:
                print(f"{c}: {p}", file=sys.stderr)
    return EXIT_CONFIG if errors else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="macsched", description="Downlink MAC scheduling simulator.")
    sub = ap.add_subparsers(dest="cmd", required=True)

    r = sub.add_parser("run", help="run scenarios under one or more policies")
    r.add_argument("--scenario", action="append", help="preset name or YAML file (repeatable)")
    r.add_argument("--policy", action="append", help="name or name:key=val,... (repeatable)")
    r.add_argument("--composition", action="append", help="composition YAML or preset name")
    r.add_argument("--plan", help="YAML experiment plan")
    r.add_argument("--seeds", help="e.g. 1-10 or 1,2,5")
    r.add_argument("--duration", type=float, help="override run length in seconds")
    r.add_argument("--out", help="output directory")
    r.add_argument("--workers", type=int, default=0)
    r.add_argument("--timing", action="store_true", help="record per-slot allocate time")
    r.add_argument("--check", action="store_true", help="check invariants every slot")
    r.set_defaults(func=cmd_run)

    p = sub.add_parser("profile", help="time policy.allocate on synthetic snapshots")
    p.add_argument("--policy", action="append")
    p.add_argument("--ues", type=int, nargs="+", default=[5, 20, 50, 100])
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cutoff", type=float, default=CUTOFF_US)
    p.add_argument("--out")
    p.set_defaults(func=cmd_profile)

    ls = sub.add_parser("list", help="list registered components")
    ls.add_argument("what", nargs="?",
                    choices=["policies", "groupings", "limits", "values", "selectors", "presets"])
    ls.set_defaults(func=cmd_list)

    v = sub.add_parser("validate", help="check scenario or composition files")
    v.add_argument("--scenario", action="append")
    v.add_argument("--composition", action="append")
    v.set_defaults(func=cmd_validate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        for p in exc.problems:
            print(f"config error: {p}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
