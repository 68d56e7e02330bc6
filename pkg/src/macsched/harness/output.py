"""Writing reports, summaries and comparison tables to disk."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from ..metrics.indices import similarity_rmse


def _write(path: Path, text: str) -> None:
    try:
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc


def similarity_tables(reports) -> dict[str, str]:
    """Per scenario, CSV of the RMSE between seed-averaged per-UE goodput vectors."""
    by_sc: dict[str, dict[str, list]] = {}
    for r in reports:
        by_sc.setdefault(r.scenario, {}).setdefault(r.policy, []).append(r.goodputs())
    out = {}
    for sc, pols in sorted(by_sc.items()):
        names, mat = similarity_rmse({p: np.mean(v, axis=0) for p, v in pols.items()})
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["policy", *names])
        for n, row in zip(names, mat):
            w.writerow([n, *(f"{x:.6f}" for x in row)])
        out[sc] = buf.getvalue()
    return out


def fairness_table(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["scenario", "policy", "seed", "jain", "gini", "any_starved"])
    for r in sorted(reports, key=lambda r: (r.scenario, r.policy, r.seed)):
        j, g = r.jain, r.gini
        w.writerow([r.scenario, r.policy, r.seed, "" if j is None else f"{j:.6f}",
                    "" if g is None else f"{g:.6f}", int(r.any_starved)])
    return buf.getvalue()


def emit_outputs(result, out_dir, formats=("json", "csv")) -> list[Path]:
    """Write one structured report and CSVs per run, plus batch tables.

    File names embed scenario, policy and seed. Output is a pure function of
    the reports, so re-emission is byte-identical.
    """
    reports = result.reports if hasattr(result, "reports") else list(result)
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create {out}: {exc.strerror}") from exc
    written = []
    for r in reports:
        if "json" in formats:
            p = out / f"{r.stem}.json"
            _write(p, r.to_json() + "\n")
            written.append(p)
        if "csv" in formats:
            for suffix, text in (("series", r.series_csv()), ("delays", r.delays_csv()),
                                 ("cdf", r.cdf_csv())):
                p = out / f"{r.stem}__{suffix}.csv"
                _write(p, text)
                written.append(p)
    p = out / "fairness.csv"
    _write(p, fairness_table(reports))
    written.append(p)
    for sc, text in similarity_tables(reports).items():
        p = out / f"similarity__{sc}.csv"
        _write(p, text)
        written.append(p)
    if hasattr(result, "summary"):
        p = out / "summary.json"
        _write(p, json.dumps(result.summary, sort_keys=True, indent=1) + "\n")
        written.append(p)
    return written
