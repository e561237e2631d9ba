"""Aggregation of results files into summary tables and learning curves."""

from __future__ import annotations

import csv
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import EmptyResults
from .experiment import RESULT_COLUMNS

FINAL_WINDOW = 3


@dataclass(frozen=True)
class SummaryRow:
    experiment_id: str
    region: str
    n_seeds: int
    mean: float
    sd: float


def _result_files(path: Path) -> list[Path]:
    path = Path(path)
    if path.is_file():
        return [path]
    found = []
    for p in sorted(path.glob("*.csv")):
        with open(p, newline="", encoding="utf-8") as fh:
            if next(csv.reader(fh), None) == RESULT_COLUMNS:
                found.append(p)
    return found


def read_results(path: str | Path) -> list[dict]:
    """All result rows under ``path`` (a results file or a directory of them)."""
    rows = []
    for p in _result_files(Path(path)):
        with open(p, newline="", encoding="utf-8") as fh:
            rows.extend(csv.DictReader(fh))
    if not rows:
        raise EmptyResults(f"no result rows found under {path}")
    return rows


def _per_seed_step(rows: list[dict]) -> dict[tuple[str, str], dict[int, dict[int, list[float]]]]:
    """(experiment, region) -> seed -> step -> returns."""
    out: dict = defaultdict(lambda: defaultdict(lambda: defaultdict(list)))
    for r in rows:
        out[(r["experiment_id"], r["region"])][int(r["seed"])][int(r["step"])].append(float(r["episode_return"]))
    return out


def _mean_sd(values: list[float]) -> tuple[float, float]:
    arr = np.asarray(values, dtype=float)
    sd = float(arr.std(ddof=1)) if len(arr) > 1 else 0.0
    return float(arr.mean()), sd


def summarize_rows(rows: list[dict], window: int = FINAL_WINDOW) -> list[SummaryRow]:
    """Mean and sample sd across seeds of each seed's final-window mean return."""
    if not rows:
        raise EmptyResults("no result rows to summarize")
    table = []
    for (exp, region), seeds in sorted(_per_seed_step(rows).items()):
        finals = []
        for steps in seeds.values():
            last = sorted(steps)[-window:]
            finals.append(float(np.mean([x for s in last for x in steps[s]])))
        mean, sd = _mean_sd(finals)
        table.append(SummaryRow(exp, region, len(finals), mean, sd))
    return table


def write_summary(table: list[SummaryRow], target: str | Path) -> None:
    with open(target, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["experiment_id", "region", "n_seeds", "mean", "sd"])
        for r in table:
            w.writerow([r.experiment_id, r.region, r.n_seeds, repr(r.mean), repr(r.sd)])


def summarize(path: str | Path, out: str | Path | None = None, window: int = FINAL_WINDOW) -> list[SummaryRow]:
    """Summarize results under ``path``; writes ``summary.csv`` next to them by default."""
    table = summarize_rows(read_results(path), window)
    path = Path(path)
    target = Path(out) if out is not None else (path if path.is_dir() else path.parent) / "summary.csv"
    target.parent.mkdir(parents=True, exist_ok=True)
    write_summary(table, target)
    return table


def format_summary(table: list[SummaryRow]) -> str:
    width = max([len(r.experiment_id) for r in table] + [len("experiment")])
    lines = [f"{'experiment':<{width}}  {'region':<27} seeds  {'mean':>12}  {'sd':>10}"]
    for r in table:
        lines.append(f"{r.experiment_id:<{width}}  {r.region:<27} {r.n_seeds:>5}  {r.mean:>12.3f}  {r.sd:>10.3f}")
    return "\n".join(lines)


def learning_curves(rows: list[dict]) -> dict[str, list[tuple[str, int, float, float, int]]]:
    """Per experiment: ``(region, step, mean, sd, n_seeds)`` rows, steps increasing."""
    curves: dict[str, list] = defaultdict(list)
    for (exp, region), seeds in sorted(_per_seed_step(rows).items()):
        steps = sorted({s for per_seed in seeds.values() for s in per_seed})
        for step in steps:
            vals = [float(np.mean(per_seed[step])) for per_seed in seeds.values() if step in per_seed]
            mean, sd = _mean_sd(vals)
            curves[exp].append((region, step, mean, sd, len(vals)))
    return dict(curves)
