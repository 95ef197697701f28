"""Throughput benchmark: nodes expanded per second with and without the precondition tree."""

from __future__ import annotations

import csv
import gc
import io
import statistics
from dataclasses import asdict, dataclass, field
from typing import Iterable, Optional

from . import corpus
from .grounding import GroundedProblem, ground
from .search import Engine, SearchLimits

BENCH_EXPANSIONS = 10_000
BENCH_REPS = 3
CSV_FIELDS = ("domain", "flag", "without", "with_", "percentage", "truncated", "expanded")


@dataclass
class BenchReport:
    """Median nodes/sec for one domain and one flag, off (``without``) and on (``with_``)."""

    domain: str
    flag: str
    without: float
    with_: float
    truncated: bool = False
    expanded: int = 0
    samples_without: list[float] = field(default_factory=list, repr=False)
    samples_with: list[float] = field(default_factory=list, repr=False)

    @property
    def percentage(self) -> float:
        if self.without == 0:
            return 0.0
        return (self.with_ - self.without) / self.without * 100.0

    def record(self) -> dict:
        row = {k: v for k, v in asdict(self).items() if not k.startswith("samples")}
        row["percentage"] = round(self.percentage, 2)
        row["without"] = round(self.without, 1)
        row["with_"] = round(self.with_, 1)
        return row


def _run_once(gp: GroundedProblem, use_tree: bool, expansions: int) -> tuple[float, int, str]:
    engine = Engine(gp, use_tree=use_tree)
    limits = SearchLimits(horizon=gp.horizon, timeout=None, max_expansions=expansions)
    gc.collect()
    enabled = gc.isenabled()
    gc.disable()
    try:
        result = engine.plan("bfs", limits=limits, goal_check=False)
    finally:
        if enabled:
            gc.enable()
    return result.stats.nodes_per_sec, result.stats.expanded, result.status


def measure(gp: GroundedProblem, domain: str = "", flag: str = "preconditiontree",
            expansions: int = BENCH_EXPANSIONS, reps: int = BENCH_REPS) -> BenchReport:
    """BFS with goal checking off until ``expansions`` nodes, ``reps`` times per setting.

    Runs alternate between the two settings so drift in machine load hits both
    equally. A report is marked truncated when the space ran out first.
    """
    if flag != "preconditiontree":
        raise ValueError(f"unsupported benchmark flag {flag!r}")
    off: list[float] = []
    on: list[float] = []
    truncated = False
    expanded = 0
    for _ in range(reps):
        for use_tree, sink in ((False, off), (True, on)):
            rate, expanded, status = _run_once(gp, use_tree, expansions)
            truncated = truncated or status != "limit"
            sink.append(rate)
    return BenchReport(domain, flag, statistics.median(off), statistics.median(on),
                       truncated, expanded, off, on)


def run(names: Iterable[str], dt: float = 1.0, expansions: int = BENCH_EXPANSIONS,
        reps: int = BENCH_REPS, synthetic_options: Optional[dict] = None) -> list[BenchReport]:
    reports = []
    for name in names:
        opts = (synthetic_options or {}) if name == corpus.SYNTHETIC else {}
        domain, problem = corpus.load(name, **opts)
        gp = ground(domain, problem, dt=dt)
        reports.append(measure(gp, name, expansions=expansions, reps=reps))
    return reports


def format_table(reports: list[BenchReport]) -> str:
    header = ("domain", "flag", "without", "with", "change")
    rows = [header]
    for r in reports:
        mark = " (truncated)" if r.truncated else ""
        rows.append((r.domain, r.flag, f"{r.without:.0f}", f"{r.with_:.0f}",
                     f"{r.percentage:+.1f}%{mark}"))
    widths = [max(len(row[i]) for row in rows) for i in range(len(header))]
    return "\n".join("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in rows)


def to_csv(reports: list[BenchReport]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    for r in reports:
        writer.writerow(r.record())
    return buf.getvalue()
