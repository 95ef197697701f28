"""Plan files in the ``<time>: (<action> <args>) [<duration>]`` format read by VAL."""

from __future__ import annotations

import re
from pathlib import Path

from .search import Plan, PlanStep, SearchStats

_LINE = re.compile(r"^\s*([0-9.eE+-]+)\s*:\s*\(([^)]*)\)\s*(?:\[\s*([0-9.eE+-]+)\s*\])?\s*$")


def _fmt(t: float) -> str:
    text = f"{round(t, 9) + 0.0:.9f}".rstrip("0")
    return text + "0" if text.endswith(".") else text


def format_plan(plan: Plan, stats: SearchStats | None = None) -> str:
    lines = [f"{_fmt(step.time)}: ({step.name}) [0.0]" for step in plan.steps]
    lines.append(f"; makespan: {_fmt(plan.makespan)}")
    lines.append(f"; actions: {plan.actions}")
    lines.append(f"; metric: {plan.metric!r}")
    if stats is not None:
        lines.append(f"; expanded: {stats.expanded}")
        lines.append(f"; generated: {stats.generated}")
    return "\n".join(lines) + "\n"


def write_plan(path, plan: Plan, stats: SearchStats | None = None) -> Path:
    path = Path(path)
    path.write_text(format_plan(plan, stats), encoding="utf-8")
    return path


def parse_plan(text: str) -> Plan:
    """Read a plan file back; the comment block supplies makespan and metric."""
    steps = []
    makespan = 0.0
    metric = float("nan")
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith(";"):
            key, _, value = line[1:].partition(":")
            key = key.strip()
            if key == "makespan":
                makespan = float(value)
            elif key == "metric":
                metric = float(value)
            continue
        m = _LINE.match(line)
        if not m:
            raise ValueError(f"malformed plan line: {raw!r}")
        steps.append(PlanStep(float(m.group(1)), " ".join(m.group(2).split())))
    if steps:
        makespan = max(makespan, steps[-1].time)
    return Plan(tuple(steps), makespan, len(steps), metric, len(steps))
