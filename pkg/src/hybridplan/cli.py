"""Command-line front end.

``hybridplan run DOMAIN PROBLEM`` plans and writes plan files;
``hybridplan bench`` measures throughput with and without the precondition tree;
``hybridplan generate`` writes a synthetic event-heavy domain.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from . import bench, corpus
from .attachments import (ORDERS, AttachmentError, AttachmentProtocolError,
                          AttachmentRegistry, SubprocessAttachment)
from .expressions import CompileError
from .grounding import GroundingError, dump, ground
from .heuristics import HeuristicError, get_heuristic
from .operators import OperatorError
from .pddl.parser import load
from .pddl.tokenizer import PDDLSyntaxError
from .planfile import write_plan
from .search import (ALGORITHMS, DEFAULT_CAPACITY, DEFAULT_TIMEOUT, Engine, SearchError,
                     SearchLimits)

log = logging.getLogger("hybridplan")

EXIT_PLAN, EXIT_NO_PLAN, EXIT_USAGE, EXIT_INTERNAL = 0, 1, 2, 3
USER_ERRORS = (PDDLSyntaxError, GroundingError, SearchError, OperatorError, HeuristicError,
               CompileError, AttachmentError, OSError)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


@dataclass
class RunConfig:
    domain: Path
    problem: Path
    algorithm: str = "bfs"
    dt: float = 1.0
    precision: Optional[int] = 3
    horizon: Optional[float] = None
    depth: Optional[int] = None
    timeout: float = DEFAULT_TIMEOUT
    anytime: bool = False
    capacity: int = DEFAULT_CAPACITY
    heuristic: Optional[int] = None
    preconditiontree: bool = False
    event_cascade: bool = False
    attachment_cmd: Optional[str] = None
    attachment_order: str = "before"
    output: Optional[Path] = None
    dump_grounded: bool = False

    def __post_init__(self):
        if not self.dt > 0:
            raise UsageError(f"--dt must be positive, got {self.dt}")
        if self.capacity < 1:
            raise UsageError(f"--plans must be at least 1, got {self.capacity}")
        if not self.timeout > 0:
            raise UsageError(f"--timeout must be positive, got {self.timeout}")
        if self.precision is not None and self.precision < 0:
            self.precision = None
        if self.algorithm in ("gbfs", "astar") and self.heuristic is None:
            raise UsageError(f"{self.algorithm} requires a heuristic; pass --heuristic N")
        for path in (self.domain, self.problem):
            if not path.is_file():
                raise UsageError(f"no such file: {path}")

    @property
    def plan_path(self) -> Path:
        return self.output or Path(f"{self.problem.stem}.plan")


def _build_parser() -> _Parser:
    parser = _Parser(prog="hybridplan", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="plan for a domain/problem pair")
    run.add_argument("domain", type=Path)
    run.add_argument("problem", type=Path)
    run.add_argument("--search", dest="algorithm", choices=ALGORITHMS, default="bfs")
    run.add_argument("--heuristic", type=int, default=None, metavar="N")
    run.add_argument("--dt", type=float, default=1.0, help="time step (default 1.0)")
    run.add_argument("--precision", type=int, default=3,
                     help="decimals kept in numeric fluents; negative disables rounding")
    run.add_argument("--horizon", type=float, default=None)
    run.add_argument("--depth-limit", dest="depth", type=int, default=None)
    run.add_argument("--timeout", type=float, default=DEFAULT_TIMEOUT)
    run.add_argument("--anytime", action="store_true")
    run.add_argument("--plans", dest="capacity", type=int, default=DEFAULT_CAPACITY,
                     help="plan-queue capacity for anytime search")
    run.add_argument("--preconditiontree", action="store_true")
    run.add_argument("--event-cascade", action="store_true")
    run.add_argument("--attachment-cmd", default=None)
    run.add_argument("--attachment-order", choices=ORDERS, default="before")
    run.add_argument("-o", "--output", type=Path, default=None)
    run.add_argument("--dump-grounded", action="store_true")

    b = sub.add_parser("bench", help="nodes/sec with the precondition tree off and on")
    b.add_argument("domains", nargs="*", default=None, metavar="NAME",
                   help=f"corpus entries (default: all of {', '.join(corpus.names())})")
    b.add_argument("--expansions", type=int, default=bench.BENCH_EXPANSIONS)
    b.add_argument("--reps", type=int, default=bench.BENCH_REPS)
    b.add_argument("--events", type=int, default=1000, help="synthetic domain size")
    b.add_argument("--share", type=float, default=0.7, help="synthetic prefix sharing")
    b.add_argument("--csv", type=Path, default=None)
    b.add_argument("--plot", type=Path, default=None)

    g = sub.add_parser("generate", help="write a synthetic event-heavy domain")
    g.add_argument("--events", type=int, default=1000)
    g.add_argument("--share", type=float, default=0.7)
    g.add_argument("--preconditions", type=int, default=7)
    g.add_argument("--out", type=Path, default=Path("."))
    return parser


def _config(ns: argparse.Namespace) -> RunConfig:
    fields = RunConfig.__dataclass_fields__
    return RunConfig(**{k: v for k, v in vars(ns).items() if k in fields})


def _plan_paths(base: Path, count: int) -> list[Path]:
    return [base if i == 0 else base.with_name(f"{base.name}.{i + 1}") for i in range(count)]


def cmd_run(cfg: RunConfig, out=None) -> int:
    out = out or sys.stdout
    wall_start = time.perf_counter()
    heuristic = get_heuristic(cfg.heuristic) if cfg.heuristic is not None else None
    domain, problem = load(cfg.domain, cfg.problem)
    for warning in domain.warnings:
        log.warning(warning)
    gp = ground(domain, problem, dt=cfg.dt, horizon=cfg.horizon, precision=cfg.precision)
    if cfg.dump_grounded:
        print(dump(gp), file=out)

    child = None
    attachments = None
    if cfg.attachment_cmd:
        child = SubprocessAttachment(cfg.attachment_cmd)
        attachments = AttachmentRegistry(gp).register(child.attachment())
    try:
        engine = Engine(gp, use_tree=cfg.preconditiontree, event_cascade=cfg.event_cascade,
                        attachments=attachments, attachment_order=cfg.attachment_order)
        limits = SearchLimits(horizon=cfg.horizon, depth=cfg.depth, timeout=cfg.timeout)

        def announce(plan):
            if cfg.anytime:
                print(f"; improved plan: metric {plan.metric!r}, makespan {plan.makespan}", file=out)

        result = engine.plan(cfg.algorithm, heuristic, limits, anytime=cfg.anytime,
                             capacity=cfg.capacity, on_plan=announce)
    finally:
        if child is not None:
            child.close()

    stats = result.stats
    plans = list(result.plans)
    written = [str(write_plan(path, plan, stats))
               for path, plan in zip(_plan_paths(cfg.plan_path, len(plans)), plans)]
    best = result.best
    summary = {
        "status": result.status,
        "solved": result.solved,
        "makespan": best.makespan if best is not None else None,
        "actions": best.actions if best is not None else None,
        "metric": best.metric if best is not None else None,
        "plans": len(plans),
        "expanded": stats.expanded,
        "generated": stats.generated,
        "nodes_per_sec": round(stats.nodes_per_sec, 3),
        "search_time": round(stats.search_time, 6),
        "wall_time": round(time.perf_counter() - wall_start, 6),
        "plan_files": written,
    }
    if best is not None:
        print(f"; plan found: {best.actions} actions, makespan {best.makespan}, "
              f"metric {best.metric!r} -> {written[0]}", file=out)
    else:
        print(f"; no plan found ({result.status})", file=out)
    print(f"; expanded {stats.expanded} nodes in {stats.search_time:.3f}s "
          f"({stats.nodes_per_sec:.0f} nodes/s)", file=out)
    print(json.dumps(summary, sort_keys=True), file=out)
    return EXIT_PLAN if result.solved else EXIT_NO_PLAN


def cmd_bench(ns: argparse.Namespace, out=None) -> int:
    out = out or sys.stdout
    names = ns.domains or corpus.names()
    if ns.expansions < 1 or ns.reps < 1:
        raise UsageError("--expansions and --reps must be positive")
    reports = bench.run(names, expansions=ns.expansions, reps=ns.reps,
                        synthetic_options={"events": ns.events, "share": ns.share})
    print(bench.format_table(reports), file=out)
    text = bench.to_csv(reports)
    if ns.csv:
        ns.csv.write_text(text, encoding="utf-8")
    else:
        print(text, end="", file=out)
    if ns.plot:
        from .plotting import throughput_chart
        print(f"; figure written to {throughput_chart(reports, ns.plot)}", file=out)
    return 0


def cmd_generate(ns: argparse.Namespace, out=None) -> int:
    out = out or sys.stdout
    try:
        dom, prob = corpus.synthetic_domain(ns.events, ns.share, ns.preconditions)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    ns.out.mkdir(parents=True, exist_ok=True)
    (ns.out / "domain.pddl").write_text(dom, encoding="utf-8")
    (ns.out / "problem.pddl").write_text(prob, encoding="utf-8")
    print(f"; wrote {ns.out / 'domain.pddl'} and {ns.out / 'problem.pddl'}", file=out)
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    try:
        ns = _build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        if ns.command == "run":
            return cmd_run(_config(ns))
        if ns.command == "bench":
            return cmd_bench(ns)
        return cmd_generate(ns)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except USER_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except AttachmentProtocolError as exc:
        print(f"attachment failure: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception:
        log.exception("internal error")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
