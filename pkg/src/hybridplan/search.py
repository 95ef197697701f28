"""Forward search over the discretized state space.

Successors of a state are the applicable domain actions (duration 0) and,
in temporal domains, the time-passing action, which advances the clock by
one time step while running attachments, processes and events.
"""

from __future__ import annotations

import hashlib
import heapq
import itertools
import math
import threading
import time as _time
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional

from .attachments import ORDERS, AttachmentRegistry
from .expressions import EVAL_ERRORS, EvalStats, InvalidState, apply_effects, apply_effects_inplace
from .grounding import GroundedHappening, GroundedProblem
from .heuristics import Heuristic
from .ptree import Applicability
from .state import State

ALGORITHMS = ("bfs", "dfs", "gbfs", "astar")
DEFAULT_TIMEOUT = 1800.0
DEFAULT_CAPACITY = 10
CASCADE_LIMIT = 100
TIME_EPS = 1e-9


class SearchError(ValueError):
    pass


class _TimePassing:
    name = "time-passing"

    def __repr__(self) -> str:
        return "TIME_PASSING"


TIME_PASSING = _TimePassing()


@dataclass
class SearchLimits:
    horizon: Optional[float] = None
    depth: Optional[int] = None
    timeout: Optional[float] = DEFAULT_TIMEOUT
    max_expansions: Optional[int] = None

    def __post_init__(self):
        for name in ("horizon", "depth", "timeout", "max_expansions"):
            value = getattr(self, name)
            if value is not None and value <= 0 and not (name == "horizon" and value == 0):
                raise SearchError(f"{name} must be positive, got {value}")


class SearchNode:
    __slots__ = ("state", "parent", "achiever", "g", "h", "n_actions")

    def __init__(self, state: State, parent: Optional["SearchNode"], achiever, g: int,
                 h: float = 0.0, n_actions: int = 0):
        self.state = state
        self.parent = parent
        self.achiever = achiever
        self.g = g
        self.h = h
        self.n_actions = n_actions

    def path(self) -> list["SearchNode"]:
        out = []
        node = self
        while node is not None:
            out.append(node)
            node = node.parent
        out.reverse()
        return out


@dataclass(frozen=True)
class PlanStep:
    time: float
    name: str


@dataclass(frozen=True)
class Plan:
    steps: tuple[PlanStep, ...]
    makespan: float
    actions: int
    metric: float
    length: int
    state_key: tuple = field(compare=False, repr=False, default=())


class PlanQueue:
    """Best ``capacity`` plans ordered by metric (best first)."""

    def __init__(self, capacity: int = DEFAULT_CAPACITY, minimize: bool = True):
        if capacity < 1:
            raise SearchError("plan queue capacity must be at least 1")
        self.capacity = capacity
        self.minimize = minimize
        self._plans: list[tuple[float, int, Plan]] = []
        self._seen: set = set()
        self._seq = itertools.count()
        self.improvements: list[Plan] = []

    def _rank(self, metric: float) -> float:
        return metric if self.minimize else -metric

    def better(self, a: float, b: float) -> bool:
        return a < b if self.minimize else a > b

    def push(self, plan: Plan) -> bool:
        """Insert ``plan``; returns True when it became the new best plan."""
        key = (plan.state_key, plan.metric)
        if key in self._seen:
            return False
        rank = self._rank(plan.metric)
        if len(self._plans) >= self.capacity and rank >= self._plans[-1][0]:
            return False
        self._seen.add(key)
        improved = not self._plans or self.better(plan.metric, self._plans[0][2].metric)
        entry = (rank, next(self._seq), plan)
        self._plans.append(entry)
        self._plans.sort(key=lambda e: (e[0], e[1]))
        del self._plans[self.capacity:]
        if improved:
            self.improvements.append(plan)
        return improved

    @property
    def best(self) -> Optional[Plan]:
        return self._plans[0][2] if self._plans else None

    def __iter__(self) -> Iterator[Plan]:
        return (p for _, _, p in self._plans)

    def __len__(self) -> int:
        return len(self._plans)

    def __bool__(self) -> bool:
        return bool(self._plans)


class OpenList:
    """FIFO, LIFO or priority queue depending on the algorithm.

    Priorities are ``h`` for GBFS and ``g + h`` for A*; ties go to the node
    inserted first.
    """

    def __init__(self, algorithm: str):
        if algorithm not in ALGORITHMS:
            raise SearchError(f"unknown search algorithm {algorithm!r}; choose from {ALGORITHMS}")
        self.algorithm = algorithm
        self._seq = itertools.count()
        self._items: deque | list = deque() if algorithm == "bfs" else []

    def push(self, node: SearchNode, h: float = 0.0) -> int:
        seq = next(self._seq)
        if self.algorithm in ("bfs", "dfs"):
            self._items.append(node)
        else:
            if h != h or h == math.inf:
                h = math.inf
            key = h if self.algorithm == "gbfs" else node.g + h
            heapq.heappush(self._items, (key, seq, node))
        return seq

    def pop(self) -> SearchNode:
        if self.algorithm == "bfs":
            return self._items.popleft()
        if self.algorithm == "dfs":
            return self._items.pop()
        return heapq.heappop(self._items)[2]

    def __len__(self) -> int:
        return len(self._items)


@dataclass
class SearchStats:
    expanded: int = 0
    generated: int = 0
    invalid: int = 0
    duplicates: int = 0
    pruned_limits: int = 0
    rejected_metrics: int = 0
    search_time: float = 0.0
    expansion_hash: Optional[str] = None

    @property
    def nodes_per_sec(self) -> float:
        return self.expanded / self.search_time if self.search_time > 0 else 0.0


@dataclass
class SearchResult:
    plans: PlanQueue
    status: str
    stats: SearchStats
    eval_stats: EvalStats

    @property
    def solved(self) -> bool:
        return bool(self.plans)

    @property
    def best(self) -> Optional[Plan]:
        return self.plans.best


class Engine:
    """Transition function, time passing and the search loop for one problem."""

    def __init__(self, gp: GroundedProblem, *, use_tree: bool = False, event_cascade: bool = False,
                 attachments: AttachmentRegistry | None = None, attachment_order: str = "before",
                 trace: list | None = None):
        if attachment_order not in ORDERS:
            raise SearchError(f"attachment order must be one of {ORDERS}")
        self.gp = gp
        self.use_tree = use_tree
        self.event_cascade = event_cascade
        self.attachments = attachments
        self.attachment_order = attachment_order
        self.trace = trace
        self.eval_stats = EvalStats()
        self.invalid = 0
        self.action_app = Applicability(gp.actions, use_tree, self.eval_stats)
        self.event_app = Applicability(gp.events, use_tree, self.eval_stats)
        self.process_app = Applicability(gp.processes, use_tree, self.eval_stats)
        self._action_effects = [h.compiled_effects for h in gp.actions]
        self._event_effects = [h.compiled_effects for h in gp.events]
        self._process_effects = [h.compiled_effects for h in gp.processes]
        self._goal = tuple(c.fn for c in gp.goal)

    # -- semantics -----------------------------------------------------

    @property
    def _attach(self) -> bool:
        return self.attachments is not None and self.attachments.active

    def _make_state(self, s: State, bits: int, values, ticks: int) -> State:
        step = s.step + ticks
        return State(bits, tuple(values), step, step * self.gp.dt, s.depth + 1)

    def transition(self, s: State, h: GroundedHappening, d: float) -> State:
        """Apply ``h`` with duration ``d`` (0 or the time step)."""
        if d not in (0, 0.0, self.gp.dt):
            raise SearchError(f"duration must be 0 or {self.gp.dt}, got {d}")
        bits, values = apply_effects(h.compiled_effects, s.bits, s.values, d, self.gp.precision)
        return self._make_state(s, bits, values, 1 if d else 0)

    def _event_pass(self, bits: int, values, trace) -> tuple[int, list, bool]:
        fired = self.event_app(bits, values)
        if trace is not None:
            trace.append(("event-snapshot", bits, tuple(values)))
        for eid in fired:
            bits = apply_effects_inplace(self._event_effects[eid], bits, values, 0.0,
                                         self.gp.precision)
            if trace is not None:
                trace.append(("event", eid))
        return bits, values, bool(fired)

    def _events(self, bits: int, values, trace) -> tuple[int, list]:
        bits, values, fired = self._event_pass(bits, values, trace)
        if self.event_cascade:
            rounds = 1
            while fired:
                if rounds >= CASCADE_LIMIT:
                    raise InvalidState(f"events still firing after {CASCADE_LIMIT} passes")
                bits, values, fired = self._event_pass(bits, values, trace)
                rounds += 1
        return bits, values

    def apply_action(self, s: State, h: GroundedHappening) -> State:
        bits, values = apply_effects(self._action_effects[h.id], s.bits, s.values, 0.0,
                                     self.gp.precision)
        if not self.gp.temporal and self.gp.events:
            bits, values = self._events(bits, values, self.trace)
        return self._make_state(s, bits, values, 0)

    def time_passing(self, s: State) -> State:
        """Advance one time step: attachments, processes, then events."""
        gp = self.gp
        trace = self.trace
        dt, precision = gp.dt, gp.precision
        bits, values = s.bits, list(s.values)
        if trace is not None:
            trace.append(("tick", s.step))
        if self._attach and self.attachment_order == "before":
            values = self.attachments.invoke(values, dt, s.time, trace)
        for pid in self.process_app(bits, values):
            bits = apply_effects_inplace(self._process_effects[pid], bits, values, dt, precision)
            if trace is not None:
                trace.append(("process", pid))
        if self._attach and self.attachment_order == "between":
            values = self.attachments.invoke(values, dt, s.time, trace)
        bits, values = self._events(bits, values, trace)
        if self._attach and self.attachment_order == "after":
            values = self.attachments.invoke(values, dt, s.time, trace)
        return self._make_state(s, bits, values, 1)

    def can_pass_time(self, s: State, horizon: Optional[float]) -> bool:
        if not self.gp.temporal:
            return False
        return horizon is None or (s.step + 1) * self.gp.dt <= horizon + TIME_EPS

    def successors(self, s: State, horizon: Optional[float] = None) -> Iterator[tuple[object, State]]:
        """Yield ``(achiever, state)``: actions in id order, then time passing."""
        actions = self.gp.actions
        for aid in self.action_app(s.bits, s.values):
            try:
                yield actions[aid], self.apply_action(s, actions[aid])
            except InvalidState:
                self.invalid += 1
        if self.can_pass_time(s, horizon):
            try:
                yield TIME_PASSING, self.time_passing(s)
            except InvalidState:
                self.invalid += 1

    def is_goal(self, s: State) -> bool:
        b, v = s.bits, s.values
        try:
            for fn in self._goal:
                if not fn(b, v):
                    return False
        except EVAL_ERRORS:
            self.eval_stats.condition_errors += 1
            return False
        return True

    def is_valid(self, s: State, limits: SearchLimits, visited=()) -> bool:
        if limits.horizon is not None and s.time > limits.horizon + TIME_EPS:
            return False
        if limits.depth is not None and s.depth > limits.depth:
            return False
        if not s.finite():
            return False
        return s.key not in visited

    def metric_value(self, s: State, n_actions: int) -> float:
        """Objective value of a goal state; makespan when no metric is given."""
        gp = self.gp
        if gp.metric_expr is None:
            return s.time
        return gp.metric_expr.fn(s.bits, s.values, gp.dt, s.time, n_actions)

    # -- search ----------------------------------------------------------

    def extract_plan(self, node: SearchNode, metric: float) -> Plan:
        steps = []
        length = 0
        for n in node.path()[1:]:
            length += 1
            if n.achiever is not TIME_PASSING:
                steps.append(PlanStep(n.parent.state.time, n.achiever.name))
        return Plan(tuple(steps), node.state.time, node.n_actions, metric, length, node.state.key)

    def plan(self, algorithm: str = "bfs", heuristic: Heuristic | None = None,
             limits: SearchLimits | None = None, anytime: bool = False,
             capacity: int = DEFAULT_CAPACITY, goal_check: bool = True,
             record_order: bool = False, on_plan: Callable[[Plan], None] | None = None,
             stop: threading.Event | None = None,
             on_expand: Callable[[SearchNode], None] | None = None) -> SearchResult:
        """Run the search; returns every goal plan kept in the ranked queue."""
        limits = limits or SearchLimits(horizon=self.gp.horizon)
        if algorithm in ("gbfs", "astar") and heuristic is None:
            raise SearchError("GBFS and A* require a heuristic; pass --heuristic")
        self.gp.registry.freeze()
        minimize = self.gp.metric is None or self.gp.metric.minimize
        queue = PlanQueue(capacity, minimize)
        stats = SearchStats()
        gp = self.gp
        needs_h = algorithm in ("gbfs", "astar")
        hasher = hashlib.sha256() if record_order else None

        def h_of(state: State) -> float:
            if not needs_h:
                return 0.0
            try:
                value = float(heuristic(state, gp))
            except EVAL_ERRORS:
                return math.inf
            return value if math.isfinite(value) else math.inf

        open_list = OpenList(algorithm)
        root = SearchNode(gp.init, None, None, 0, h_of(gp.init), 0)
        visited = {gp.init.key}
        open_list.push(root, root.h)
        status = "exhausted"
        start = _time.perf_counter()
        deadline = start + limits.timeout if limits.timeout else None
        horizon = limits.horizon
        while open_list:
            if (deadline is not None and _time.perf_counter() > deadline) or (stop is not None and stop.is_set()):
                status = "timeout"
                break
            node = open_list.pop()
            s = node.state
            stats.expanded += 1
            if hasher is not None:
                hasher.update(repr(s.key).encode())
            if on_expand is not None:
                on_expand(node)
            if goal_check and self.is_goal(s):
                try:
                    metric = float(self.metric_value(s, node.n_actions))
                except EVAL_ERRORS:
                    metric = math.nan
                if math.isfinite(metric):
                    plan = self.extract_plan(node, metric)
                    if queue.push(plan) and on_plan is not None:
                        on_plan(plan)
                else:
                    stats.rejected_metrics += 1
                if not anytime and queue:
                    status = "goal"
                    break
            if limits.max_expansions is not None and stats.expanded >= limits.max_expansions:
                status = "limit"
                break
            for achiever, child in self.successors(s, horizon):
                stats.generated += 1
                if not self.is_valid(child, limits, visited):
                    if child.key in visited:
                        stats.duplicates += 1
                    else:
                        stats.pruned_limits += 1
                    continue
                visited.add(child.key)
                n_actions = node.n_actions if achiever is TIME_PASSING else node.n_actions + 1
                h = h_of(child)
                # g counts domain actions only; time passing is free
                open_list.push(SearchNode(child, node, achiever, n_actions, h, n_actions), h)
        stats.search_time = _time.perf_counter() - start
        stats.invalid = self.invalid
        if hasher is not None:
            stats.expansion_hash = hasher.hexdigest()
        return SearchResult(queue, status, stats, self.eval_stats)


def replay(engine: Engine, plan: Plan) -> list[State]:
    """Re-execute ``plan`` from the initial state, inserting time passing.

    Actions stamped with time ``t`` are applied, in order, once the clock
    reaches ``t``; afterwards the clock runs on to the plan's makespan.
    """
    gp = engine.gp
    by_name = {h.name: h for h in gp.actions}
    s = gp.init
    states = [s]
    for step in plan.steps:
        while s.time < step.time - TIME_EPS:
            s = engine.time_passing(s)
            states.append(s)
        h = by_name.get(step.name)
        if h is None:
            raise SearchError(f"plan names unknown action ({step.name})")
        if not all(c.fn(s.bits, s.values) for c in h.conditions):
            raise SearchError(f"action ({step.name}) not applicable at t={step.time}")
        s = engine.apply_action(s, h)
        states.append(s)
    while s.time < plan.makespan - TIME_EPS:
        s = engine.time_passing(s)
        states.append(s)
    return states
