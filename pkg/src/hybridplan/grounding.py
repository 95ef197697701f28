"""Grounding of happening schemas over problem objects."""

from __future__ import annotations

import itertools
import math
import threading
from dataclasses import dataclass, field
from typing import Optional

from .expressions import CompiledEffects, CompiledExpr, Compiler, Tables, compile_effects
from .operators import DEFAULT_REGISTRY, OperatorRegistry
from .pddl.printer import to_pddl
from .pddl.syntax import (
    And, AtomRef, Comparison, DomainModel, Equals, Expr, FluentRef, Imply, Metric, Not,
    NumericEffect, OpApp, Or, ProblemModel, PropEffect,
)
from .state import State

DEFAULT_PRECISION = 3


class GroundingError(ValueError):
    pass


@dataclass(eq=False)
class GroundedHappening:
    """A fully instantiated action, event or process.

    Conditions and effects are compiled on first use and cached here.
    """

    id: int
    kind: str
    schema: str
    args: tuple[str, ...]
    preconditions: tuple[Expr, ...]
    effects: tuple
    compiler: Compiler = field(repr=False)
    _conditions: Optional[tuple[CompiledExpr, ...]] = field(default=None, repr=False)
    _effects: Optional[CompiledEffects] = field(default=None, repr=False)
    _latch: threading.Lock = field(default_factory=threading.Lock, repr=False)

    @property
    def name(self) -> str:
        return " ".join((self.schema, *self.args))

    @property
    def duration_role(self) -> str:
        return "dt" if self.kind == "process" else "instant"

    @property
    def conditions(self) -> tuple[CompiledExpr, ...]:
        if self._conditions is None:
            with self._latch:
                if self._conditions is None:
                    self._conditions = tuple(self.compiler.compile(c) for c in self.preconditions)
        return self._conditions

    @property
    def compiled_effects(self) -> CompiledEffects:
        if self._effects is None:
            with self._latch:
                if self._effects is None:
                    self._effects = compile_effects(self.effects, self.compiler)
        return self._effects

    def condition_keys(self) -> list[str]:
        return [to_pddl(c) for c in self.preconditions]


@dataclass(eq=False)
class GroundedProblem:
    domain: DomainModel
    problem: ProblemModel
    actions: list[GroundedHappening]
    events: list[GroundedHappening]
    processes: list[GroundedHappening]
    tables: Tables
    init: State
    goal: tuple[CompiledExpr, ...]
    metric: Optional[Metric]
    metric_expr: Optional[CompiledExpr]
    dt: float
    horizon: Optional[float]
    precision: Optional[int]
    compiler: Compiler
    pruned: int = 0

    @property
    def temporal(self) -> bool:
        return self.domain.temporal

    @property
    def semantic_attachment(self) -> bool:
        return self.domain.semantic_attachment

    @property
    def requirements(self) -> tuple[str, ...]:
        return self.domain.requirements

    @property
    def registry(self) -> OperatorRegistry:
        return self.compiler.registry

    @property
    def variable_names(self) -> list[str]:
        return [to_pddl(f) for f in self.tables.variables]

    def slot(self, name: str) -> int:
        """Vector slot of a fluent written as ``(f a b)`` or ``f``."""
        return self.tables.slot(fluent_from_name(name))

    def happenings(self, kind: str) -> list[GroundedHappening]:
        return {"action": self.actions, "event": self.events, "process": self.processes}[kind]

    def value(self, state: State, name: str) -> float:
        return state.values[self.slot(name)]

    def holds(self, state: State, atom: str) -> bool:
        ref = atom_from_name(atom)
        return bool(state.bits >> self.tables.bit(ref) & 1)


def _split_name(name: str) -> tuple[str, tuple[str, ...]]:
    parts = name.strip().strip("()").split()
    if not parts:
        raise GroundingError(f"empty symbol name {name!r}")
    return parts[0], tuple(parts[1:])


def fluent_from_name(name: str) -> FluentRef:
    head, args = _split_name(name)
    return FluentRef(head, args)


def atom_from_name(name: str) -> AtomRef:
    head, args = _split_name(name)
    return AtomRef(head, args)


# -- substitution ----------------------------------------------------------

def substitute(node, binding: dict[str, str]):
    """Replace ``?variables`` in ``node`` according to ``binding``."""
    if isinstance(node, (AtomRef, FluentRef)):
        if not node.args:
            return node
        return type(node)(node.name, tuple(binding.get(a, a) for a in node.args))
    if isinstance(node, OpApp):
        return OpApp(node.op, tuple(substitute(o, binding) for o in node.operands))
    if isinstance(node, Comparison):
        return Comparison(node.op, substitute(node.left, binding), substitute(node.right, binding))
    if isinstance(node, Equals):
        return Equals(binding.get(node.left, node.left), binding.get(node.right, node.right))
    if isinstance(node, Not):
        return Not(substitute(node.arg, binding))
    if isinstance(node, And):
        return And(tuple(substitute(a, binding) for a in node.args))
    if isinstance(node, Or):
        return Or(tuple(substitute(a, binding) for a in node.args))
    if isinstance(node, Imply):
        return Imply(substitute(node.left, binding), substitute(node.right, binding))
    if isinstance(node, NumericEffect):
        return NumericEffect(node.kind, substitute(node.target, binding), substitute(node.value, binding))
    if isinstance(node, PropEffect):
        return PropEffect(substitute(node.atom, binding), node.add)
    return node


def flatten_conjunction(expr: Optional[Expr]) -> list[Expr]:
    if expr is None:
        return []
    if isinstance(expr, And):
        out: list[Expr] = []
        for a in expr.args:
            out.extend(flatten_conjunction(a))
        return out
    return [expr]


def _static_truth(cond: Expr) -> Optional[bool]:
    if isinstance(cond, Equals):
        return cond.left == cond.right
    if isinstance(cond, Not) and isinstance(cond.arg, Equals):
        return cond.arg.left != cond.arg.right
    return None


def normalize_conditions(conditions: list[Expr]) -> Optional[list[Expr]]:
    """Resolve term equalities, drop duplicates and sort by printed form.

    Returns ``None`` when a condition is statically false.
    """
    kept: dict[str, Expr] = {}
    for c in conditions:
        truth = _static_truth(c)
        if truth is False:
            return None
        if truth is None:
            kept.setdefault(to_pddl(c), c)
    return [kept[k] for k in sorted(kept)]


def _symbols(node, atoms: set, fluents: set) -> None:
    if isinstance(node, AtomRef):
        atoms.add(node)
    elif isinstance(node, FluentRef):
        fluents.add(node)
    elif isinstance(node, OpApp):
        for o in node.operands:
            _symbols(o, atoms, fluents)
    elif isinstance(node, Comparison):
        _symbols(node.left, atoms, fluents)
        _symbols(node.right, atoms, fluents)
    elif isinstance(node, Not):
        _symbols(node.arg, atoms, fluents)
    elif isinstance(node, (And, Or)):
        for a in node.args:
            _symbols(a, atoms, fluents)
    elif isinstance(node, Imply):
        _symbols(node.left, atoms, fluents)
        _symbols(node.right, atoms, fluents)
    elif isinstance(node, NumericEffect):
        fluents.add(node.target)
        _symbols(node.value, atoms, fluents)
    elif isinstance(node, PropEffect):
        atoms.add(node.atom)


@dataclass
class _Instance:
    kind: str
    schema: str
    args: tuple[str, ...]
    preconditions: list[Expr]
    effects: tuple


def objects_of_type(domain: DomainModel, problem: ProblemModel, typ: str) -> list[str]:
    pool = {**domain.constants, **problem.objects}
    return sorted(o for o, t in pool.items() if domain.is_subtype(t, typ))


def instantiate(domain: DomainModel, problem: ProblemModel) -> list[_Instance]:
    """Every type-compatible binding of every schema, in schema order."""
    out = []
    for schema in domain.happenings:
        names = [v for v, _ in schema.parameters]
        domains = [objects_of_type(domain, problem, t) for _, t in schema.parameters]
        base_pre = flatten_conjunction(schema.precondition)
        for combo in itertools.product(*domains):
            binding = dict(zip(names, combo))
            pre = normalize_conditions([substitute(c, binding) for c in base_pre])
            if pre is None:
                continue
            effects = tuple(substitute(e, binding) for e in schema.effects)
            out.append(_Instance(schema.kind, schema.name, combo, pre, effects))
    return out


def _positive_atoms(conditions: list[Expr]) -> list[AtomRef]:
    return [c for c in conditions if isinstance(c, AtomRef)]


def prune_static(instances: list[_Instance], init_atoms: set[AtomRef]) -> list[_Instance]:
    """Drop instances needing an atom that no surviving happening can make true."""
    current = instances
    while True:
        achievable = set(init_atoms)
        for inst in current:
            achievable.update(e.atom for e in inst.effects if isinstance(e, PropEffect) and e.add)
        kept = [i for i in current if all(a in achievable for a in _positive_atoms(i.preconditions))]
        if len(kept) == len(current):
            return kept
        current = kept


def ground(domain: DomainModel, problem: ProblemModel, dt: float = 1.0,
           horizon: Optional[float] = None, precision: Optional[int] = DEFAULT_PRECISION,
           registry: OperatorRegistry | None = None, prune: bool = True) -> GroundedProblem:
    """Instantiate ``domain`` over ``problem`` and build the initial state."""
    if domain.temporal and not (dt > 0 and math.isfinite(dt)):
        raise GroundingError(f"time step must be positive in temporal domains, got {dt}")
    if horizon is not None and horizon < 0:
        raise GroundingError(f"horizon must be non-negative, got {horizon}")
    registry = registry or DEFAULT_REGISTRY
    instances = instantiate(domain, problem)
    total = len(instances)
    if prune:
        instances = prune_static(instances, set(problem.init_atoms))

    atoms: set[AtomRef] = set(problem.init_atoms)
    fluents: set[FluentRef] = set()
    for inst in instances:
        for node in (*inst.preconditions, *inst.effects):
            _symbols(node, atoms, fluents)
    goal_conditions = normalize_conditions(flatten_conjunction(problem.goal))
    if goal_conditions is None:
        raise GroundingError("goal is statically false")
    for node in goal_conditions:
        _symbols(node, atoms, fluents)
    if problem.metric is not None:
        _symbols(problem.metric.objective, atoms, fluents)

    initialized = dict(problem.init_values)
    missing = sorted(to_pddl(f) for f in fluents if f not in initialized)
    if missing:
        raise GroundingError(f"fluent {missing[0]} is referenced but never initialized"
                             + (f" (and {len(missing) - 1} more)" if len(missing) > 1 else ""))

    tables = Tables()
    for i, ref in enumerate(sorted(initialized, key=to_pddl)):
        tables.variables[ref] = i
    for i, ref in enumerate(sorted(atoms, key=to_pddl)):
        tables.propositions[ref] = i

    compiler = Compiler(tables, registry)
    grouped: dict[str, list[GroundedHappening]] = {"action": [], "event": [], "process": []}
    for inst in instances:
        bucket = grouped[inst.kind]
        bucket.append(GroundedHappening(
            id=len(bucket), kind=inst.kind, schema=inst.schema, args=inst.args,
            preconditions=tuple(inst.preconditions), effects=inst.effects, compiler=compiler,
        ))

    bits = 0
    for atom in problem.init_atoms:
        bits |= 1 << tables.propositions[atom]
    values = tuple(initialized[ref] for ref in tables.variables)
    init = State(bits, values, 0, 0.0, 0)

    metric_expr = compiler.compile(problem.metric.objective) if problem.metric else None
    return GroundedProblem(
        domain=domain, problem=problem,
        actions=grouped["action"], events=grouped["event"], processes=grouped["process"],
        tables=tables, init=init,
        goal=tuple(compiler.compile(c) for c in goal_conditions),
        metric=problem.metric, metric_expr=metric_expr,
        dt=dt if domain.temporal else 0.0,
        horizon=horizon, precision=precision, compiler=compiler,
        pruned=total - len(instances),
    )


def grounded_counts(gp: GroundedProblem) -> dict[str, tuple[int, float]]:
    """Happening counts with mean precondition counts, as tabulated in benchmarks.

    In temporal domains the action count includes the time-passing action;
    the mean is taken over domain actions only.
    """

    def mean(hs):
        return sum(len(h.preconditions) for h in hs) / len(hs) if hs else 0.0

    extra = 1 if gp.temporal else 0
    return {
        "actions": (len(gp.actions) + extra, mean(gp.actions)),
        "events": (len(gp.events), mean(gp.events)),
        "processes": (len(gp.processes), mean(gp.processes)),
    }


def dump(gp: GroundedProblem) -> str:
    """Human-readable listing of the grounded model."""
    lines = [f"; domain {gp.domain.name}, problem {gp.problem.name}",
             f"; dt={gp.dt} horizon={gp.horizon} precision={gp.precision}", "; variables"]
    lines += [f";   [{slot}] {to_pddl(ref)} = {gp.init.values[slot]}"
              for ref, slot in gp.tables.variables.items()]
    lines.append("; propositions")
    lines += [f";   [{bit}] {to_pddl(ref)}{' *' if gp.init.bits >> bit & 1 else ''}"
              for ref, bit in gp.tables.propositions.items()]
    for kind in ("action", "event", "process"):
        for h in gp.happenings(kind):
            lines.append(f"{kind} {h.id}: ({h.name})")
            lines += [f"  pre {k}" for k in h.condition_keys()]
            lines += [f"  eff {to_pddl(e)}" for e in h.effects]
    lines.append("goal " + " ".join(c.key for c in gp.goal))
    return "\n".join(lines) + "\n"
