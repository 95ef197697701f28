"""Small builders shared by the test modules."""

from __future__ import annotations

from pathlib import Path

from hybridplan import ground
from hybridplan.pddl.parser import load, parse_domain, parse_problem
from hybridplan.state import State

DATA = Path(__file__).parent / "data"


def data_pair(stem: str) -> tuple[Path, Path]:
    return DATA / f"{stem}_domain.pddl", DATA / f"{stem}_problem.pddl"


def grounded(stem: str, registry=None, **kw):
    domain, problem = load(*data_pair(stem), registry=registry)
    return ground(domain, problem, registry=registry, **kw)


def mini(functions=(), predicates=(), precondition="", effects="", kind="action",
         requirements=":fluents :time", init=None, registry=None, **kw):
    """Ground a one-happening domain; ``init`` maps fluent names to values."""
    init = init or {}
    preds = " ".join(f"({p})" for p in predicates)
    funcs = " ".join(f"({f})" for f in functions)
    pre = f":precondition (and {precondition})" if precondition else ""
    eff = f":effect (and {effects})" if effects else ""
    dom = (f"(define (domain mini) (:requirements {requirements})"
           f" (:predicates {preds}) (:functions {funcs})"
           f" (:{kind} h :parameters () {pre} {eff}))")
    facts = " ".join(f"(= ({f}) {init.get(f, 0)})" for f in functions)
    prob = f"(define (problem p) (:domain mini) (:init {facts}) (:goal (and)))"
    domain = parse_domain(dom, registry)
    problem = parse_problem(prob, domain, registry)
    return ground(domain, problem, registry=registry, prune=False, **kw)


def state_of(gp, atoms=(), base: State | None = None, step: int = 0, **values) -> State:
    """A state of ``gp`` with the given atoms true and fluents overridden."""
    base = base or gp.init
    vals = list(base.values)
    for name, value in values.items():
        vals[gp.slot(f"({name})")] = float(value)
    bits = base.bits
    for atom in atoms:
        bits |= 1 << gp.tables.propositions[_atom(atom)]
    return State(bits, tuple(vals), step, step * gp.dt, base.depth)


def _atom(text: str):
    from hybridplan.grounding import atom_from_name
    return atom_from_name(text)
