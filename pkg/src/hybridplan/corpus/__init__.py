"""Bundled PDDL+ domains and a generator for event-heavy synthetic domains."""

from __future__ import annotations

import math
from importlib import resources

from ..operators import OperatorRegistry
from ..pddl.parser import parse_domain, parse_problem
from ..pddl.syntax import DomainModel, ProblemModel

# name -> (domain file, problem file) relative to this package
CORPUS = {
    "car": ("car/domain.pddl", "car/problem.pddl"),
    "car-drift": ("car/domain.pddl", "car/drift.pddl"),
    "vending": ("vending/domain.pddl", "vending/problem.pddl"),
    "sleeping-beauty": ("sleeping_beauty/domain.pddl", "sleeping_beauty/problem.pddl"),
    "convoys": ("convoys/domain.pddl", "convoys/problem.pddl"),
}
SYNTHETIC = "synthetic"


def read(relative: str) -> str:
    return resources.files(__name__).joinpath(relative).read_text(encoding="utf-8")


def texts(name: str, **synthetic_options) -> tuple[str, str]:
    """Domain and problem source for a corpus entry."""
    if name == SYNTHETIC:
        return synthetic_domain(**synthetic_options)
    try:
        dom, prob = CORPUS[name]
    except KeyError:
        raise KeyError(f"unknown corpus entry {name!r}; available: {names()}") from None
    return read(dom), read(prob)


def load(name: str, registry: OperatorRegistry | None = None,
         **synthetic_options) -> tuple[DomainModel, ProblemModel]:
    dom, prob = texts(name, **synthetic_options)
    domain = parse_domain(dom, registry)
    return domain, parse_problem(prob, domain, registry)


def names() -> list[str]:
    return [*CORPUS, SYNTHETIC]


def synthetic_domain(events: int = 1000, share: float = 0.7, preconditions: int = 7,
                     group: int = 20, openers: int = 4, pool: int = 16) -> tuple[str, str]:
    """Generate an event-heavy domain whose events share precondition prefixes.

    Events come in groups of ``group``. Each has ``preconditions`` conditions,
    of which ``round(share * preconditions)`` are identical within its group
    and sort first; the rest are unique to the event. A group's shared prefix
    only holds once an ``open_<k>`` action raises that group's gate, so most
    groups are rejected by their first condition. Drift processes push the
    pool variables up over time so opened groups eventually fire.
    """
    if events < 1 or not 0.0 <= share <= 1.0 or preconditions < 1:
        raise ValueError("need events >= 1, 0 <= share <= 1, preconditions >= 1")
    shared = min(preconditions, round(share * preconditions))
    unique = preconditions - shared
    groups = math.ceil(events / group)
    openers = min(openers, groups)
    letters = "abcdefghijklmnopqrstuvwxy"
    if shared > len(letters):
        raise ValueError("too many shared preconditions")

    gate_fluents = [f"(g{letters[j]}_{g:04d})" for g in range(groups) for j in range(shared)]
    pool_fluents = [f"(zu_{p:02d})" for p in range(pool)]
    functions = " ".join([*gate_fluents, *pool_fluents, "(score)", "(clock)"])

    out = [
        "; generated event-heavy synthetic domain",
        f"; events={events} share={share} preconditions={preconditions} group={group}",
        "(define (domain synthetic)",
        "  (:requirements :fluents :time)",
        "  (:predicates (running))",
        f"  (:functions {functions})",
        "  (:process tick :parameters () :precondition (and (running))",
        "    :effect (and (increase (clock) (* #t 1))))",
    ]
    for p in range(pool):
        rate = 1 + p % 3
        out.append(f"  (:process drift_{p:02d} :parameters () :precondition (and (running))"
                   f" :effect (and (increase (zu_{p:02d}) (* #t {rate}))))")
    for k in range(openers):
        out.append(f"  (:action open_{k} :parameters () :precondition (and (running) (< (ga_{k:04d}) 1))"
                   f" :effect (and (assign (ga_{k:04d}) 1)))")
    for e in range(events):
        g = e // group
        conds = []
        for j in range(shared):
            threshold = 1 if j == 0 else 0
            conds.append(f"(>= (g{letters[j]}_{g:04d}) {threshold})")
        for u in range(unique):
            p = (e * 7 + u * 3) % pool
            conds.append(f"(>= (zu_{p:02d}) {2 + (e % 13) + u}.{e % 10}{u})")
        pre = " ".join(conds)
        out.append(f"  (:event ev_{e:05d} :parameters () :precondition (and {pre})"
                   f" :effect (and (increase (score) 1) (assign (ga_{g:04d}) 0)))")
    out.append(")")

    init = ["(running)", "(= (score) 0)", "(= (clock) 0)"]
    init += [f"(= {f} 0)" for f in gate_fluents]
    init += [f"(= {f} 0)" for f in pool_fluents]
    problem = "\n".join([
        "(define (problem synthetic_prob)",
        "  (:domain synthetic)",
        f"  (:init {' '.join(init)})",
        f"  (:goal (and (>= (score) {events + 1})))",
        ")",
    ])
    return "\n".join(out) + "\n", problem + "\n"
