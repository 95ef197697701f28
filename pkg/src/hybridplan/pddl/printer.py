"""Canonical PDDL text for syntax trees and whole models.

The printed form of a condition doubles as its identity: grounded
preconditions are sorted by it and precondition-tree children are keyed on it.
"""

from __future__ import annotations

from functools import lru_cache

from .syntax import (
    And, AtomRef, Comparison, DomainModel, Equals, FluentRef, HappeningSchema, Imply, Not,
    Num, NumericEffect, OpApp, Or, ProblemModel, PropEffect, TimeDelta, TotalActions, TotalTime,
)


def format_number(value: float) -> str:
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return repr(float(value))


def _call(name: str, args) -> str:
    return "(" + " ".join((name, *args)) + ")"


@lru_cache(maxsize=None)
def to_pddl(node) -> str:
    if isinstance(node, Num):
        return format_number(node.value)
    if isinstance(node, (FluentRef, AtomRef)):
        return _call(node.name, node.args)
    if isinstance(node, OpApp):
        return _call(node.op, [to_pddl(o) for o in node.operands])
    if isinstance(node, TimeDelta):
        return "#t"
    if isinstance(node, TotalTime):
        return "(total-time)"
    if isinstance(node, TotalActions):
        return "(total-actions)"
    if isinstance(node, Comparison):
        return _call(node.op, [to_pddl(node.left), to_pddl(node.right)])
    if isinstance(node, Equals):
        return _call("=", [node.left, node.right])
    if isinstance(node, Not):
        return _call("not", [to_pddl(node.arg)])
    if isinstance(node, And):
        return _call("and", [to_pddl(a) for a in node.args])
    if isinstance(node, Or):
        return _call("or", [to_pddl(a) for a in node.args])
    if isinstance(node, Imply):
        return _call("imply", [to_pddl(node.left), to_pddl(node.right)])
    if isinstance(node, NumericEffect):
        return _call(node.kind, [to_pddl(node.target), to_pddl(node.value)])
    if isinstance(node, PropEffect):
        return to_pddl(node.atom) if node.add else _call("not", [to_pddl(node.atom)])
    raise TypeError(f"cannot print {node!r}")


def _typed(pairs) -> str:
    return " ".join(f"{name} - {typ}" for name, typ in pairs)


def _schema(h: HappeningSchema) -> str:
    lines = [f"  (:{h.kind} {h.name}", f"    :parameters ({_typed(h.parameters)})"]
    if h.precondition is not None:
        lines.append(f"    :precondition {to_pddl(h.precondition)}")
    effects = " ".join(to_pddl(e) for e in h.effects)
    lines.append(f"    :effect (and {effects}))")
    return "\n".join(lines)


def domain_to_pddl(domain: DomainModel) -> str:
    out = [f"(define (domain {domain.name})"]
    out.append(f"  (:requirements {' '.join(domain.requirements)})")
    if domain.types:
        out.append(f"  (:types {_typed(domain.types.items())})")
    if domain.constants:
        out.append(f"  (:constants {_typed(domain.constants.items())})")
    preds = " ".join(_call(n, [_typed(p)] if p else []) for n, p in domain.predicates.items())
    out.append(f"  (:predicates {preds})")
    if domain.functions:
        funcs = " ".join(_call(n, [_typed(p)] if p else []) for n, p in domain.functions.items())
        out.append(f"  (:functions {funcs})")
    out.extend(_schema(h) for h in domain.happenings)
    out.append(")")
    return "\n".join(out) + "\n"


def problem_to_pddl(problem: ProblemModel) -> str:
    out = [f"(define (problem {problem.name})", f"  (:domain {problem.domain_name})"]
    if problem.objects:
        out.append(f"  (:objects {_typed(problem.objects.items())})")
    init = [to_pddl(a) for a in problem.init_atoms]
    init += [f"(= {to_pddl(f)} {format_number(v)})" for f, v in problem.init_values]
    out.append(f"  (:init {' '.join(init)})")
    if problem.goal is not None:
        out.append(f"  (:goal {to_pddl(problem.goal)})")
    if problem.metric is not None:
        out.append(f"  (:metric {problem.metric.direction} {to_pddl(problem.metric.objective)})")
    out.append(")")
    return "\n".join(out) + "\n"
