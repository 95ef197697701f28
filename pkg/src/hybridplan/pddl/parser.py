"""Recursive-descent parser from token streams to domain and problem models."""

from __future__ import annotations

import logging
import math
import re
from typing import Optional, Union

from ..operators import DEFAULT_REGISTRY, OperatorRegistry
from .syntax import (
    ASSIGN_KINDS, COMPARATORS, And, AtomRef, Comparison, DomainModel, Equals, Expr, FluentRef,
    HappeningSchema, Imply, Metric, Not, Num, NumericEffect, OpApp, Or, ProblemModel, PropEffect,
    TimeDelta, TotalActions, TotalTime,
)
from .tokenizer import PDDLSyntaxError, SExpr, SList, Token, read_sexprs, tokenize

log = logging.getLogger(__name__)

KNOWN_REQUIREMENTS = frozenset({
    ":strips", ":typing", ":negative-preconditions", ":disjunctive-preconditions",
    ":equality", ":fluents", ":numeric-fluents", ":time", ":processes", ":events",
    ":semantic-attachment", ":adl",
})

_NUMBER = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")

Source = Union[str, list[Token]]


def is_number(text: str) -> bool:
    return bool(_NUMBER.match(text))


def _error(message: str, node: SExpr | None) -> PDDLSyntaxError:
    if node is None:
        return PDDLSyntaxError(message)
    return PDDLSyntaxError(message, node.line, node.column)


def _tokens(source: Source) -> list[Token]:
    return tokenize(source) if isinstance(source, str) else source


def _head(node: SExpr) -> Optional[str]:
    if isinstance(node, SList) and node and isinstance(node[0], Token):
        return node[0].lower
    return None


def _atom(node: SExpr, what: str) -> str:
    if not isinstance(node, Token) or node.is_open or node.is_close:
        raise _error(f"expected {what}", node)
    return node.value


def _define(source: Source, kind: str) -> tuple[str, SList]:
    exprs = read_sexprs(_tokens(source))
    if len(exprs) != 1 or _head(exprs[0]) != "define":
        raise _error("expected a single (define ...) form", exprs[0] if exprs else None)
    form = exprs[0]
    if len(form) < 2 or _head(form[1]) != kind or len(form[1]) != 2:
        raise _error(f"expected ({kind} <name>)", form[1] if len(form) > 1 else form)
    return _atom(form[1][1], f"{kind} name"), form


def parse_typed_list(items: list[SExpr], default: str = "object") -> list[tuple[str, str]]:
    """``a b - t c`` becomes ``[(a, t), (b, t), (c, object)]``."""
    out: list[tuple[str, str]] = []
    pending: list[str] = []
    i = 0
    while i < len(items):
        item = items[i]
        if isinstance(item, Token) and item.value == "-":
            if i + 1 >= len(items):
                raise _error("type expected after '-'", item)
            typ = items[i + 1]
            if isinstance(typ, SList):
                if _head(typ) == "either":
                    raise _error("(either ...) types are not supported", typ)
                raise _error("malformed type", typ)
            out.extend((name, typ.value) for name in pending)
            pending = []
            i += 2
            continue
        pending.append(_atom(item, "name"))
        i += 1
    out.extend((name, default) for name in pending)
    return out


class _Scope:
    """Symbols visible while parsing one formula."""

    def __init__(self, domain: "_DomainBuilder", variables: dict[str, str], objects: dict[str, str]):
        self.domain = domain
        self.variables = variables
        self.objects = objects


class _DomainBuilder:
    def __init__(self, registry: OperatorRegistry):
        self.registry = registry
        self.types: dict[str, str] = {}
        self.constants: dict[str, str] = {}
        self.predicates: dict[str, tuple[tuple[str, str], ...]] = {}
        self.functions: dict[str, tuple[tuple[str, str], ...]] = {}

    def known_type(self, name: str) -> bool:
        return name == "object" or name in self.types

    # -- terms and formulas ------------------------------------------------

    def term(self, node: SExpr, scope: _Scope) -> str:
        name = _atom(node, "term")
        if name.startswith("?"):
            if name not in scope.variables:
                raise _error(f"undeclared variable {name}", node)
        elif name not in scope.objects and name not in self.constants:
            raise _error(f"unknown object {name}", node)
        return name

    def _is_term(self, node: SExpr, scope: _Scope) -> bool:
        if not isinstance(node, Token):
            return False
        v = node.value
        if v.startswith("?"):
            return True
        return (v in scope.objects or v in self.constants) and v not in self.functions

    def _args(self, node: SList, signature, scope: _Scope, kind: str) -> tuple[str, ...]:
        name = node[0].value
        args = tuple(self.term(a, scope) for a in node[1:])
        if len(args) != len(signature):
            raise _error(f"{kind} {name} expects {len(signature)} arguments, got {len(args)}", node)
        return args

    def formula(self, node: SExpr, scope: _Scope) -> Expr:
        head = _head(node)
        if head is None:
            raise _error("expected a parenthesized formula", node)
        rest = node[1:]
        if head == "and":
            return And(tuple(self.formula(x, scope) for x in rest))
        if head == "or":
            return Or(tuple(self.formula(x, scope) for x in rest))
        if head == "not":
            if len(rest) != 1:
                raise _error("not takes exactly one argument", node)
            return Not(self.formula(rest[0], scope))
        if head == "imply":
            if len(rest) != 2:
                raise _error("imply takes two arguments", node)
            return Imply(self.formula(rest[0], scope), self.formula(rest[1], scope))
        if head in COMPARATORS:
            if len(rest) != 2:
                raise _error(f"comparison {head} takes two arguments", node)
            if head == "=" and self._is_term(rest[0], scope) and self._is_term(rest[1], scope):
                return Equals(self.term(rest[0], scope), self.term(rest[1], scope))
            return Comparison(head, self.numeric(rest[0], scope), self.numeric(rest[1], scope))
        if head in ("forall", "exists", "when"):
            raise _error(f"{head} is not supported", node)
        name = node[0].value
        if name in self.predicates:
            return AtomRef(name, self._args(node, self.predicates[name], scope, "predicate"))
        raise _error(f"undeclared predicate {name}", node)

    def numeric(self, node: SExpr, scope: _Scope) -> Expr:
        if isinstance(node, Token):
            v = node.value
            if is_number(v):
                value = float(v)
                if not math.isfinite(value):
                    raise _error(f"non-finite number {v}", node)
                return Num(value)
            low = v.lower()
            if low == "#t":
                return TimeDelta()
            if low == "total-time":
                return TotalTime()
            if low == "total-actions":
                return TotalActions()
            if v in self.functions:
                if self.functions[v]:
                    raise _error(f"function {v} expects {len(self.functions[v])} arguments", node)
                return FluentRef(v)
            raise _error(f"undeclared function {v}", node)
        head = _head(node)
        if head is None:
            raise _error("malformed numeric expression", node)
        symbol = node[0].value
        if head == "total-time" and len(node) == 1:
            return TotalTime()
        if head == "total-actions" and len(node) == 1:
            return TotalActions()
        if symbol in self.functions:
            return FluentRef(symbol, self._args(node, self.functions[symbol], scope, "function"))
        if symbol in self.registry:
            spec = self.registry[symbol]
            operands = tuple(self.numeric(x, scope) for x in node[1:])
            if not spec.accepts(len(operands)):
                raise _error(f"operator {spec.describe()} applied to {len(operands)} operands", node)
            return OpApp(symbol, operands)
        if symbol in self.predicates:
            raise _error(f"predicate {symbol} used as a number", node)
        raise _error(f"unknown operator or undeclared function {symbol}", node)

    def effects(self, node: SExpr, scope: _Scope, kind: str) -> list:
        head = _head(node)
        if head is None:
            raise _error("expected an effect", node)
        if head == "and":
            out = []
            for x in node[1:]:
                out.extend(self.effects(x, scope, kind))
            return out
        if head in ("when", "forall"):
            raise _error(f"{head} effects are not supported", node)
        if head == "not":
            inner = self.formula(node[1], scope) if len(node) == 2 else None
            if not isinstance(inner, AtomRef):
                raise _error("negative effect must negate a predicate", node)
            return [PropEffect(inner, add=False)]
        if head in ASSIGN_KINDS:
            if len(node) != 3:
                raise _error(f"{head} takes a fluent and a value", node)
            target = self.numeric(node[1], scope)
            if not isinstance(target, FluentRef):
                raise _error(f"{head} target must be a function", node[1])
            value = self.numeric(node[2], scope)
            if kind == "process" and head in ("increase", "decrease") and _time_degree(value) > 1:
                raise _error("process effect must be linear in #t", node[2])
            return [NumericEffect(head, target, value)]
        atom = self.formula(node, scope)
        if not isinstance(atom, AtomRef):
            raise _error("malformed effect", node)
        return [PropEffect(atom, add=True)]


def _time_degree(expr: Expr) -> int:
    """Polynomial degree of ``expr`` in ``#t``; 99 when not polynomial."""
    if isinstance(expr, TimeDelta):
        return 1
    if isinstance(expr, OpApp):
        degrees = [_time_degree(o) for o in expr.operands]
        if expr.op in ("+", "-"):
            return max(degrees)
        if expr.op == "*":
            return sum(degrees)
        if expr.op == "/":
            return degrees[0] if degrees[1] == 0 else 99
        return 0 if not any(degrees) else 99
    return 0


def _parse_types(b: _DomainBuilder, section: SList) -> None:
    for name, parent in parse_typed_list(section[1:]):
        if name == "object":
            continue
        if name in b.types and b.types[name] != parent:
            raise _error(f"type {name} declared with two parents", section)
        b.types[name] = parent
    for parent in list(b.types.values()):
        if parent != "object" and parent not in b.types:
            b.types[parent] = "object"
    for name in b.types:
        seen = {name}
        cur = b.types[name]
        while cur != "object":
            if cur in seen:
                raise _error(f"cyclic type hierarchy at {name}", section)
            seen.add(cur)
            cur = b.types[cur]


def _parse_signatures(b: _DomainBuilder, section: SList, allow_number: bool) -> dict:
    out: dict[str, tuple[tuple[str, str], ...]] = {}
    items = list(section[1:])
    i = 0
    while i < len(items):
        decl = items[i]
        if not isinstance(decl, SList) or not decl:
            raise _error("expected a declaration", decl)
        name = _atom(decl[0], "name")
        params = tuple(parse_typed_list(decl[1:]))
        for _, typ in params:
            if not b.known_type(typ):
                raise _error(f"unknown type {typ}", decl)
        out[name] = params
        i += 1
        # function declarations may carry a '- number' result type
        if allow_number and i < len(items) and isinstance(items[i], Token) and items[i].value == "-":
            if i + 1 >= len(items) or _atom(items[i + 1], "type").lower() != "number":
                raise _error("only numeric functions are supported", items[i])
            i += 2
    return out


def _parse_happening(b: _DomainBuilder, section: SList) -> HappeningSchema:
    kind = section[0].lower[1:]
    if len(section) < 2:
        raise _error(f"{kind} needs a name", section)
    name = _atom(section[1], f"{kind} name")
    fields: dict[str, SExpr] = {}
    items = section[2:]
    if len(items) % 2:
        raise _error(f"malformed {kind} {name}", section)
    for key, value in zip(items[::2], items[1::2]):
        k = _atom(key, "keyword").lower()
        if k not in (":parameters", ":precondition", ":effect"):
            raise _error(f"unexpected {k} in {kind} {name}", key)
        fields[k] = value
    params: list[tuple[str, str]] = []
    if ":parameters" in fields:
        if not isinstance(fields[":parameters"], SList):
            raise _error("parameters must be a list", fields[":parameters"])
        params = parse_typed_list(fields[":parameters"])
    for var, typ in params:
        if not var.startswith("?"):
            raise _error(f"parameter {var} must start with '?'", fields[":parameters"])
        if not b.known_type(typ):
            raise _error(f"unknown type {typ}", fields[":parameters"])
    scope = _Scope(b, dict(params), {})
    pre = None
    if ":precondition" in fields:
        node = fields[":precondition"]
        if not (isinstance(node, SList) and len(node) == 0):
            pre = b.formula(node, scope)
    effects: list = []
    if ":effect" in fields:
        node = fields[":effect"]
        if not (isinstance(node, SList) and len(node) == 0):
            effects = b.effects(node, scope, kind)
    return HappeningSchema(name, kind, tuple(params), pre, tuple(effects))


def parse_domain(source: Source, registry: OperatorRegistry | None = None) -> DomainModel:
    """Parse domain text (or its tokens) into a :class:`DomainModel`."""
    registry = registry or DEFAULT_REGISTRY
    name, form = _define(source, "domain")
    b = _DomainBuilder(registry)
    requirements: list[str] = []
    warnings: list[str] = []
    happenings: list[HappeningSchema] = []
    for section in form[2:]:
        head = _head(section)
        if head is None:
            raise _error("expected a domain section", section)
        if head == ":requirements":
            for tok in section[1:]:
                req = _atom(tok, "requirement").lower()
                requirements.append(req)
                if req not in KNOWN_REQUIREMENTS:
                    msg = f"unknown requirement {req}"
                    warnings.append(msg)
                    log.warning(msg)
        elif head == ":types":
            _parse_types(b, section)
        elif head == ":constants":
            for obj, typ in parse_typed_list(section[1:]):
                if not b.known_type(typ):
                    raise _error(f"unknown type {typ}", section)
                b.constants[obj] = typ
        elif head == ":predicates":
            b.predicates.update(_parse_signatures(b, section, allow_number=False))
        elif head == ":functions":
            b.functions.update(_parse_signatures(b, section, allow_number=True))
        elif head in (":action", ":event", ":process"):
            happenings.append(_parse_happening(b, section))
        elif head == ":durative-action":
            raise _error(
                "durative actions are not supported; compile them into a start action, "
                "a process and a stop event/action (start-process-stop)", section)
        else:
            raise _error(f"unsupported domain section {head}", section)
    seen: set[str] = set()
    for h in happenings:
        if h.name in seen:
            raise PDDLSyntaxError(f"happening {h.name} defined twice")
        seen.add(h.name)
    return DomainModel(
        name=name,
        requirements=tuple(requirements),
        types=dict(b.types),
        constants=dict(b.constants),
        predicates=dict(b.predicates),
        functions=dict(b.functions),
        happenings=tuple(happenings),
        warnings=tuple(warnings),
    )


def _builder_for(domain: DomainModel, registry: OperatorRegistry) -> _DomainBuilder:
    b = _DomainBuilder(registry)
    b.types = dict(domain.types)
    b.constants = dict(domain.constants)
    b.predicates = dict(domain.predicates)
    b.functions = dict(domain.functions)
    return b


def parse_problem(source: Source, domain: DomainModel,
                  registry: OperatorRegistry | None = None) -> ProblemModel:
    """Parse problem text against an already parsed ``domain``."""
    registry = registry or DEFAULT_REGISTRY
    name, form = _define(source, "problem")
    b = _builder_for(domain, registry)
    objects: dict[str, str] = {}
    domain_name = domain.name
    atoms: list[AtomRef] = []
    values: dict[FluentRef, float] = {}
    goal = None
    metric = None
    metric_seen = False
    pending_init: SList | None = None
    pending_goal: SList | None = None
    for section in form[2:]:
        head = _head(section)
        if head == ":domain":
            domain_name = _atom(section[1], "domain name")
            if domain_name != domain.name:
                log.warning("problem names domain %s but %s was given", domain_name, domain.name)
        elif head == ":objects":
            for obj, typ in parse_typed_list(section[1:]):
                if not b.known_type(typ):
                    raise _error(f"object {obj} has undeclared type {typ}", section)
                objects[obj] = typ
        elif head == ":init":
            pending_init = section
        elif head == ":goal":
            pending_goal = section
        elif head == ":metric":
            if metric_seen:
                raise _error("duplicate :metric", section)
            metric_seen = True
            if len(section) != 3:
                raise _error("expected (:metric minimize|maximize <expr>)", section)
            direction = _atom(section[1], "direction").lower()
            if direction not in ("minimize", "maximize"):
                raise _error(f"unknown metric direction {direction}", section[1])
            metric = Metric(direction, b.numeric(section[2], _Scope(b, {}, objects)))
        else:
            raise _error(f"unsupported problem section {head}", section)
    scope = _Scope(b, {}, objects)
    if pending_init is not None:
        for item in pending_init[1:]:
            head = _head(item)
            if head == "=":
                if len(item) != 3:
                    raise _error("expected (= (f ...) value)", item)
                target = b.numeric(item[1], scope)
                if not isinstance(target, FluentRef):
                    raise _error("initial assignment target must be a function", item)
                raw = _atom(item[2], "number")
                if not is_number(raw) or not math.isfinite(float(raw)):
                    raise _error(f"initial value {raw} is not a finite number", item[2])
                values[target] = float(raw)
            else:
                atom = b.formula(item, scope)
                if not isinstance(atom, AtomRef):
                    raise _error("initial state may only contain atoms and assignments", item)
                atoms.append(atom)
    if pending_goal is not None:
        if len(pending_goal) != 2:
            raise _error("expected (:goal <formula>)", pending_goal)
        goal = b.formula(pending_goal[1], scope)
    return ProblemModel(
        name=name,
        domain_name=domain_name,
        objects=objects,
        init_atoms=tuple(dict.fromkeys(atoms)),
        init_values=tuple(values.items()),
        goal=goal,
        metric=metric,
    )


def load(domain_path, problem_path, registry: OperatorRegistry | None = None
         ) -> tuple[DomainModel, ProblemModel]:
    """Read and parse a domain/problem file pair."""
    with open(domain_path, encoding="utf-8") as fh:
        domain = parse_domain(fh.read(), registry)
    with open(problem_path, encoding="utf-8") as fh:
        problem = parse_problem(fh.read(), domain, registry)
    return domain, problem
