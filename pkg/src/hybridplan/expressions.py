"""Compilation and evaluation of grounded PDDL expressions.

A grounded expression is first lowered to a postfix instruction sequence.
That sequence is then turned into a Python lambda (so the interpreter loop
disappears from the hot path) and cached. :func:`run_postfix` executes the
instructions directly and :func:`interpret` walks the syntax tree; both are
kept as reference evaluators.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Callable, Optional

from .operators import DEFAULT_REGISTRY, OperatorRegistry
from .pddl.printer import to_pddl
from .pddl.syntax import (
    And, AtomRef, Comparison, Equals, Expr, FluentRef, Imply, Not, Num, NumericEffect, OpApp, Or,
    PropEffect, TimeDelta, TotalActions, TotalTime,
)

# errors that make a numeric value undefined
EVAL_ERRORS = (ArithmeticError, ValueError)
_INLINE = {"+": "+", "-": "-", "*": "*", "/": "/"}
_COMPARE: dict[str, Callable[[float, float], bool]] = {
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    "=": lambda a, b: a == b,
    ">=": lambda a, b: a >= b,
    ">": lambda a, b: a > b,
}
_PY_COMPARE = {"<": "<", "<=": "<=", "=": "==", ">=": ">=", ">": ">"}


class InvalidState(Exception):
    """A successor could not be computed (non-finite value, failed attachment...)."""


class CompileError(ValueError):
    pass


@dataclass
class EvalStats:
    condition_errors: int = 0
    effect_errors: int = 0


@dataclass
class Tables:
    """Grounded symbol tables: fluent -> vector slot, atom -> bit index."""

    variables: dict[FluentRef, int] = field(default_factory=dict)
    propositions: dict[AtomRef, int] = field(default_factory=dict)

    def slot(self, ref: FluentRef) -> int:
        try:
            return self.variables[ref]
        except KeyError:
            raise CompileError(f"unresolved fluent {to_pddl(ref)}") from None

    def bit(self, ref: AtomRef) -> int:
        try:
            return self.propositions[ref]
        except KeyError:
            raise CompileError(f"unresolved proposition {to_pddl(ref)}") from None


def finite(x: float) -> float:
    if x - x != 0:
        raise ArithmeticError(f"non-finite value {x}")
    return x


@dataclass(frozen=True)
class CompiledExpr:
    key: str
    code: tuple[tuple, ...]
    kind: str
    source: str
    fn: Callable = field(repr=False, compare=False)

    @property
    def boolean(self) -> bool:
        return self.kind == "bool"


def lower(expr: Expr, tables: Tables, registry: OperatorRegistry) -> list[tuple]:
    """Flatten ``expr`` into postfix instructions."""
    out: list[tuple] = []

    def walk(node):
        if isinstance(node, Num):
            out.append(("const", node.value))
        elif isinstance(node, FluentRef):
            out.append(("var", tables.slot(node)))
        elif isinstance(node, AtomRef):
            out.append(("prop", tables.bit(node)))
        elif isinstance(node, TimeDelta):
            out.append(("dt",))
        elif isinstance(node, TotalTime):
            out.append(("time",))
        elif isinstance(node, TotalActions):
            out.append(("nactions",))
        elif isinstance(node, OpApp):
            spec = registry[node.op]
            if not spec.accepts(len(node.operands)):
                raise CompileError(f"operator {spec.describe()} given {len(node.operands)} operands")
            for o in node.operands:
                walk(o)
            out.append(("op", node.op, len(node.operands)))
        elif isinstance(node, Comparison):
            walk(node.left)
            walk(node.right)
            out.append(("cmp", node.op))
        elif isinstance(node, Equals):
            out.append(("const", node.left == node.right))
        elif isinstance(node, Not):
            walk(node.arg)
            out.append(("not",))
        elif isinstance(node, (And, Or)):
            for a in node.args:
                walk(a)
            out.append(("and" if isinstance(node, And) else "or", len(node.args)))
        elif isinstance(node, Imply):
            walk(node.left)
            walk(node.right)
            out.append(("imply",))
        else:
            raise CompileError(f"cannot compile {node!r}")

    walk(expr)
    return out


def _result_kind(code: list[tuple]) -> str:
    last = code[-1][0]
    if last in ("prop", "cmp", "not", "and", "or", "imply"):
        return "bool"
    if last == "const" and isinstance(code[-1][1], bool):
        return "bool"
    return "num"


def generate_source(code: list[tuple], registry: OperatorRegistry) -> tuple[str, dict]:
    """Turn postfix instructions into a Python expression string.

    Each stack entry is ``(source, safe)`` where ``safe`` marks values that
    are finite by construction (constants and state variables) and so need
    no check before a comparison.
    """
    namespace: dict = {"_fin": finite}
    stack: list[tuple[str, bool]] = []
    for ins in code:
        tag = ins[0]
        if tag == "const":
            stack.append((repr(ins[1]), True))
        elif tag == "var":
            stack.append((f"v[{ins[1]}]", True))
        elif tag == "prop":
            stack.append((f"((b & {1 << ins[1]}) != 0)", True))
        elif tag == "dt":
            stack.append(("dt", True))
        elif tag == "time":
            stack.append(("t", True))
        elif tag == "nactions":
            stack.append(("na", True))
        elif tag == "op":
            symbol, n = ins[1], ins[2]
            args = [s for s, _ in stack[-n:]]
            del stack[-n:]
            if symbol in _INLINE:
                if symbol == "-" and n == 1:
                    src = f"(-{args[0]})"
                else:
                    src = args[0]
                    for a in args[1:]:
                        src = f"({src} {_INLINE[symbol]} {a})"
            else:
                name = f"_op{len(namespace)}"
                namespace[name] = registry[symbol].fn
                src = f"{name}({', '.join(args)})"
            stack.append((src, False))
        elif tag == "cmp":
            (right, rsafe), (left, lsafe) = stack.pop(), stack.pop()
            left = left if lsafe else f"_fin({left})"
            right = right if rsafe else f"_fin({right})"
            stack.append((f"({left} {_PY_COMPARE[ins[1]]} {right})", True))
        elif tag == "not":
            stack.append((f"(not {stack.pop()[0]})", True))
        elif tag in ("and", "or"):
            n = ins[1]
            if n == 0:
                stack.append(("True" if tag == "and" else "False", True))
                continue
            args = [s for s, _ in stack[-n:]]
            del stack[-n:]
            stack.append(("(" + f" {tag} ".join(args) + ")", True))
        elif tag == "imply":
            right, left = stack.pop()[0], stack.pop()[0]
            stack.append((f"((not {left}) or {right})", True))
        else:
            raise CompileError(f"unknown instruction {ins!r}")
    if len(stack) != 1:
        raise CompileError(f"unbalanced instruction sequence ({len(stack)} values left)")
    return stack[0][0], namespace


def run_postfix(code, registry: OperatorRegistry, b: int, v, dt: float = 0.0,
                t: float = 0.0, na: int = 0):
    """Execute postfix instructions with an explicit value stack."""
    stack: list = []
    computed: list[bool] = []
    for ins in code:
        tag = ins[0]
        if tag in ("const", "var", "prop", "dt", "time", "nactions"):
            if tag == "const":
                stack.append(ins[1])
            elif tag == "var":
                stack.append(v[ins[1]])
            elif tag == "prop":
                stack.append(((b >> ins[1]) & 1) == 1)
            elif tag == "dt":
                stack.append(dt)
            elif tag == "time":
                stack.append(t)
            else:
                stack.append(na)
            computed.append(False)
        elif tag == "op":
            n = ins[2]
            args = stack[-n:]
            del stack[-n:], computed[-n:]
            stack.append(registry[ins[1]].fn(*args))
            computed.append(True)
        elif tag == "cmp":
            right, left = stack.pop(), stack.pop()
            rc, lc = computed.pop(), computed.pop()
            if lc:
                finite(left)
            if rc:
                finite(right)
            stack.append(_COMPARE[ins[1]](left, right))
            computed.append(False)
        elif tag == "not":
            stack.append(not stack.pop())
        elif tag in ("and", "or"):
            n = ins[1]
            args = stack[-n:] if n else []
            if n:
                del stack[-n:], computed[-n:]
            stack.append(all(args) if tag == "and" else any(args))
            computed.append(False)
        elif tag == "imply":
            right, left = stack.pop(), stack.pop()
            computed.pop()
            stack.append((not left) or right)
    if len(stack) != 1:
        raise CompileError("unbalanced instruction sequence")
    return stack[0]


def interpret(expr: Expr, tables: Tables, registry: OperatorRegistry, b: int, v,
              dt: float = 0.0, t: float = 0.0, na: int = 0):
    """Evaluate ``expr`` by walking the syntax tree."""

    def ev(node):
        if isinstance(node, Num):
            return node.value
        if isinstance(node, FluentRef):
            return v[tables.slot(node)]
        if isinstance(node, AtomRef):
            return ((b >> tables.bit(node)) & 1) == 1
        if isinstance(node, TimeDelta):
            return dt
        if isinstance(node, TotalTime):
            return t
        if isinstance(node, TotalActions):
            return na
        if isinstance(node, OpApp):
            return registry[node.op].fn(*[ev(o) for o in node.operands])
        if isinstance(node, Comparison):
            left, right = ev(node.left), ev(node.right)
            return _COMPARE[node.op](finite(left), finite(right))
        if isinstance(node, Equals):
            return node.left == node.right
        if isinstance(node, Not):
            return not ev(node.arg)
        if isinstance(node, And):
            return all(ev(a) for a in node.args)
        if isinstance(node, Or):
            return any(ev(a) for a in node.args)
        if isinstance(node, Imply):
            return (not ev(node.left)) or ev(node.right)
        raise CompileError(f"cannot interpret {node!r}")

    return ev(expr)


class Compiler:
    """Caches one :class:`CompiledExpr` per distinct grounded expression."""

    def __init__(self, tables: Tables, registry: OperatorRegistry | None = None):
        self.tables = tables
        self.registry = registry or DEFAULT_REGISTRY
        self._cache: dict[Expr, CompiledExpr] = {}
        self._lock = threading.Lock()

    def compile(self, expr: Expr) -> CompiledExpr:
        hit = self._cache.get(expr)
        if hit is not None:
            return hit
        with self._lock:
            hit = self._cache.get(expr)
            if hit is None:
                hit = self._build(expr)
                self._cache[expr] = hit
            return hit

    def _build(self, expr: Expr) -> CompiledExpr:
        code = lower(expr, self.tables, self.registry)
        source, namespace = generate_source(code, self.registry)
        fn = eval(f"lambda b, v, dt=0.0, t=0.0, na=0: {source}", namespace)  # noqa: S307
        return CompiledExpr(to_pddl(expr), tuple(code), _result_kind(code), source, fn)

    def __len__(self) -> int:
        return len(self._cache)


def compile_expr(expr: Expr, tables: Tables, registry: OperatorRegistry | None = None) -> CompiledExpr:
    return Compiler(tables, registry).compile(expr)


def eval_condition(c: CompiledExpr, b: int, v, stats: EvalStats | None = None) -> bool:
    """Truth of a boolean expression; undefined arithmetic makes it false."""
    try:
        return bool(c.fn(b, v))
    except EVAL_ERRORS:
        if stats is not None:
            stats.condition_errors += 1
        return False


def eval_number(c: CompiledExpr, b: int, v, dt: float = 0.0, t: float = 0.0, na: int = 0) -> float:
    return c.fn(b, v, dt, t, na)


# -- effects ---------------------------------------------------------------

@dataclass(frozen=True)
class CompiledEffects:
    """All effects of one happening, applied against a single snapshot."""

    add_mask: int
    del_mask: int
    numeric: tuple[tuple[int, str, CompiledExpr], ...]

    @property
    def empty(self) -> bool:
        return not (self.add_mask or self.del_mask or self.numeric)


def compile_effects(effects, compiler: Compiler) -> CompiledEffects:
    add = dele = 0
    numeric = []
    for e in effects:
        if isinstance(e, PropEffect):
            mask = 1 << compiler.tables.bit(e.atom)
            if e.add:
                add |= mask
            else:
                dele |= mask
        elif isinstance(e, NumericEffect):
            numeric.append((compiler.tables.slot(e.target), e.kind, compiler.compile(e.value)))
        else:
            raise CompileError(f"not an effect: {e!r}")
    # a proposition both added and deleted ends up true
    return CompiledEffects(add, dele & ~add, tuple(numeric))


def _combine(kind: str, current: float, rhs: float) -> float:
    if kind == "assign":
        return rhs
    if kind == "increase":
        return current + rhs
    if kind == "decrease":
        return current - rhs
    if kind == "scale-up":
        return current * rhs
    if kind == "scale-down":
        if rhs == 0:
            raise ZeroDivisionError("scale-down by zero")
        return current / rhs
    raise CompileError(f"unknown assignment kind {kind}")


def numeric_updates(effects: CompiledEffects, b: int, v, dt: float,
                    precision: Optional[int]) -> list[tuple[int, float]]:
    """New values for every numeric target, all read from the snapshot ``(b, v)``."""
    out = []
    try:
        for slot, kind, expr in effects.numeric:
            value = _combine(kind, v[slot], expr.fn(b, v, dt))
            if value - value != 0:
                raise InvalidState(f"non-finite value for slot {slot}")
            if precision is not None:
                value = round(value, precision)
            out.append((slot, value))
    except EVAL_ERRORS as exc:
        raise InvalidState(str(exc)) from exc
    return out


def apply_effects_inplace(effects: CompiledEffects, b: int, values: list, dt: float,
                          precision: Optional[int]) -> int:
    """Like :func:`apply_effects` but writes into ``values``; returns the new bits."""
    if effects.numeric:
        for slot, value in numeric_updates(effects, b, values, dt, precision):
            values[slot] = value
    return (b & ~effects.del_mask) | effects.add_mask


def apply_effects(effects: CompiledEffects, b: int, v, dt: float,
                  precision: Optional[int]) -> tuple[int, list[float]]:
    """Apply a happening's effects simultaneously; returns new (bits, values)."""
    new_values = list(v)
    for slot, value in numeric_updates(effects, b, v, dt, precision):
        new_values[slot] = value
    return (b & ~effects.del_mask) | effects.add_mask, new_values
