"""Registry of arithmetic operators usable inside PDDL expressions.

Adding an operator takes one call::

    registry.register("abs", 1, abs)

``arity`` is a fixed operand count, ``None`` for unrestricted cardinality,
or a ``(min, max)`` pair (``max`` may be ``None``).
"""

from __future__ import annotations

import math
import operator
from functools import reduce
from dataclasses import dataclass
from typing import Callable, Optional, Union

Arity = Union[int, None, tuple[int, Optional[int]]]

VARIADIC = None


class OperatorError(ValueError):
    pass


@dataclass(frozen=True)
class OperatorSpec:
    symbol: str
    min_args: int
    max_args: Optional[int]
    fn: Callable[..., float]

    def accepts(self, count: int) -> bool:
        return count >= self.min_args and (self.max_args is None or count <= self.max_args)

    def describe(self) -> str:
        if self.max_args is None:
            return f"{self.symbol}/{self.min_args}+"
        if self.min_args == self.max_args:
            return f"{self.symbol}/{self.min_args}"
        return f"{self.symbol}/{self.min_args}..{self.max_args}"


def _add(*xs):
    return reduce(operator.add, xs)


def _sub(a, b=None):
    return -a if b is None else a - b


def _mul(*xs):
    return reduce(operator.mul, xs)


def _div(a, b):
    if b == 0:
        raise ZeroDivisionError("division by zero")
    return a / b


def _pow(base, exponent):
    # math.pow raises ValueError for a negative base with a fractional exponent
    return math.pow(base, exponent)


class OperatorRegistry:
    def __init__(self) -> None:
        self._ops: dict[str, OperatorSpec] = {}
        self._frozen = False

    @classmethod
    def default(cls) -> "OperatorRegistry":
        reg = cls()
        reg.register("+", (1, None), _add)
        reg.register("-", (1, 2), _sub)
        reg.register("*", (1, None), _mul)
        reg.register("/", 2, _div)
        reg.register("^", 2, _pow)
        return reg

    def register(self, symbol: str, arity: Arity, fn: Callable[..., float]) -> "OperatorRegistry":
        if self._frozen:
            raise OperatorError(f"registry is frozen; cannot add {symbol!r} after search started")
        if symbol in self._ops:
            raise OperatorError(f"operator {symbol!r} already registered as {self._ops[symbol].describe()}")
        if arity is None:
            lo, hi = 1, None
        elif isinstance(arity, int):
            lo, hi = arity, arity
        else:
            lo, hi = arity
        self._ops[symbol] = OperatorSpec(symbol, lo, hi, fn)
        return self

    def freeze(self) -> None:
        self._frozen = True

    @property
    def frozen(self) -> bool:
        return self._frozen

    def copy(self) -> "OperatorRegistry":
        reg = OperatorRegistry()
        reg._ops = dict(self._ops)
        return reg

    def __contains__(self, symbol: str) -> bool:
        return symbol in self._ops

    def __getitem__(self, symbol: str) -> OperatorSpec:
        try:
            return self._ops[symbol]
        except KeyError:
            raise OperatorError(
                f"unknown operator {symbol!r}; registered: {', '.join(self.symbols())}"
            ) from None

    def symbols(self) -> list[str]:
        return list(self._ops)


DEFAULT_REGISTRY = OperatorRegistry.default()
