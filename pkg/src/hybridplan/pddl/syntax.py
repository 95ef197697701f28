"""Abstract syntax for PDDL+ domains and problems.

Every node is an immutable, hashable dataclass so that grounded expressions
can be used directly as cache keys and compared structurally.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

COMPARATORS = ("<", "<=", "=", ">=", ">")
ASSIGN_KINDS = ("assign", "increase", "decrease", "scale-up", "scale-down")
HAPPENING_KINDS = ("action", "event", "process")

TEMPORAL_REQUIREMENT = ":time"
ATTACHMENT_REQUIREMENT = ":semantic-attachment"


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class FluentRef:
    name: str
    args: tuple[str, ...] = ()


@dataclass(frozen=True)
class AtomRef:
    name: str
    args: tuple[str, ...] = ()


@dataclass(frozen=True)
class OpApp:
    op: str
    operands: tuple["Expr", ...]


@dataclass(frozen=True)
class TimeDelta:
    """The ``#t`` symbol: the duration of the transition being applied."""


@dataclass(frozen=True)
class TotalTime:
    pass


@dataclass(frozen=True)
class TotalActions:
    pass


@dataclass(frozen=True)
class Comparison:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Equals:
    """Syntactic equality between two terms (variables or objects)."""

    left: str
    right: str


@dataclass(frozen=True)
class Not:
    arg: "Expr"


@dataclass(frozen=True)
class And:
    args: tuple["Expr", ...]


@dataclass(frozen=True)
class Or:
    args: tuple["Expr", ...]


@dataclass(frozen=True)
class Imply:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class NumericEffect:
    kind: str
    target: FluentRef
    value: "Expr"


@dataclass(frozen=True)
class PropEffect:
    atom: AtomRef
    add: bool = True


Expr = Union[Num, FluentRef, AtomRef, OpApp, TimeDelta, TotalTime, TotalActions,
             Comparison, Equals, Not, And, Or, Imply]
Effect = Union[NumericEffect, PropEffect]
NUMERIC_NODES = (Num, FluentRef, OpApp, TimeDelta, TotalTime, TotalActions)


@dataclass(frozen=True)
class HappeningSchema:
    name: str
    kind: str
    parameters: tuple[tuple[str, str], ...]
    precondition: Optional[Expr]
    effects: tuple[Effect, ...]


@dataclass(frozen=True)
class Metric:
    direction: str
    objective: Expr

    @property
    def minimize(self) -> bool:
        return self.direction == "minimize"


@dataclass(frozen=True)
class DomainModel:
    name: str
    requirements: tuple[str, ...]
    types: dict[str, str]
    constants: dict[str, str]
    predicates: dict[str, tuple[tuple[str, str], ...]]
    functions: dict[str, tuple[tuple[str, str], ...]]
    happenings: tuple[HappeningSchema, ...]
    warnings: tuple[str, ...] = field(default=(), compare=False)

    @property
    def temporal(self) -> bool:
        return TEMPORAL_REQUIREMENT in self.requirements

    @property
    def semantic_attachment(self) -> bool:
        return ATTACHMENT_REQUIREMENT in self.requirements

    def schemas(self, kind: str) -> list[HappeningSchema]:
        return [h for h in self.happenings if h.kind == kind]

    def is_subtype(self, child: str, ancestor: str) -> bool:
        seen = set()
        while child not in seen:
            if child == ancestor:
                return True
            seen.add(child)
            if child not in self.types:
                return False
            child = self.types[child]
        return False


@dataclass(frozen=True)
class ProblemModel:
    name: str
    domain_name: str
    objects: dict[str, str]
    init_atoms: tuple[AtomRef, ...]
    init_values: tuple[tuple[FluentRef, float], ...]
    goal: Optional[Expr]
    metric: Optional[Metric] = None
