"""Precondition tree: a trie over sorted grounded preconditions.

Happenings whose sorted precondition lists share a prefix share the path
for that prefix, so a single falsified condition discards every happening
below it.
"""

from __future__ import annotations

from typing import Iterable, Optional

from .expressions import EVAL_ERRORS, CompiledExpr, EvalStats


class PreconditionNode:
    __slots__ = ("expr", "happenings", "children")

    def __init__(self, expr: Optional[CompiledExpr] = None):
        self.expr = expr
        self.happenings: list[int] = []
        self.children: dict[str, PreconditionNode] = {}

    @property
    def key(self) -> str:
        return self.expr.key if self.expr is not None else ""

    def walk(self) -> Iterable["PreconditionNode"]:
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(list(node.children.values())))

    def size(self) -> int:
        return sum(1 for _ in self.walk())

    def __repr__(self) -> str:
        return f"PreconditionNode({self.key!r}, happenings={self.happenings}, children={len(self.children)})"


def lexicographic(conditions: list[CompiledExpr]) -> list[CompiledExpr]:
    return sorted(conditions, key=lambda c: c.key)


def build_tree(happenings, order=lexicographic) -> PreconditionNode:
    """Insert each happening along the path of its ordered preconditions."""
    root = PreconditionNode()
    for h in happenings:
        node = root
        for cond in order(list(h.conditions)):
            child = node.children.get(cond.key)
            if child is None:
                child = node.children[cond.key] = PreconditionNode(cond)
            node = child
        node.happenings.append(h.id)
    return root


def applicable(root: PreconditionNode, b: int, v, stats: EvalStats | None = None,
               counter: list[int] | None = None) -> list[int]:
    """Ids of happenings whose whole precondition path holds in ``(b, v)``.

    ``counter[0]`` is incremented per condition evaluated when given.
    """
    out = list(root.happenings)
    frontier = list(root.children.values())
    pop, extend = frontier.pop, frontier.extend
    while frontier:
        node = pop()
        if counter is not None:
            counter[0] += 1
        try:
            ok = node.expr.fn(b, v)
        except EVAL_ERRORS:
            if stats is not None:
                stats.condition_errors += 1
            ok = False
        if ok:
            if node.happenings:
                out.extend(node.happenings)
            if node.children:
                extend(node.children.values())
    out.sort()
    return out


def applicable_linear(happenings, b: int, v, stats: EvalStats | None = None,
                      counter: list[int] | None = None) -> list[int]:
    """Check each happening's conditions in order, stopping at the first false one."""
    out = []
    for h in happenings:
        for cond in h.conditions:
            if counter is not None:
                counter[0] += 1
            try:
                if not cond.fn(b, v):
                    break
            except EVAL_ERRORS:
                if stats is not None:
                    stats.condition_errors += 1
                break
        else:
            out.append(h.id)
    return out


class Applicability:
    """Applicability test for one happening kind, tree-backed or linear."""

    def __init__(self, happenings, use_tree: bool, stats: EvalStats | None = None):
        self.happenings = list(happenings)
        self.use_tree = use_tree
        self.stats = stats
        self.tree = build_tree(self.happenings) if use_tree else None
        # compiled ahead of search so the linear scan skips the lazy property
        self._prepared = [(h.id, tuple(c.fn for c in h.conditions)) for h in self.happenings]

    def __call__(self, b: int, v) -> list[int]:
        if self.tree is not None:
            return applicable(self.tree, b, v, self.stats)
        out = []
        for hid, conds in self._prepared:
            try:
                for fn in conds:
                    if not fn(b, v):
                        break
                else:
                    out.append(hid)
            except EVAL_ERRORS:
                if self.stats is not None:
                    self.stats.condition_errors += 1
        return out
