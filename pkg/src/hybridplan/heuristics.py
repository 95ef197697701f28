"""Heuristic functions selectable by integer index.

A heuristic receives a state and the grounded problem and returns a number;
lower means closer to a goal. New heuristics are added with
:func:`register_heuristic`.
"""

from __future__ import annotations

from typing import TYPE_CHECKING, Callable

from .expressions import eval_condition

if TYPE_CHECKING:
    from .grounding import GroundedProblem
    from .state import State

Heuristic = Callable[["State", "GroundedProblem"], float]

HEURISTICS: dict[int, tuple[str, Heuristic]] = {}


class HeuristicError(ValueError):
    pass


def register_heuristic(index: int, name: str, fn: Heuristic) -> None:
    if index in HEURISTICS:
        raise HeuristicError(f"heuristic index {index} already used by {HEURISTICS[index][0]}")
    HEURISTICS[index] = (name, fn)


def get_heuristic(index: int) -> Heuristic:
    try:
        return HEURISTICS[index][1]
    except KeyError:
        listing = ", ".join(f"{i}={n}" for i, (n, _) in sorted(HEURISTICS.items()))
        raise HeuristicError(f"no heuristic with index {index}; registered: {listing}") from None


def blind(state, gp) -> float:
    return 0.0


def goal_count(state, gp) -> float:
    """Number of goal conditions not yet satisfied."""
    return float(sum(1 for c in gp.goal if not eval_condition(c, state.bits, state.values)))


register_heuristic(0, "blind", blind)
register_heuristic(1, "goal-count", goal_count)
