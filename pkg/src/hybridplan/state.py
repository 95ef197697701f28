"""Search states of the discretized system."""

from __future__ import annotations

import math


class State:
    """Propositions as a bitset, numeric fluents as a tuple, and the clock.

    ``step`` counts elapsed time steps, so ``time == step * dt`` holds
    exactly up to float formatting; equality and hashing use
    ``(bits, values, step)``.
    """

    __slots__ = ("bits", "values", "step", "time", "depth", "_key")

    def __init__(self, bits: int, values: tuple, step: int, time: float, depth: int):
        self.bits = bits
        self.values = values
        self.step = step
        self.time = time
        self.depth = depth
        self._key = (bits, values, step)

    @property
    def key(self) -> tuple:
        return self._key

    def __eq__(self, other) -> bool:
        return isinstance(other, State) and self._key == other._key

    def __hash__(self) -> int:
        return hash(self._key)

    def __repr__(self) -> str:
        return f"State(t={self.time}, depth={self.depth}, bits={self.bits:#x}, values={self.values})"

    def finite(self) -> bool:
        return all(math.isfinite(x) for x in self.values)
