"""Semantic attachments: external code computing part of each tick's dynamics.

An attachment sees every numeric fluent (by printed name, e.g. ``(flow)``
or ``(flow engine1)``) plus the time step, and returns new values for a
subset of the fluents it declared it may write.

Out-of-process attachments speak a line protocol over stdin/stdout:

* child, once at startup: ``hello <version> <name> <name> ...`` (its write-set)
* planner, per tick: ``tick <time> <name>=<value> ...`` (all fluents)
* child, per tick: ``<name>=<value> ...`` (possibly empty)

On the wire a fluent ``(f a b)`` is written ``f(a,b)`` and ``(f)`` as ``f``.
"""

from __future__ import annotations

import logging
import math
import shlex
import subprocess
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

from .expressions import InvalidState
from .grounding import GroundedProblem, GroundingError, fluent_from_name
from .pddl.printer import to_pddl

log = logging.getLogger(__name__)

PROTOCOL_VERSION = 1
ORDERS = ("before", "between", "after")

AttachmentFn = Callable[[Mapping[str, float], float], Mapping[str, float]]


class AttachmentError(ValueError):
    pass


class AttachmentProtocolError(RuntimeError):
    """The attachment process broke the line protocol; the run must stop."""


def canonical(name: str) -> str:
    return to_pddl(fluent_from_name(name))


def to_wire(name: str) -> str:
    ref = fluent_from_name(name)
    return ref.name if not ref.args else f"{ref.name}({','.join(ref.args)})"


def from_wire(token: str) -> str:
    if token.endswith(")") and "(" in token:
        head, _, rest = token[:-1].partition("(")
        return canonical(" ".join([head, *rest.split(",")]))
    return canonical(token)


class TickView(dict):
    """Read-only view of the fluents handed to an attachment; ``time`` is the tick start."""

    def __init__(self, items, time: float = 0.0):
        super().__init__(items)
        self.time = time


@dataclass
class Attachment:
    name: str
    writes: tuple[str, ...]
    fn: AttachmentFn

    def __post_init__(self):
        self.writes = tuple(canonical(w) for w in self.writes)


class AttachmentRegistry:
    """Attachments bound to one grounded problem, invoked in registration order."""

    def __init__(self, gp: GroundedProblem):
        self.gp = gp
        self.names = gp.variable_names
        self.attachments: list[tuple[Attachment, tuple[tuple[str, int], ...]]] = []
        self.failures = 0

    @property
    def active(self) -> bool:
        return self.gp.semantic_attachment and bool(self.attachments)

    def register(self, attachment: Attachment) -> "AttachmentRegistry":
        slots = []
        for name in attachment.writes:
            try:
                slots.append((name, self.gp.slot(name)))
            except (GroundingError, ValueError):
                raise AttachmentError(
                    f"attachment {attachment.name} writes unknown fluent {name}") from None
        if not self.gp.semantic_attachment:
            log.warning("attachment %s registered but the domain lacks :semantic-attachment; "
                        "it will not be invoked", attachment.name)
        self.attachments.append((attachment, tuple(slots)))
        return self

    def invoke(self, values: Sequence[float], dt: float, time: float = 0.0,
               trace: list | None = None) -> list[float]:
        """Apply every attachment in order; returns the updated value vector."""
        current = list(values)
        for attachment, slots in self.attachments:
            allowed = dict(slots)
            view = TickView(zip(self.names, current), time)
            try:
                result = attachment.fn(view, dt) or {}
                updates = []
                for key, value in result.items():
                    name = canonical(key)
                    if name not in allowed:
                        raise AttachmentError(f"{attachment.name} wrote {name} outside its write-set")
                    value = float(value)
                    if not math.isfinite(value):
                        raise AttachmentError(f"{attachment.name} produced non-finite {name}")
                    if self.gp.precision is not None:
                        value = round(value, self.gp.precision)
                    updates.append((allowed[name], value))
            except AttachmentProtocolError:
                raise
            except Exception as exc:
                self.failures += 1
                raise InvalidState(f"attachment {attachment.name} failed: {exc}") from exc
            for slot, value in updates:
                current[slot] = value
            if trace is not None:
                trace.append(("attachment", attachment.name))
        return current


class SubprocessAttachment:
    """An attachment served by a child process over the line protocol."""

    def __init__(self, command: str | Sequence[str], name: str = "subprocess"):
        argv = shlex.split(command) if isinstance(command, str) else list(command)
        self.name = name
        self.proc = subprocess.Popen(
            argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE, text=True, bufsize=1,
        )
        hello = self._readline().split()
        if len(hello) < 2 or hello[0] != "hello":
            self.close()
            raise AttachmentProtocolError(f"expected handshake 'hello <version> ...', got {hello!r}")
        if hello[1] != str(PROTOCOL_VERSION):
            self.close()
            raise AttachmentProtocolError(f"unsupported protocol version {hello[1]}")
        self.writes = tuple(from_wire(t) for t in hello[2:])

    def _readline(self) -> str:
        line = self.proc.stdout.readline()
        if not line:
            raise AttachmentProtocolError(f"attachment process {self.name} closed its output")
        return line.strip()

    def __call__(self, view: Mapping[str, float], dt: float) -> dict[str, float]:
        time = getattr(view, "time", 0.0)
        fields = " ".join(f"{to_wire(k)}={v!r}" for k, v in view.items())
        try:
            self.proc.stdin.write(f"tick {time!r} {fields}\n")
            self.proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise AttachmentProtocolError(f"attachment process {self.name} is gone") from exc
        reply = self._readline()
        out: dict[str, float] = {}
        for item in reply.split():
            key, sep, raw = item.partition("=")
            if not sep:
                raise AttachmentProtocolError(f"malformed assignment {item!r}")
            try:
                out[from_wire(key)] = float(raw)
            except ValueError:
                raise AttachmentProtocolError(f"malformed value in {item!r}") from None
        return out

    def attachment(self) -> Attachment:
        return Attachment(self.name, self.writes, self)

    def close(self) -> None:
        if self.proc.poll() is None:
            try:
                self.proc.stdin.close()
            except OSError:
                pass
            try:
                self.proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self.proc.kill()
                self.proc.wait()
        if self.proc.stdout:
            self.proc.stdout.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
