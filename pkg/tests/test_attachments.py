from __future__ import annotations

import logging
import random
import sys

import pytest

from hybridplan import Engine, ground
from hybridplan.attachments import (Attachment, AttachmentError, AttachmentProtocolError,
                                    AttachmentRegistry, SubprocessAttachment, from_wire, to_wire)
from hybridplan.expressions import InvalidState
from hybridplan.pddl.parser import load
from hybridplan.search import replay

from helpers import DATA, grounded


def flow_attachment() -> Attachment:
    return Attachment("flow", ("(flow)",), lambda view, dt: {"(flow)": view["(pump_speed)"] * 0.5})


def test_flow_computed_before_processes():
    gp = grounded("pump")
    registry = AttachmentRegistry(gp).register(flow_attachment())
    trace: list = []
    s = Engine(gp, attachments=registry, trace=trace).time_passing(gp.init)
    assert gp.value(s, "(flow)") == 2.0
    assert gp.value(s, "(level)") == 2.0
    kinds = [entry[0] for entry in trace]
    assert kinds == ["tick", "attachment", "process", "event-snapshot"]


@pytest.mark.parametrize("order, expected", [
    ("before", ["attachment", "process", "event-snapshot"]),
    ("between", ["process", "attachment", "event-snapshot"]),
    ("after", ["process", "event-snapshot", "attachment"]),
])
def test_attachment_order_flag(order, expected):
    gp = grounded("pump")
    registry = AttachmentRegistry(gp).register(flow_attachment())
    trace: list = []
    Engine(gp, attachments=registry, attachment_order=order, trace=trace).time_passing(gp.init)
    assert [entry[0] for entry in trace][1:] == expected


def test_write_set_must_exist():
    gp = grounded("pump")
    with pytest.raises(AttachmentError, match="pressure"):
        AttachmentRegistry(gp).register(Attachment("p", ("(pressure)",), lambda v, dt: {}))


def test_missing_requirement_warns_and_skips(caplog):
    plain = ground(*load(DATA / "pump_plain_domain.pddl", DATA / "pump_problem.pddl"))
    assert not plain.semantic_attachment
    calls = []
    att = Attachment("flow", ("(flow)",), lambda view, dt: calls.append(dt) or {"(flow)": 9})
    with caplog.at_level(logging.WARNING):
        registry = AttachmentRegistry(plain).register(att)
    assert "semantic-attachment" in caplog.text
    s = Engine(plain, attachments=registry).time_passing(plain.init)
    assert calls == [] and plain.value(s, "(flow)") == 0.0


def test_identity_attachment_changes_nothing():
    gp = grounded("pump")
    registry = AttachmentRegistry(gp).register(Attachment("id", ("(flow)",), lambda v, dt: {}))
    assert registry.invoke(gp.init.values, gp.dt) == list(gp.init.values)


def test_frame_property_is_bit_exact():
    gp = grounded("pump")
    rng = random.Random(11)
    registry = AttachmentRegistry(gp).register(
        Attachment("noisy", ("(flow)",), lambda v, dt: {"(flow)": rng.uniform(-1e6, 1e6)}))
    flow = gp.slot("(flow)")
    for _ in range(200):
        values = [rng.uniform(-1e9, 1e9) for _ in gp.init.values]
        out = registry.invoke(values, gp.dt)
        for i, (before, after) in enumerate(zip(values, out)):
            if i != flow:
                assert before.hex() == after.hex()


def test_writes_outside_write_set_invalidate():
    gp = grounded("pump")
    registry = AttachmentRegistry(gp).register(
        Attachment("rogue", ("(flow)",), lambda v, dt: {"(level)": 100}))
    with pytest.raises(InvalidState):
        registry.invoke(gp.init.values, gp.dt)
    assert registry.failures == 1


def test_disjoint_attachments_commute():
    gp = grounded("pump")
    first = Attachment("a", ("(flow)",), lambda v, dt: {"(flow)": v["(pump_speed)"] * 0.5})
    second = Attachment("b", ("(spare)",), lambda v, dt: {"(spare)": v["(pump_speed)"] + 1})
    one = AttachmentRegistry(gp).register(first).register(second).invoke(gp.init.values, 1.0)
    two = AttachmentRegistry(gp).register(second).register(first).invoke(gp.init.values, 1.0)
    assert one == two


def test_wire_names_round_trip():
    assert to_wire("(flow engine1)") == "flow(engine1)"
    assert from_wire("flow(engine1)") == "(flow engine1)"
    assert from_wire("level") == "(level)"


def test_subprocess_round_trip():
    gp = grounded("pump")
    with SubprocessAttachment([sys.executable, str(DATA / "flow_child.py")], "child") as child:
        assert child.writes == ("(flow)",)
        registry = AttachmentRegistry(gp).register(child.attachment())
        s = Engine(gp, attachments=registry).time_passing(gp.init)
    assert gp.value(s, "(flow)") == 2.0
    assert gp.value(s, "(level)") == 2.0


def test_subprocess_handshake_is_checked():
    with pytest.raises(AttachmentProtocolError, match="hello"):
        SubprocessAttachment([sys.executable, str(DATA / "bad_child.py")])


def test_plan_with_attachment():
    gp = grounded("pump", horizon=10)
    registry = AttachmentRegistry(gp).register(flow_attachment())
    engine = Engine(gp, attachments=registry)
    result = engine.plan()
    assert result.best.makespan == 3.0
    assert gp.holds(replay(engine, result.best)[-1], "(full)")
