from __future__ import annotations

import math

import pytest

from hybridplan import Engine, SearchLimits, TIME_PASSING, corpus, ground
from hybridplan.pddl.parser import parse_domain, parse_problem
from hybridplan.search import OpenList, PlanQueue, SearchError, SearchNode, replay
from hybridplan.state import State

from helpers import grounded, mini


def node(g=0, tag=None) -> SearchNode:
    return SearchNode(State(0, (), 0, 0.0, 0), None, tag, g)


# -- transition function -----------------------------------------------------

def test_action_adds_proposition_without_advancing_time():
    gp = mini(predicates=("p",), effects="(p)")
    s = Engine(gp).transition(gp.init, gp.actions[0], 0)
    assert s.time == gp.init.time == 0.0
    assert gp.holds(s, "(p)")


def test_process_step_advances_time():
    gp = mini(functions=("x", "v"), kind="process", effects="(increase (x) (* #t (v)))",
              init={"v": 2}, dt=0.1)
    s = Engine(gp).transition(gp.init, gp.processes[0], 0.1)
    assert gp.value(s, "(x)") == 0.2
    assert s.time == pytest.approx(0.1)


def test_event_is_instantaneous():
    gp = mini(predicates=("p",), kind="event", effects="(p)", dt=0.5)
    s = Engine(gp).transition(gp.init, gp.events[0], 0)
    assert s.time == 0.0 and gp.holds(s, "(p)")


def test_transition_rejects_other_durations():
    gp = mini(predicates=("p",), effects="(p)")
    with pytest.raises(SearchError):
        Engine(gp).transition(gp.init, gp.actions[0], 0.5)


# -- time passing ------------------------------------------------------------

def test_idle_tick_only_advances_clock():
    gp = mini(functions=("x",), predicates=("p",), kind="process", precondition="(p)",
              effects="(increase (x) (* #t 1))", dt=0.25)
    s = Engine(gp).time_passing(gp.init)
    assert (s.bits, s.values, s.step, s.time) == (gp.init.bits, gp.init.values, 1, 0.25)


def test_event_fires_in_the_same_tick_as_the_process():
    gp = grounded("flag", dt=0.1)
    s = Engine(gp).time_passing(gp.init)
    assert gp.value(s, "(x)") == 1.1
    assert gp.holds(s, "(flag)") and gp.holds(s, "(beacon)")
    # chain depends on flag, which was false when the event pass started
    assert gp.value(s, "(v)") == 2


def test_event_cascade_repeats_passes():
    gp = grounded("flag", dt=0.1)
    s = Engine(gp, event_cascade=True).time_passing(gp.init)
    assert gp.value(s, "(v)") == 5


def test_non_temporal_mode_has_no_time_passing():
    gp = grounded("abs", registry=_abs_registry())
    engine = Engine(gp)
    achievers = [a for a, _ in engine.successors(gp.init)]
    assert TIME_PASSING not in achievers
    assert [a.name for a in achievers] == ["push_down", "push_up"]


def _abs_registry():
    from hybridplan.operators import DEFAULT_REGISTRY
    reg = DEFAULT_REGISTRY.copy()
    reg.register("abs", 1, abs)
    return reg


# -- validity and limits -------------------------------------------------------

def test_is_valid_boundaries():
    gp = mini(functions=("x",), dt=1.0)
    engine = Engine(gp)
    limits = SearchLimits(horizon=3, depth=2)
    at_t = State(0, (0.0,), 3, 3.0, 1)
    assert engine.is_valid(at_t, limits)
    assert not engine.is_valid(State(0, (0.0,), 4, 4.0, 1), limits)
    assert not engine.is_valid(State(0, (0.0,), 1, 1.0, 3), limits)
    assert not engine.is_valid(at_t, limits, visited={at_t.key})
    assert not engine.is_valid(State(0, (math.inf,), 1, 1.0, 1), limits)


def test_horizon_stops_time_passing():
    gp = mini(functions=("x",), dt=0.5)
    engine = Engine(gp)
    at_edge = State(0, (0.0,), 4, 2.0, 0)
    assert engine.can_pass_time(State(0, (0.0,), 3, 1.5, 0), horizon=2.0)
    assert not engine.can_pass_time(at_edge, horizon=2.0)


# -- metrics -----------------------------------------------------------------

METRIC_DOMAIN = """
(define (domain m) (:requirements :fluents :time)
  (:predicates (done))
  (:functions (fuel_remaining) (total_reward))
  (:action finish :parameters () :precondition (and) :effect (and (done))))
"""


def metric_problem(metric: str):
    dom = parse_domain(METRIC_DOMAIN)
    prob = parse_problem("(define (problem m) (:domain m)"
                         " (:init (= (fuel_remaining) 2) (= (total_reward) 5))"
                         f" (:goal (and (done))) {metric})", dom)
    return ground(dom, prob)


def test_metric_total_time():
    gp = metric_problem("(:metric minimize (total-time))")
    assert Engine(gp).metric_value(State(0, gp.init.values, 3, 3.0, 0), 1) == 3.0


def test_metric_product_maximized():
    gp = metric_problem("(:metric maximize (* (fuel_remaining) (total_reward)))")
    assert Engine(gp).metric_value(gp.init, 0) == 10


def test_metric_total_actions_excludes_time_passing():
    gp = metric_problem("(:metric minimize (total-actions))")
    engine = Engine(gp)
    finish = gp.actions[0]
    current = SearchNode(gp.init, None, None, 0)
    for achiever in [finish, TIME_PASSING] * 4 + [TIME_PASSING] * 3:
        nxt = (engine.time_passing(current.state) if achiever is TIME_PASSING
               else engine.apply_action(current.state, finish))
        n_actions = current.n_actions + (achiever is not TIME_PASSING)
        current = SearchNode(nxt, current, achiever, n_actions, 0, n_actions)
    plan = engine.extract_plan(current, engine.metric_value(current.state, current.n_actions))
    assert (plan.actions, plan.length, plan.metric, plan.makespan) == (4, 11, 4, 7.0)


def test_default_metric_is_makespan():
    gp = grounded("flag", dt=0.5)
    result = Engine(gp).plan(limits=SearchLimits(horizon=5))
    assert result.best.metric == result.best.makespan == 0.5


# -- open list ---------------------------------------------------------------

def test_open_list_orders():
    a, b, c = node(tag="a"), node(tag="b"), node(tag="c")
    bfs = OpenList("bfs")
    for n in (a, b, c):
        bfs.push(n)
    assert [bfs.pop().achiever for _ in range(3)] == ["a", "b", "c"]

    gbfs = OpenList("gbfs")
    gbfs.push(a, 2)
    gbfs.push(b, 1)
    assert gbfs.pop() is b

    astar = OpenList("astar")
    astar.push(node(g=1, tag="a"), 1)
    astar.push(node(g=0, tag="b"), 2)
    assert astar.pop().achiever == "a"


def test_plan_queue_capacity_and_improvements():
    from hybridplan.search import Plan
    queue = PlanQueue(capacity=2, minimize=True)
    plans = [Plan((), m, 0, m, 0, (i,)) for i, m in enumerate([5.0, 3.0, 4.0, 1.0])]
    assert [queue.push(p) for p in plans] == [True, True, False, True]
    assert [p.metric for p in queue] == [1.0, 3.0]
    assert [p.metric for p in queue.improvements] == [5.0, 3.0, 1.0]


# -- search ------------------------------------------------------------------

def test_car_drift_plan():
    gp = ground(*corpus.load("car-drift"), horizon=10)
    result = Engine(gp).plan("bfs")
    best = result.best
    assert [(s.time, s.name) for s in best.steps] == [(0.0, "accelerate")]
    assert best.makespan == 3.0
    states = replay(Engine(gp), best)
    assert gp.value(states[-1], "(d)") >= 3
    assert all(gp.value(s, "(d)") < 3 for s in states[:-1])


def test_goal_in_initial_state():
    gp = mini(functions=("x",))
    result = Engine(gp).plan()
    assert result.solved and result.best.steps == () and result.best.makespan == 0.0


def test_unreachable_goal_with_horizon():
    gp = ground(*corpus.load("car-drift"), horizon=1)
    result = Engine(gp).plan("bfs")
    assert not result.solved and result.status == "exhausted"


def test_gbfs_distance_heuristic_on_drift():
    gp = ground(*corpus.load("car-drift"), horizon=10)
    slot = gp.slot("(d)")

    def distance(state, _gp):
        return abs(3 - state.values[slot])

    expanded = []
    result = Engine(gp).plan("gbfs", heuristic=distance,
                             on_expand=lambda n: expanded.append(n.h))
    assert result.solved
    assert all(later <= earlier for earlier, later in zip(expanded, expanded[1:]))
    assert expanded[-1] == 0.0 and len(set(expanded)) > 2


def test_gbfs_requires_heuristic():
    gp = mini(functions=("x",))
    with pytest.raises(SearchError, match="heuristic"):
        Engine(gp).plan("gbfs")


def test_zero_heuristic_astar_matches_uniform_cost():
    gp = ground(*corpus.load("car"), horizon=6)
    astar = Engine(gp).plan("astar", heuristic=lambda s, g: 0.0)
    bfs = Engine(gp).plan("bfs")
    assert astar.best.actions <= bfs.best.actions


def test_determinism():
    gp = ground(*corpus.load("vending"), horizon=8)
    one = Engine(gp).plan(record_order=True)
    two = Engine(gp).plan(record_order=True)
    assert one.stats.expansion_hash == two.stats.expansion_hash
    assert one.best == two.best
    assert one.stats.expanded == two.stats.expanded


def test_timeout_stops_search():
    gp = ground(*corpus.load("car"))
    result = Engine(gp).plan(anytime=True, limits=SearchLimits(timeout=0.2))
    assert result.status == "timeout"
