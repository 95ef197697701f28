from __future__ import annotations

import random

import pytest

from hybridplan import ground
from hybridplan.pddl.parser import parse_domain, parse_problem
from hybridplan.ptree import Applicability, applicable, applicable_linear, build_tree
from hybridplan.state import State

POOL = ["(p)", "(q)", "(r)", "(s)", "(>= (x) 1)", "(< (x) 3)", "(> (y) (x))",
        "(= (y) 2)", "(not (q))", "(> (/ 1 (y)) 0.4)"]


def actions_domain(preconditions: list[list[str]]):
    acts = " ".join(
        f"(:action a{i} :parameters () :precondition (and {' '.join(pre)}) :effect (and))"
        for i, pre in enumerate(preconditions))
    dom = parse_domain("(define (domain t) (:requirements :fluents)"
                       " (:predicates (p) (q) (r) (s)) (:functions (x) (y)) " + acts + ")")
    prob = parse_problem("(define (problem t) (:domain t) (:init (= (x) 0) (= (y) 0))"
                         " (:goal (and)))", dom)
    return ground(dom, prob, prune=False)


def state(gp, atoms=(), x=0.0, y=0.0) -> State:
    bits = 0
    for a in atoms:
        bits |= 1 << gp.tables.propositions[next(k for k in gp.tables.propositions if k.name == a)]
    values = [0.0, 0.0]
    values[gp.slot("(x)")], values[gp.slot("(y)")] = x, y
    return State(bits, tuple(values), 0, 0.0, 0)


def test_shared_prefix_branches():
    gp = actions_domain([["(p)", "(q)"], ["(p)", "(r)"]])
    root = build_tree(gp.actions)
    assert root.size() == 4
    (p,) = root.children.values()
    assert p.key == "(p)" and p.happenings == []
    assert {k: n.happenings for k, n in p.children.items()} == {"(q)": [0], "(r)": [1]}


def test_prefix_trajectory():
    gp = actions_domain([["(p)", "(q)"], ["(p)"]])
    root = build_tree(gp.actions)
    (p,) = root.children.values()
    assert p.happenings == [1]
    assert p.children["(q)"].happenings == [0]


def test_equal_preconditions_share_node():
    gp = actions_domain([["(p)"], ["(p)"]])
    root = build_tree(gp.actions)
    assert root.size() == 2
    assert root.children["(p)"].happenings == [0, 1]


def test_traversal_examples():
    gp = actions_domain([["(p)", "(q)"], ["(p)", "(r)"]])
    root = build_tree(gp.actions)
    s = state(gp, atoms=("p", "q"))
    assert applicable(root, s.bits, s.values) == [0]
    assert applicable_linear(gp.actions, s.bits, s.values) == [0]
    counter = [0]
    none = state(gp)
    assert applicable(root, none.bits, none.values, counter=counter) == []
    assert counter == [1]
    assert applicable(build_tree([]), none.bits, none.values) == []


def test_empty_precondition_lands_in_root():
    gp = actions_domain([[], ["(p)"]])
    root = build_tree(gp.actions)
    assert root.happenings == [0]
    s = state(gp)
    assert applicable(root, s.bits, s.values) == applicable_linear(gp.actions, s.bits, s.values) == [0]


def test_structure_invariants():
    rng = random.Random(3)
    pres = [rng.sample(POOL, rng.randint(0, 5)) for _ in range(60)]
    gp = actions_domain(pres)
    root = build_tree(gp.actions)
    nodes = list(root.walk())
    assert sum(len(n.happenings) for n in nodes) == len(gp.actions)

    def check(node, path):
        for h in node.happenings:
            assert sorted(gp.actions[h].condition_keys()) == path
        for key, child in node.children.items():
            assert key == child.key
            assert not path or path[-1] < key
            check(child, path + [key])

    check(root, [])


def test_tree_evaluates_fewer_conditions_when_shared_head_fails():
    gp = actions_domain([["(p)", "(q)"], ["(p)", "(r)"], ["(p)", "(s)", "(q)"]])
    s = state(gp, atoms=("q", "r", "s"), x=2)
    tree_count, linear_count = [0], [0]
    applicable(build_tree(gp.actions), s.bits, s.values, counter=tree_count)
    applicable_linear(gp.actions, s.bits, s.values, counter=linear_count)
    assert tree_count[0] == 1 < linear_count[0] == 3


@pytest.mark.parametrize("seed", range(5))
def test_random_equivalence(seed):
    rng = random.Random(seed)
    pres = [rng.sample(POOL, rng.randint(0, 6)) for _ in range(rng.randint(1, 200))]
    gp = actions_domain(pres)
    root = build_tree(gp.actions)
    tree_app = Applicability(gp.actions, True)
    linear_app = Applicability(gp.actions, False)
    for _ in range(200):
        atoms = [a for a in "pqrs" if rng.random() < 0.5]
        s = state(gp, atoms, x=rng.choice([0, 1, 2, 3, 2.5]), y=rng.choice([0, 1, 2, 4]))
        expected = applicable_linear(gp.actions, s.bits, s.values)
        assert applicable(root, s.bits, s.values) == expected
        assert tree_app(s.bits, s.values) == linear_app(s.bits, s.values) == expected
