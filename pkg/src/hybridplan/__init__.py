"""Discretization-based planner for PDDL+ hybrid domains."""

from .grounding import GroundedProblem, ground
from .operators import DEFAULT_REGISTRY, OperatorRegistry
from .pddl import parse_domain, parse_problem, tokenize
from .search import Engine, Plan, PlanQueue, SearchLimits, TIME_PASSING

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_REGISTRY", "Engine", "GroundedProblem", "OperatorRegistry", "Plan", "PlanQueue",
    "SearchLimits", "TIME_PASSING", "ground", "parse_domain", "parse_problem", "tokenize",
]
