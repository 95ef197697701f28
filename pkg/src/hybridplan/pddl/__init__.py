from .parser import load, parse_domain, parse_problem
from .printer import domain_to_pddl, problem_to_pddl, to_pddl
from .tokenizer import PDDLSyntaxError, Token, tokenize

__all__ = [
    "PDDLSyntaxError", "Token", "domain_to_pddl", "load", "parse_domain", "parse_problem",
    "problem_to_pddl", "to_pddl", "tokenize",
]
