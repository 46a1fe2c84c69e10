from .compose import ComposedProblem, CompositionError, compose_problem, find_chain, reasoning_length
from .filters import FilterDecision, alignment_filter, consistency_filter, problem_record
from .generate import SubProblem, SynthesisError, TooSimpleError, enumerate_candidates, generate_subproblems
from .templates import (
    ALL_PRINCIPLES,
    TEMPLATES,
    Principle,
    default_registry,
    load_registry,
    parse_registry,
)

__all__ = [
    "ALL_PRINCIPLES",
    "ComposedProblem",
    "CompositionError",
    "FilterDecision",
    "Principle",
    "SubProblem",
    "SynthesisError",
    "TEMPLATES",
    "TooSimpleError",
    "alignment_filter",
    "compose_problem",
    "consistency_filter",
    "default_registry",
    "enumerate_candidates",
    "find_chain",
    "generate_subproblems",
    "load_registry",
    "parse_registry",
    "problem_record",
    "reasoning_length",
]
