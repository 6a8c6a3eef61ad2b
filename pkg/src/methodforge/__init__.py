"""methodforge: procedural memory middleware for LLM chat.

Mines reusable problem/solution methods from interactions, stores them in a
semantically organized tree per scope, injects the best match into future
queries, and folds user rankings back into method effectiveness.
"""

from .config import Settings, load_settings
from .model import (
    ContentSource,
    ExternalRef,
    Method,
    MethodFormat,
    ProblemFeatures,
    ProblemStatement,
    RefinementEdge,
    ScoreCard,
    Scope,
    Solution,
    SolutionPart,
    make_method,
    make_problem,
    method_id,
    validate_method,
)
from .repository import MethodRepository

__version__ = "0.1.0"

__all__ = [
    "ContentSource",
    "ExternalRef",
    "Method",
    "MethodFormat",
    "MethodRepository",
    "ProblemFeatures",
    "ProblemStatement",
    "RefinementEdge",
    "ScoreCard",
    "Scope",
    "Settings",
    "Solution",
    "SolutionPart",
    "load_settings",
    "make_method",
    "make_problem",
    "method_id",
    "validate_method",
]
