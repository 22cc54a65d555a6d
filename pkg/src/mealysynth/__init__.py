"""Mealy machine synthesis from LTL specifications and example traces.

Two-phase synthesis: example traces are generalized by realizability-aware
state merging into a partial machine, which is then completed into a full
Mealy machine realizing the specification.  Specifications are LTL formulas
or universal co-Büchi automata, reduced incrementally to safety via counting
functions and solved with antichain-represented safety games.
"""

from .ltl import (
    Alphabet,
    Formula,
    LassoWord,
    LtlParseError,
    eval_lasso,
    parse_formula,
    to_nnf,
)

__all__ = [
    "Alphabet",
    "Formula",
    "LassoWord",
    "LtlParseError",
    "eval_lasso",
    "parse_formula",
    "to_nnf",
]
