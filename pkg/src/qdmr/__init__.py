"""QDMR toolkit: parse, validate, compile, execute, score, and serve question
decompositions."""

from qdmr.core import (
    Qdmr,
    QdmrMode,
    QdmrStep,
    Question,
    Lexicon,
    parse_qdmr,
    serialize_qdmr,
    build_lexicon,
    check_lexicon,
)

__version__ = "0.1.0"

__all__ = [
    "Qdmr",
    "QdmrMode",
    "QdmrStep",
    "Question",
    "Lexicon",
    "parse_qdmr",
    "serialize_qdmr",
    "build_lexicon",
    "check_lexicon",
    "__version__",
]
