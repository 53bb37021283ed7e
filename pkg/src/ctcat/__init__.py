"""Streaming open-vocabulary keyword spotting.

The engine keeps, for every incoming frame, the best CTC alignment of the
enrolled keyword ending at that frame, pools frame-level acoustic embeddings
along that path, and scores the match as alignment log-score plus a weighted
mean cosine similarity against the keyword's text embeddings.
"""

from .aligner import AlignerBank, Frame, FrameReadout, available_backends
from .errors import (
    CountMismatch,
    CtcatError,
    DegenerateBatch,
    DegenerateTrialSet,
    DimensionMismatch,
    EmptyKeyword,
    HeaderMismatch,
    InstanceTooLarge,
    InvalidReadout,
    NonMonotonicTime,
    SpanOutOfRange,
    SpanOverlap,
    UnsupportedSymbol,
    ZeroNormWarning,
)
from .graph import DecodingGraph, GraphState, StateKind, build_graph
from .logspace import LOG_ZERO, VALID_MIN
from .vocab import (
    BASE_SYMBOLS,
    KeywordTokens,
    Vocabulary,
    default_vocabulary,
    detokenize,
    normalize_keyword,
    tokenize,
)

__version__ = "0.1.0"

__all__ = [
    "AlignerBank",
    "BASE_SYMBOLS",
    "CountMismatch",
    "CtcatError",
    "DecodingGraph",
    "DegenerateBatch",
    "DegenerateTrialSet",
    "DimensionMismatch",
    "EmptyKeyword",
    "Frame",
    "FrameReadout",
    "GraphState",
    "HeaderMismatch",
    "InstanceTooLarge",
    "InvalidReadout",
    "KeywordTokens",
    "LOG_ZERO",
    "NonMonotonicTime",
    "SpanOutOfRange",
    "SpanOverlap",
    "StateKind",
    "UnsupportedSymbol",
    "VALID_MIN",
    "Vocabulary",
    "ZeroNormWarning",
    "available_backends",
    "build_graph",
    "default_vocabulary",
    "detokenize",
    "normalize_keyword",
    "tokenize",
]
