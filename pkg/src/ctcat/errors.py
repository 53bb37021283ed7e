"""Exception types and warning categories used across the package."""

from __future__ import annotations


class CtcatError(Exception):
    """Base class for all errors raised by this package."""


class EmptyKeyword(CtcatError, ValueError):
    """Keyword text is empty after normalization."""


class UnsupportedSymbol(CtcatError, ValueError):
    """Keyword text contains a character outside the vocabulary."""

    def __init__(self, symbol: str, position: int):
        super().__init__(
            f"unsupported symbol {symbol!r} at position {position} of the normalized text"
        )
        self.symbol = symbol
        self.position = position


class DimensionMismatch(CtcatError, ValueError):
    """Vector or matrix dimensions do not match the configured sizes."""


class NonMonotonicTime(CtcatError, ValueError):
    """A frame arrived out of order (frame index must advance by one)."""


class InvalidReadout(CtcatError, ValueError):
    """An operation required a valid readout but the final state is unreached."""


class InstanceTooLarge(CtcatError, ValueError):
    """A brute-force oracle was asked to enumerate an intractable instance."""


class HeaderMismatch(CtcatError, ValueError):
    """A stream or enrollment file does not match the expected format/vocabulary."""


class CountMismatch(CtcatError, ValueError):
    """The number of provided text-embedding rows differs from the token count."""


class SpanOverlap(CtcatError, ValueError):
    """Synthesis spans overlap or are out of order."""


class SpanOutOfRange(CtcatError, ValueError):
    """Synthesis spans fall outside the stream timeline."""


class DegenerateTrialSet(CtcatError, ValueError):
    """Metrics need at least one positive and one negative trial."""


class DegenerateBatch(CtcatError, ValueError):
    """The similarity-loss mini-batch has no usable anchor/counterpart pairs."""


class ZeroNormWarning(UserWarning):
    """A pooled embedding had (near-)zero norm; its cosine was defined as 0."""
