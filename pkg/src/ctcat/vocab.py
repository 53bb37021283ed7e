"""Character vocabulary and keyword tokenization.

The default inventory is 28 base symbols (lowercase a-z, space, apostrophe)
plus two specials, blank and padding, for 30 ids total. Smaller vocabularies
(used heavily by the brute-force test oracles) are built by passing a shorter
symbol string.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass

from .errors import EmptyKeyword, UnsupportedSymbol

BASE_SYMBOLS = "abcdefghijklmnopqrstuvwxyz '"

_WHITESPACE = re.compile(r"\s+")


def normalize_keyword(text: str) -> str:
    """Lowercase, trim, and collapse internal whitespace runs to one space."""
    return _WHITESPACE.sub(" ", text.lower()).strip()


@dataclass(frozen=True)
class Vocabulary:
    """Base symbol inventory plus the blank and padding specials.

    Base symbols occupy ids 0..len(symbols)-1, blank and padding take the two
    ids after them.
    """

    symbols: str = BASE_SYMBOLS

    def __post_init__(self):
        if len(set(self.symbols)) != len(self.symbols):
            raise ValueError("vocabulary symbols must be unique")
        if not self.symbols:
            raise ValueError("vocabulary needs at least one base symbol")

    @property
    def blank_id(self) -> int:
        return len(self.symbols)

    @property
    def padding_id(self) -> int:
        return len(self.symbols) + 1

    @property
    def size(self) -> int:
        """Total id count including blank and padding."""
        return len(self.symbols) + 2

    @property
    def space_id(self) -> int | None:
        i = self.symbols.find(" ")
        return i if i >= 0 else None

    def id_of(self, symbol: str) -> int:
        i = self.symbols.find(symbol)
        if i < 0:
            raise KeyError(symbol)
        return i

    def symbol_of(self, token_id: int) -> str:
        return self.symbols[token_id]

    def is_base(self, token_id: int) -> bool:
        return 0 <= token_id < len(self.symbols)

    def fingerprint(self) -> str:
        """Stable hash of the inventory, stored in enrollment files."""
        payload = f"{self.symbols}\x00blank={self.blank_id}\x00pad={self.padding_id}"
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def default_vocabulary() -> Vocabulary:
    return Vocabulary()


@dataclass(frozen=True)
class KeywordTokens:
    """A normalized keyword and its base-token id sequence (no specials)."""

    text: str
    tokens: tuple[int, ...]

    @property
    def U(self) -> int:
        return len(self.tokens)


def tokenize(text: str, vocab: Vocabulary | None = None) -> KeywordTokens:
    """Normalize keyword text and map it to base-token ids.

    Raises EmptyKeyword when nothing is left after normalization and
    UnsupportedSymbol (with the offending position) for characters outside
    the inventory.
    """
    vocab = vocab or default_vocabulary()
    normalized = normalize_keyword(text)
    if not normalized:
        raise EmptyKeyword(f"keyword {text!r} is empty after normalization")
    tokens = []
    for pos, ch in enumerate(normalized):
        try:
            tokens.append(vocab.id_of(ch))
        except KeyError:
            raise UnsupportedSymbol(ch, pos) from None
    return KeywordTokens(text=normalized, tokens=tuple(tokens))


def detokenize(tokens: tuple[int, ...] | list[int], vocab: Vocabulary | None = None) -> str:
    vocab = vocab or default_vocabulary()
    return "".join(vocab.symbol_of(t) for t in tokens)
