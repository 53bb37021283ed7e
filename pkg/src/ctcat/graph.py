"""Decoding graph: the padded left-to-right state chain built for one keyword.

The core chain interleaves blanks between the keyword tokens
(y1, blank, y2, ..., blank, yU; 2U-1 states) and is wrapped by one padding
state at each end. The leading padding state absorbs audio before the keyword
starts; the trailing one closes the last token's embedding accumulation.

Transition topology (listed as incoming sources, ordered self, previous,
skip — the order also fixes argmax tie-breaking in the aligner):

* blank states:          self, previous non-blank
* non-blank core states: self, previous, plus the skip over the preceding
  blank unless the two tokens are equal (the usual CTC constraint: without
  it "ll" would collapse to "l")
* trailing padding:      self, last keyword token only — a skip here would
  jump over yU and admit paths that never pronounce the final token
* leading padding:       self only; the aligner re-seeds it every frame so a
  keyword may begin anywhere in the stream
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .vocab import KeywordTokens, Vocabulary, default_vocabulary


class StateKind(IntEnum):
    PAD_START = 0
    NON_BLANK = 1
    BLANK = 2
    PAD_END = 3


@dataclass(frozen=True)
class GraphState:
    index: int
    token_id: int
    kind: StateKind
    owner: int | None  # 0-based keyword-token index; None for padding states
    allowed_sources: tuple[int, ...]


@dataclass(frozen=True)
class DecodingGraph:
    keyword: KeywordTokens
    vocab: Vocabulary
    states: tuple[GraphState, ...]

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def L_core(self) -> int:
        return len(self.states) - 2

    @property
    def U(self) -> int:
        return self.keyword.U

    def kernel_arrays(self) -> dict[str, np.ndarray]:
        """Flat int64 views of the topology, consumed by the step kernels."""
        n = self.n_states
        token_of = np.empty(n, dtype=np.int64)
        kind = np.empty(n, dtype=np.int64)
        skip = np.full(n, -1, dtype=np.int64)
        owner = np.full(n, -1, dtype=np.int64)
        for s in self.states:
            token_of[s.index] = s.token_id
            kind[s.index] = int(s.kind)
            if s.owner is not None:
                owner[s.index] = s.owner
            for src in s.allowed_sources:
                if src == s.index - 2:
                    skip[s.index] = src
        return {"token_of": token_of, "kind": kind, "skip": skip, "owner": owner}


def build_graph(kw: KeywordTokens, vocab: Vocabulary | None = None) -> DecodingGraph:
    """Build the padded decoding graph for a tokenized keyword."""
    vocab = vocab or default_vocabulary()
    blank, pad = vocab.blank_id, vocab.padding_id
    states: list[GraphState] = [
        GraphState(0, pad, StateKind.PAD_START, None, (0,))
    ]
    for u, tok in enumerate(kw.tokens):
        i = len(states)
        sources = (i, i - 1)
        if u > 0 and kw.tokens[u - 1] != tok:
            sources = (i, i - 1, i - 2)
        states.append(GraphState(i, tok, StateKind.NON_BLANK, u, sources))
        if u < kw.U - 1:
            i = len(states)
            states.append(GraphState(i, blank, StateKind.BLANK, u, (i, i - 1)))
    i = len(states)
    states.append(GraphState(i, pad, StateKind.PAD_END, None, (i, i - 1)))
    return DecodingGraph(keyword=kw, vocab=vocab, states=tuple(states))
