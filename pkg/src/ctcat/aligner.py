"""Streaming Viterbi aligner over a keyword decoding graph.

Each frame carries a log-posterior vector over the extended vocabulary and
one acoustic embedding. Per frame the bank updates every state's accumulated
log-score (argmax over its allowed sources, ties preferring the self-loop,
then the nearer source), inherits the winning source's per-token embedding
accumulators and first-entry times, and exposes a readout from the trailing
padding state. Nothing ever looks at past frames again, so feeding a stream
in any block sizes produces identical results.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._core import available_backends, make_kernel
from .errors import DimensionMismatch, InvalidReadout, NonMonotonicTime
from .graph import DecodingGraph
from .logspace import LOG_ZERO


@dataclass(frozen=True)
class Frame:
    """One time step: 1-based index, V*-length log-posteriors, D-length embedding."""

    t: int
    log_posteriors: np.ndarray
    embedding: np.ndarray


@dataclass(frozen=True)
class FrameReadout:
    """Best-path summary ending at frame t, taken from the trailing pad state.

    ``sums``/``counts`` hold each keyword token's accumulated embedding and
    absorbed frame count along the best path (blank frames count toward the
    preceding token); ``start_times`` are the first-entry frames. All three
    are zero when ``valid`` is False (the final state is unreached).
    """

    t: int
    z_ctc: float
    valid: bool
    sums: np.ndarray = field(repr=False)
    counts: np.ndarray
    start_times: np.ndarray

    @property
    def means(self) -> np.ndarray:
        if not self.valid:
            raise InvalidReadout(f"no path reaches the final state at t={self.t}")
        return self.sums / self.counts[:, None]

    @property
    def path_start(self) -> int:
        """Frame spent in the leading padding state (one before the first token)."""
        if not self.valid:
            raise InvalidReadout(f"no path reaches the final state at t={self.t}")
        return int(self.start_times[0]) - 1


class AlignerBank:
    """Mutable single-stream aligner state for one keyword.

    Not safe for concurrent step calls; run one bank per stream. Memory is
    O(U^2 * D), fixed at construction, independent of how many frames pass
    through.
    """

    def __init__(self, graph: DecodingGraph, dim: int, backend: str = "auto"):
        if dim < 1:
            raise ValueError("embedding dimension must be >= 1")
        self.graph = graph
        self.dim = int(dim)
        arrays = graph.kernel_arrays()
        self._kernel = make_kernel(
            arrays["token_of"],
            arrays["kind"],
            arrays["skip"],
            arrays["owner"],
            graph.U,
            dim,
            backend=backend,
        )

    @property
    def U(self) -> int:
        return self.graph.U

    @property
    def vocab_size(self) -> int:
        return self.graph.vocab.size

    @property
    def current_t(self) -> int:
        return self._kernel.t

    @property
    def backend(self) -> str:
        return self._kernel.backend_name

    @property
    def nbytes(self) -> int:
        """Fixed allocation footprint of the DP state (buffers only)."""
        return self._kernel.nbytes()

    def reset(self) -> "AlignerBank":
        """Return the bank to its freshly constructed state."""
        self._kernel.reset()
        return self

    def _check_block(self, lp: np.ndarray, emb: np.ndarray):
        if lp.ndim != 2 or lp.shape[1] != self.vocab_size:
            raise DimensionMismatch(
                f"log-posterior block must be (T, {self.vocab_size}), got {lp.shape}"
            )
        if emb.ndim != 2 or emb.shape[1] != self.dim:
            raise DimensionMismatch(f"embedding block must be (T, {self.dim}), got {emb.shape}")
        if lp.shape[0] != emb.shape[0]:
            raise DimensionMismatch("log-posterior and embedding blocks disagree on frame count")

    def process(self, log_posteriors: np.ndarray, embeddings: np.ndarray) -> np.ndarray:
        """Advance over a block of frames; returns the per-frame final-state score."""
        lp = np.ascontiguousarray(log_posteriors, dtype=np.float64)
        emb = np.ascontiguousarray(embeddings, dtype=np.float64)
        self._check_block(lp, emb)
        out = np.empty(lp.shape[0])
        self._kernel.advance_block(lp, emb, out)
        return out

    def step(self, frame: Frame) -> FrameReadout:
        """Advance one frame and return the readout ending at it."""
        if frame.t != self.current_t + 1:
            raise NonMonotonicTime(
                f"expected frame t={self.current_t + 1}, got t={frame.t}"
            )
        lp = np.ascontiguousarray(frame.log_posteriors, dtype=np.float64).reshape(1, -1)
        emb = np.ascontiguousarray(frame.embedding, dtype=np.float64).reshape(1, -1)
        self._check_block(lp, emb)
        out = np.empty(1)
        self._kernel.advance_block(lp, emb, out)
        return self.readout()

    def readout(self) -> FrameReadout:
        """Readout for the current frame (the last one processed)."""
        sums = np.zeros((self.U, self.dim))
        counts = np.zeros(self.U, dtype=np.int64)
        starts = np.zeros(self.U, dtype=np.int64)
        valid = self._kernel.readout(sums, counts, starts)
        z = float(self._kernel.final_score) if valid else LOG_ZERO
        return FrameReadout(
            t=self.current_t,
            z_ctc=z,
            valid=bool(valid),
            sums=sums,
            counts=counts,
            start_times=starts,
        )


__all__ = ["Frame", "FrameReadout", "AlignerBank", "available_backends"]
