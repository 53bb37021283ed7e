"""Reference numerical kernels and brute-force oracles.

Everything here favors being obviously correct over being fast: the label
probability is also computed by literally enumerating every path, and the
best aligned path is found by exhaustive search over the decoding graph.
The streaming aligner is tested against these, never the other way around.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateBatch, DimensionMismatch, InstanceTooLarge
from .graph import DecodingGraph, StateKind
from .logspace import LOG_ZERO, VALID_MIN


def collapse(path: Sequence[int], blank_id: int) -> tuple[int, ...]:
    """Many-to-one path map: merge adjacent repeats, then drop blanks."""
    out = []
    prev = None
    for tok in path:
        if tok != prev and tok != blank_id:
            out.append(tok)
        prev = tok
    return tuple(out)


def ctc_label_logprob(log_posteriors: np.ndarray, label: Sequence[int], blank_id: int) -> float:
    """Log-probability of a label, summed over all paths that collapse to it.

    Standard forward recursion over the blank-interleaved label. Returns
    LOG_ZERO (not an exception) when no legal path exists, e.g. when the
    label is too long for the frame count.
    """
    lp = np.asarray(log_posteriors, dtype=np.float64)
    if lp.ndim != 2:
        raise DimensionMismatch(f"log_posteriors must be 2-D, got shape {lp.shape}")
    T, K = lp.shape
    label = list(label)
    if not label:
        raise ValueError("label must be non-empty")
    if any(tok == blank_id or not (0 <= tok < K) for tok in label):
        raise ValueError("label tokens must be non-blank ids within the matrix width")

    ext = [blank_id]
    for tok in label:
        ext.extend((tok, blank_id))
    ext = np.asarray(ext, dtype=np.int64)
    S = len(ext)

    # Skip over a blank is allowed only between distinct labels.
    can_skip = np.zeros(S, dtype=bool)
    can_skip[2:] = (ext[2:] != blank_id) & (ext[2:] != ext[:-2])

    alpha = np.full(S, -np.inf)
    alpha[0] = lp[0, blank_id]
    if S > 1:
        alpha[1] = lp[0, ext[1]]
    for t in range(1, T):
        shifted = np.concatenate(([-np.inf], alpha[:-1]))
        skipped = np.concatenate(([-np.inf, -np.inf], alpha[:-2]))
        skipped[~can_skip] = -np.inf
        alpha = np.logaddexp(np.logaddexp(alpha, shifted), skipped) + lp[t, ext]

    total = np.logaddexp(alpha[-1], alpha[-2]) if S > 1 else alpha[-1]
    return float(total) if np.isfinite(total) else LOG_ZERO


def enumerate_label_logprob(
    log_posteriors: np.ndarray,
    label: Sequence[int],
    blank_id: int,
    max_paths: int = 2_000_000,
) -> float:
    """Literal sum over all |V'|^T paths whose collapse equals the label.

    Independent of the forward recursion; intended as its oracle on small
    instances only.
    """
    lp = np.asarray(log_posteriors, dtype=np.float64)
    T, K = lp.shape
    if K**T > max_paths:
        raise InstanceTooLarge(f"{K}^{T} paths exceed the enumeration cap")
    label_arr = np.asarray(list(label), dtype=np.int64)
    if label_arr.size == 0:
        raise ValueError("label must be non-empty")

    grids = np.meshgrid(*([np.arange(K)] * T), indexing="ij")
    paths = np.stack([g.ravel() for g in grids], axis=1)  # (K^T, T)
    scores = lp[np.arange(T)[None, :], paths].sum(axis=1)

    prev = np.concatenate(
        [np.full((paths.shape[0], 1), blank_id, dtype=paths.dtype), paths[:, :-1]], axis=1
    )
    emit = (paths != blank_id) & (paths != prev)
    pos = np.cumsum(emit, axis=1)
    L = label_arr.size
    idx = np.clip(pos - 1, 0, L - 1)
    match = (pos[:, -1] == L) & np.all(~emit | (paths == label_arr[idx]), axis=1)
    if not match.any():
        return LOG_ZERO
    s = scores[match]
    m = s.max()
    return float(m + np.log(np.exp(s - m).sum()))


@dataclass(frozen=True)
class BestPath:
    """Exhaustive-search result for paths ending at one frame.

    Mirrors the aligner's per-frame readout: score, per-token first-entry
    times, and per-token embedding sums/counts along the best path.
    """

    end_t: int
    valid: bool
    score: float
    t_start: int  # frame spent in the leading padding state
    states: tuple[int, ...]  # state per frame, t_start..end_t
    start_times: np.ndarray
    sums: np.ndarray
    counts: np.ndarray
    n_optimal: int  # number of paths tying the best score (exact float ties)

    @property
    def means(self) -> np.ndarray:
        return self.sums / np.maximum(self.counts, 1)[:, None]


def _forward_edges(graph: DecodingGraph) -> list[list[int]]:
    out: list[list[int]] = [[] for _ in range(graph.n_states)]
    for s in graph.states:
        for src in s.allowed_sources:
            # The leading pad is re-seeded every frame, so oracle paths spend
            # exactly one frame there: drop its self-loop.
            if s.index == 0:
                continue
            out[src].append(s.index)
    return out


def brute_force_all_end_frames(
    log_posteriors: np.ndarray,
    frame_embeddings: np.ndarray,
    graph: DecodingGraph,
    max_frames: int = 10,
    max_states: int = 9,
) -> list[BestPath]:
    """Best path ending at every frame, by exhaustive enumeration.

    One DFS sweep enumerates every legal path that starts in the leading
    padding state at some frame and reports each time it sits in the trailing
    padding state. Returns a BestPath per end frame (index 0 = end_t 1).
    """
    lp = np.asarray(log_posteriors, dtype=np.float64)
    emb = np.asarray(frame_embeddings, dtype=np.float64)
    T = lp.shape[0]
    if T > max_frames or graph.n_states > max_states:
        raise InstanceTooLarge(
            f"T={T} frames x {graph.n_states} states exceeds the enumeration cap"
        )

    n = graph.n_states
    pad_end = n - 1
    token_of = [s.token_id for s in graph.states]
    edges = _forward_edges(graph)
    lpf = lp.tolist()

    # per end_t (1-based): [score, t_start, path, tie_count]
    best: list[list | None] = [None] * (T + 1)
    path: list[int] = []

    def visit(state: int, t: int, score: float) -> None:
        path.append(state)
        if state == pad_end:
            cand = best[t]
            if cand is None or score > cand[0]:
                best[t] = [score, t - len(path) + 1, tuple(path), 1]
            elif score == cand[0]:
                cand[3] += 1
        if t < T:
            for nxt in edges[state]:
                visit(nxt, t + 1, score + lpf[t][token_of[nxt]])
        path.pop()

    for t0 in range(1, T + 1):
        visit(0, t0, lpf[t0 - 1][token_of[0]])

    U = graph.U
    D = emb.shape[1]
    results = []
    for end_t in range(1, T + 1):
        cand = best[end_t]
        if cand is None:
            results.append(
                BestPath(
                    end_t=end_t,
                    valid=False,
                    score=LOG_ZERO,
                    t_start=0,
                    states=(),
                    start_times=np.zeros(U, dtype=np.int64),
                    sums=np.zeros((U, D)),
                    counts=np.zeros(U, dtype=np.int64),
                    n_optimal=0,
                )
            )
            continue
        score, t_start, states, ties = cand
        starts = np.zeros(U, dtype=np.int64)
        sums = np.zeros((U, D))
        counts = np.zeros(U, dtype=np.int64)
        for offset, st in enumerate(states):
            t = t_start + offset
            meta = graph.states[st]
            if meta.owner is None:
                continue
            u = meta.owner
            if meta.kind == StateKind.NON_BLANK and starts[u] == 0:
                starts[u] = t
            sums[u] += emb[t - 1]
            counts[u] += 1
        results.append(
            BestPath(
                end_t=end_t,
                valid=score > VALID_MIN,
                score=score,
                t_start=t_start,
                states=states,
                start_times=starts,
                sums=sums,
                counts=counts,
                n_optimal=ties,
            )
        )
    return results


def brute_force_best_path(
    log_posteriors: np.ndarray,
    frame_embeddings: np.ndarray,
    graph: DecodingGraph,
    end_t: int,
    max_frames: int = 10,
    max_states: int = 9,
) -> BestPath:
    """Best legal path that sits in the trailing padding state at end_t."""
    if not 1 <= end_t <= np.asarray(log_posteriors).shape[0]:
        raise ValueError(f"end_t={end_t} outside the stream")
    return brute_force_all_end_frames(
        log_posteriors, frame_embeddings, graph, max_frames=max_frames, max_states=max_states
    )[end_t - 1]


@dataclass(frozen=True)
class MiniBatchTuple:
    """One (audio embedding, text embedding, class label) training tuple."""

    ae: np.ndarray
    te: np.ndarray
    label: object


def _unit_rows(m: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(m, axis=1, keepdims=True)
    safe = np.where(norms < 1e-12, 1.0, norms)
    return m / safe


def multi_view_loss(
    batch: Sequence[MiniBatchTuple],
    alpha: float = 2.0,
    beta: float = 50.0,
    margin: float = 0.1,
) -> float:
    """Asymmetric proxy loss over a mini-batch of (audio, text, label) tuples.

    Per anchor i the positive term pulls the anchor text toward same-label
    audio embeddings, (1/alpha) * ln(1 + sum_j exp(alpha * (margin - cos))),
    and the negative term pushes the anchor audio from other-label text
    embeddings, mean_k ln(1 + exp(beta * (cos - margin))). Anchors with no
    positives (or no negatives) contribute zero for that term.
    """
    if len(batch) < 2:
        raise DegenerateBatch("need at least two tuples")
    dims = {t.ae.shape[-1] for t in batch} | {t.te.shape[-1] for t in batch}
    if len(dims) != 1:
        raise DimensionMismatch(f"inconsistent embedding dims: {sorted(dims)}")

    ae = _unit_rows(np.stack([np.asarray(t.ae, dtype=np.float64) for t in batch]))
    te = _unit_rows(np.stack([np.asarray(t.te, dtype=np.float64) for t in batch]))
    labels = [t.label for t in batch]
    N = len(batch)
    cos_te_ae = te @ ae.T  # [i, j] = cos(te_i, ae_j)

    total = 0.0
    for i in range(N):
        pos = [j for j in range(N) if j != i and labels[j] == labels[i]]
        neg = [k for k in range(N) if labels[k] != labels[i]]
        if pos:
            g = alpha * (margin - cos_te_ae[i, pos])
            m = g.max()
            lse = m + np.log(np.exp(g - m).sum())
            total += float(np.logaddexp(0.0, lse)) / alpha
        if neg:
            g = beta * (cos_te_ae[neg, i] - margin)  # cos(ae_i, te_k)
            total += float(np.logaddexp(0.0, g).mean())
    return total / N


def find_best_end_frame(per_frame_scores: Sequence[float]) -> int:
    """1-based index of the highest score; ties go to the earliest frame."""
    scores = np.asarray(per_frame_scores, dtype=np.float64)
    if scores.size == 0:
        raise ValueError("need at least one frame score")
    return int(np.argmax(scores)) + 1


def training_objective(ctc_loss: float, mv_loss: float) -> float:
    """Joint objective: alignment loss plus the embedding-similarity loss."""
    return float(ctc_loss) + float(mv_loss)
