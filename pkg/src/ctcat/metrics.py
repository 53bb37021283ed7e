"""Trial-based detection metrics: ROC AUC and equal error rate.

A trial is one (stream, enrollment) pair reduced to a single score — the max
over frames of the combined detection score. Invalid detections carry the
log-zero sentinel and legitimately rank below every finite score.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateTrialSet

POSITIVE = "pos"
NEGATIVE = "neg"


@dataclass(frozen=True)
class Trial:
    score: float
    label: str  # "pos" or "neg"
    id: str = ""

    def __post_init__(self):
        if self.label not in (POSITIVE, NEGATIVE):
            raise ValueError(f"label must be {POSITIVE!r} or {NEGATIVE!r}, got {self.label!r}")


def _split(trials) -> tuple[np.ndarray, np.ndarray]:
    pos = np.asarray([t.score for t in trials if t.label == POSITIVE], dtype=np.float64)
    neg = np.asarray([t.score for t in trials if t.label == NEGATIVE], dtype=np.float64)
    if pos.size == 0 or neg.size == 0:
        raise DegenerateTrialSet(
            f"need at least one positive and one negative trial ({pos.size} pos, {neg.size} neg)"
        )
    return pos, neg


def _average_ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks with ties sharing the average rank."""
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(values.size)
    sorted_vals = values[order]
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def roc_auc(trials) -> float:
    """Probability a random positive outscores a random negative; ties count half."""
    pos, neg = _split(trials)
    ranks = _average_ranks(np.concatenate([pos, neg]))
    P = pos.size
    pos_rank_sum = ranks[:P].sum()
    return float((pos_rank_sum - P * (P + 1) / 2.0) / (P * neg.size))


def pairwise_auc(trials) -> float:
    """O(P*N) brute force over all positive/negative pairs; AUC oracle."""
    pos, neg = _split(trials)
    wins = 0.0
    chunk = 512
    for i in range(0, pos.size, chunk):
        p = pos[i : i + chunk, None]
        wins += (p > neg[None, :]).sum() + 0.5 * (p == neg[None, :]).sum()
    return float(wins / (pos.size * neg.size))


def eer(trials) -> tuple[float, float]:
    """Equal error rate and its threshold.

    Sweeps thresholds at the distinct scores (accept when score >= threshold)
    and linearly interpolates between the two operating points straddling the
    FAR = FRR crossing.
    """
    pos, neg = _split(trials)
    thresholds = np.unique(np.concatenate([pos, neg]))[::-1]
    far = np.array([(neg >= th).mean() for th in thresholds])
    frr = np.array([(pos < th).mean() for th in thresholds])
    # Virtual reject-everything point above the top score.
    thresholds = np.concatenate([[thresholds[0] + 1.0], thresholds])
    far = np.concatenate([[0.0], far])
    frr = np.concatenate([[1.0], frr])

    diff = far - frr  # monotone non-decreasing along the sweep
    k = int(np.argmax(diff >= 0.0))
    if diff[k] == 0.0:
        return float(far[k]), float(thresholds[k])
    # Interpolate between k-1 (diff<0) and k (diff>0). k=0 cannot happen:
    # the virtual point has diff=-1.
    d0, d1 = diff[k - 1], diff[k]
    s = float(-d0 / (d1 - d0))
    value = float(far[k - 1] + s * (far[k] - far[k - 1]))
    threshold = float(thresholds[k - 1] + s * (thresholds[k] - thresholds[k - 1]))
    return value, threshold


def eer_sweep_oracle(trials, grid: int = 5000) -> float:
    """Dense-threshold sweep; returns min over the grid of max(FAR, FRR).

    Coarse independent check used by tests: the interpolated EER must sit
    within one step of this.
    """
    pos, neg = _split(trials)
    lo = min(pos.min(), neg.min()) - 1.0
    hi = max(pos.max(), neg.max()) + 1.0
    candidates = np.concatenate([np.linspace(lo, hi, grid), pos, neg])
    best = 1.0
    for th in candidates:
        far = float((neg >= th).mean())
        frr = float((pos < th).mean())
        best = min(best, max(far, frr))
    return best
