"""Detection scoring: group pooling and the combined alignment+similarity score.

An enrollment fixes the keyword, its per-token text embeddings, the pooling
level, and the mixing weight. Pooling levels partition the token indices:

* character: one group per token
* word:      runs of tokens between spaces
* phrase:    a single group

Space tokens delimit words and are excluded from every group by default
(their absorbed frames are dropped from pooling); ``include_spaces`` flips
that for callers who want the literal every-token average.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .aligner import FrameReadout
from .errors import CountMismatch, DimensionMismatch, InvalidReadout, ZeroNormWarning
from .logspace import LOG_ZERO
from .vocab import KeywordTokens, Vocabulary, default_vocabulary

LEVELS = ("character", "word", "phrase")

DEFAULT_LAMBDA = 6.0


def compute_groups(
    tokens: tuple[int, ...],
    space_id: int | None,
    level: str,
    include_spaces: bool = False,
) -> tuple[tuple[int, ...], ...]:
    """Partition token indices 0..U-1 for the given pooling level."""
    if level not in LEVELS:
        raise ValueError(f"level must be one of {LEVELS}, got {level!r}")
    is_space = [space_id is not None and tok == space_id for tok in tokens]

    if level == "character":
        return tuple((u,) for u in range(len(tokens)) if include_spaces or not is_space[u])
    if level == "phrase":
        members = [u for u in range(len(tokens)) if include_spaces or not is_space[u]]
        return (tuple(members),)

    # word level: split at spaces; with include_spaces a space joins the
    # word it terminates
    groups: list[list[int]] = []
    current: list[int] = []
    for u in range(len(tokens)):
        if is_space[u]:
            if include_spaces and current:
                current.append(u)
            if current:
                groups.append(current)
                current = []
        else:
            current.append(u)
    if current:
        groups.append(current)
    return tuple(tuple(g) for g in groups)


@dataclass(frozen=True)
class Enrollment:
    """A keyword plus everything needed to score a readout against it."""

    keyword: KeywordTokens
    token_te: np.ndarray  # (U, D) token-level text embeddings
    level: str
    groups: tuple[tuple[int, ...], ...]
    lam: float = DEFAULT_LAMBDA
    include_spaces: bool = False
    normalize_ctc: bool = False

    @property
    def U(self) -> int:
        return self.keyword.U

    @property
    def dim(self) -> int:
        return int(self.token_te.shape[1])

    def group_of_token(self) -> np.ndarray:
        """Group index per token, -1 for tokens excluded from pooling."""
        out = np.full(self.U, -1, dtype=np.int64)
        for g, members in enumerate(self.groups):
            for u in members:
                out[u] = g
        return out


def build_enrollment(
    keyword: KeywordTokens,
    token_te: np.ndarray,
    level: str = "phrase",
    lam: float = DEFAULT_LAMBDA,
    include_spaces: bool = False,
    normalize_ctc: bool = False,
    vocab: Vocabulary | None = None,
) -> Enrollment:
    vocab = vocab or default_vocabulary()
    te = np.asarray(token_te, dtype=np.float64)
    if te.ndim != 2:
        raise DimensionMismatch(f"token embeddings must be 2-D, got shape {te.shape}")
    if te.shape[0] != keyword.U:
        raise CountMismatch(
            f"{te.shape[0]} embedding rows for a {keyword.U}-token keyword"
        )
    groups = compute_groups(keyword.tokens, vocab.space_id, level, include_spaces)
    if not groups or any(len(g) == 0 for g in groups):
        raise ValueError("grouping produced an empty partition")
    return Enrollment(
        keyword=keyword,
        token_te=te,
        level=level,
        groups=groups,
        lam=float(lam),
        include_spaces=include_spaces,
        normalize_ctc=normalize_ctc,
    )


@dataclass(frozen=True)
class DetectionScore:
    """Combined per-frame detection score: z = z_ctc + lambda * z_embed."""

    t: int
    z_ctc: float
    z_embed: float
    z: float
    valid: bool


def pool_groups(readout: FrameReadout, groups: tuple[tuple[int, ...], ...]) -> np.ndarray:
    """Frame-weighted group means of the accumulated acoustic embeddings.

    Summing sums and counts before dividing makes the group mean identical to
    averaging the raw frames of the whole group span.
    """
    if not readout.valid:
        raise InvalidReadout(f"no valid path at t={readout.t}")
    out = np.empty((len(groups), readout.sums.shape[1]))
    for g, members in enumerate(groups):
        idx = list(members)
        out[g] = readout.sums[idx].sum(axis=0) / readout.counts[idx].sum()
    return out


def pool_te(enr: Enrollment) -> np.ndarray:
    """Unweighted group means of the token text embeddings."""
    out = np.empty((len(enr.groups), enr.dim))
    for g, members in enumerate(enr.groups):
        out[g] = enr.token_te[list(members)].mean(axis=0)
    return out


def _cosine(a: np.ndarray, b: np.ndarray, what: str) -> float:
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na < 1e-12 or nb < 1e-12:
        warnings.warn(f"zero-norm vector in {what}; cosine defined as 0", ZeroNormWarning)
        return 0.0
    return float(a @ b) / (na * nb)


def score(readout: FrameReadout, enr: Enrollment) -> DetectionScore:
    """Score one readout against an enrollment.

    With ``normalize_ctc`` the reported z_ctc is divided by the best path's
    length, so z = z_ctc + lambda * z_embed holds on the reported fields
    either way.
    """
    if readout.sums.shape[1] != enr.dim:
        raise DimensionMismatch(
            f"readout dim {readout.sums.shape[1]} != enrollment dim {enr.dim}"
        )
    if not readout.valid:
        return DetectionScore(t=readout.t, z_ctc=LOG_ZERO, z_embed=0.0, z=LOG_ZERO, valid=False)
    ae = pool_groups(readout, enr.groups)
    te = pool_te(enr)
    sims = [_cosine(ae[g], te[g], f"group {g}") for g in range(len(enr.groups))]
    z_embed = float(np.mean(sims))
    z_ctc = readout.z_ctc
    if enr.normalize_ctc:
        z_ctc = z_ctc / (readout.t - readout.path_start + 1)
    return DetectionScore(
        t=readout.t,
        z_ctc=z_ctc,
        z_embed=z_embed,
        z=z_ctc + enr.lam * z_embed,
        valid=True,
    )
