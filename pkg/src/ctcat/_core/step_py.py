"""Pure-Python alignment step kernel.

Used when the compiled extension is unavailable; semantics are identical
(the test suite cross-checks the two bit-for-bit on the path scores).

State layout: every graph state keeps its accumulated log-score, one mutable
"active" accumulator for the token it is currently absorbing frames for, and
a pointer into a refcounted arena of frozen per-token records (sum, count,
first-entry time) inherited from upstream. Freezing happens once per token
entry, so a frame costs O(states * dim) instead of the O(U^2 * dim) a full
accumulator copy per state would take; arena capacity is the structural
worst case of U^2 + O(U) live records and never grows with stream length.
"""

from __future__ import annotations

import numpy as np

from ..logspace import LOG_ZERO, VALID_MIN

_KIND_PAD_START = 0
_KIND_NON_BLANK = 1
_KIND_BLANK = 2
_KIND_PAD_END = 3


class StepKernel:
    backend_name = "python"

    def __init__(self, token_of, kind, skip, owner, n_tokens, dim):
        self.token_of = [int(x) for x in token_of]
        self.kind = [int(x) for x in kind]
        self.skip = [int(x) for x in skip]
        self.owner = [int(x) for x in owner]
        self.n_states = len(self.token_of)
        self.U = int(n_tokens)
        self.D = int(dim)
        self._cap = self.U * self.U + 4 * self.U + 16

        self.score = [LOG_ZERO] * self.n_states
        self.chain = [-1] * self.n_states
        self.act_sum = np.zeros((self.n_states, self.D))
        self.act_cnt = [0] * self.n_states
        self.act_start = [0] * self.n_states

        cap = self._cap
        self.ar_sum = np.zeros((cap, self.D))
        self.ar_parent = [-1] * cap
        self.ar_token = [0] * cap
        self.ar_cnt = [0] * cap
        self.ar_start = [0] * cap
        self.ar_ref = [0] * cap
        self._free = list(range(cap - 1, -1, -1))

        self.t = 0
        self.zero_norm_count = 0
        self._group_of = None
        self._te = None
        self._te_norm = None
        self._lam = 0.0
        self._normalize = False
        self._gsum = None
        self._gcnt = None

    # -- arena ------------------------------------------------------------

    def _alloc(self) -> int:
        if not self._free:
            self._grow()
        return self._free.pop()

    def _grow(self):
        old = self._cap
        new = old * 2
        self.ar_sum = np.vstack([self.ar_sum, np.zeros((old, self.D))])
        self.ar_parent.extend([-1] * old)
        self.ar_token.extend([0] * old)
        self.ar_cnt.extend([0] * old)
        self.ar_start.extend([0] * old)
        self.ar_ref.extend([0] * old)
        self._free.extend(range(new - 1, old - 1, -1))
        self._cap = new

    def _release(self, c: int):
        ar_ref = self.ar_ref
        while c != -1:
            ar_ref[c] -= 1
            if ar_ref[c] > 0:
                break
            self._free.append(c)
            c = self.ar_parent[c]

    def _freeze(self, src: int) -> int:
        """Snapshot src's active accumulator as a new frozen chain head."""
        e = self._alloc()
        parent = self.chain[src]
        if parent != -1:
            self.ar_ref[parent] += 1
        self.ar_parent[e] = parent
        self.ar_token[e] = self.owner[src]
        self.ar_cnt[e] = self.act_cnt[src]
        self.ar_start[e] = self.act_start[src]
        self.ar_sum[e] = self.act_sum[src]
        self.ar_ref[e] = 1
        return e

    # -- lifecycle ---------------------------------------------------------

    def reset(self):
        n = self.n_states
        self.score = [LOG_ZERO] * n
        self.chain = [-1] * n
        self.act_sum[:] = 0.0
        self.act_cnt = [0] * n
        self.act_start = [0] * n
        self.ar_ref = [0] * self._cap
        self.ar_parent = [-1] * self._cap
        self._free = list(range(self._cap - 1, -1, -1))
        self.t = 0
        self.zero_norm_count = 0

    def nbytes(self) -> int:
        state = self.n_states * (8 * 4 + 8 * self.D)
        arena = self._cap * (8 * 5 + 8 * self.D)
        return state + arena

    # -- per-frame update ---------------------------------------------------

    def _advance(self, row, em):
        """One frame; row is a list of per-token log-scores, em the embedding."""
        self.t += 1
        t = self.t
        n = self.n_states
        score = self.score
        chain = self.chain
        act_sum = self.act_sum
        act_cnt = self.act_cnt
        act_start = self.act_start
        token_of = self.token_of
        kind = self.kind
        skip = self.skip
        ar_ref = self.ar_ref
        # Right-to-left so every source read sees the previous frame's value.
        for i in range(n - 1, 0, -1):
            best = score[i]
            b = i
            v = score[i - 1]
            if v > best:
                best = v
                b = i - 1
            s2 = skip[i]
            if s2 >= 0:
                v = score[s2]
                if v > best:
                    best = v
                    b = s2
            score[i] = best + row[token_of[i]]
            k = kind[i]
            if k == _KIND_NON_BLANK:
                if b == i:
                    act_sum[i] += em
                    act_cnt[i] += 1
                else:
                    nc = self._freeze(b) if b != 0 else -1
                    self._release(chain[i])
                    chain[i] = nc
                    act_sum[i] = em
                    act_cnt[i] = 1
                    act_start[i] = t
            elif k == _KIND_BLANK:
                if b == i:
                    act_sum[i] += em
                    act_cnt[i] += 1
                else:
                    nc = chain[b]
                    if nc != -1:
                        ar_ref[nc] += 1
                    self._release(chain[i])
                    chain[i] = nc
                    np.add(act_sum[b], em, out=act_sum[i])
                    act_cnt[i] = act_cnt[b] + 1
                    act_start[i] = act_start[b]
            elif b != i:  # pad_end freshly entered: close the last token
                e = self._freeze(b)
                self._release(chain[i])
                chain[i] = e
        # Leading pad is re-seeded, not accumulated: a match may start anywhere.
        score[0] = row[token_of[0]]

    def advance_block(self, lp, emb, out_scores):
        n1 = self.n_states - 1
        for r in range(lp.shape[0]):
            self._advance(lp[r].tolist(), emb[r])
            out_scores[r] = self.score[n1]

    @property
    def final_score(self) -> float:
        return self.score[self.n_states - 1]

    # -- readout -------------------------------------------------------------

    def readout(self, sums, counts, starts) -> bool:
        """Fill per-token arrays from the final state's chain; True if valid."""
        sums[:] = 0.0
        counts[:] = 0
        starts[:] = 0
        if not self.score[self.n_states - 1] > VALID_MIN:
            return False
        c = self.chain[self.n_states - 1]
        u = self.U - 1
        while c != -1 and u >= 0:
            if self.ar_token[c] != u or self.ar_cnt[c] <= 0:
                return False
            sums[u] = self.ar_sum[c]
            counts[u] = self.ar_cnt[c]
            starts[u] = self.ar_start[c]
            u -= 1
            c = self.ar_parent[c]
        return u == -1 and c == -1

    # -- fused detection scoring ----------------------------------------------

    def set_scoring(self, group_of, te_pooled, lam, normalize):
        self._group_of = [int(g) for g in group_of]
        self._te = np.ascontiguousarray(te_pooled, dtype=np.float64)
        self._te_norm = np.linalg.norm(self._te, axis=1)
        self._lam = float(lam)
        self._normalize = bool(normalize)
        G = self._te.shape[0]
        self._gsum = np.zeros((G, self.D))
        self._gcnt = np.zeros(G)

    def _walk_groups(self):
        gsum = self._gsum
        gcnt = self._gcnt
        gsum[:] = 0.0
        gcnt[:] = 0.0
        group_of = self._group_of
        c = self.chain[self.n_states - 1]
        u = self.U - 1
        start0 = 0
        while c != -1 and u >= 0:
            if self.ar_token[c] != u or self.ar_cnt[c] <= 0:
                return False, 0
            g = group_of[u]
            if g >= 0:
                gsum[g] += self.ar_sum[c]
                gcnt[g] += self.ar_cnt[c]
            if u == 0:
                start0 = self.ar_start[c]
            u -= 1
            c = self.ar_parent[c]
        return (u == -1 and c == -1), start0

    def process_block(self, lp, emb, out):
        """DP update plus detection scoring; out rows are (z_ctc, z_embed, z, valid)."""
        if self._te is None:
            raise RuntimeError("set_scoring() must be called before process_block()")
        n1 = self.n_states - 1
        te = self._te
        te_norm = self._te_norm
        lam = self._lam
        for r in range(lp.shape[0]):
            self._advance(lp[r].tolist(), emb[r])
            z_ctc = self.score[n1]
            ok = False
            if z_ctc > VALID_MIN:
                ok, start0 = self._walk_groups()
            if not ok:
                out[r, 0] = LOG_ZERO
                out[r, 1] = 0.0
                out[r, 2] = LOG_ZERO
                out[r, 3] = 0.0
                continue
            gsum = self._gsum
            dots = (gsum * te).sum(axis=1)
            ns = np.sqrt((gsum * gsum).sum(axis=1))
            usable = (ns >= 1e-12 * self._gcnt) & (te_norm >= 1e-12)
            self.zero_norm_count += int((~usable).sum())
            denom = np.where(usable, ns * te_norm, 1.0)
            sims = np.where(usable, dots / denom, 0.0)
            z_embed = float(sims.mean())
            if self._normalize:
                z_ctc = z_ctc / (self.t - start0 + 2)
            out[r, 0] = z_ctc
            out[r, 1] = z_embed
            out[r, 2] = z_ctc + lam * z_embed
            out[r, 3] = 1.0
