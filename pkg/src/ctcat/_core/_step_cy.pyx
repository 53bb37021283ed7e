# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled alignment step kernel.

Semantics mirror step_py.StepKernel exactly (same argmax tie order, same
arithmetic order), so path scores agree bit-for-bit between the backends.
See step_py for the description of the arena/chain layout.
"""

import numpy as np

from libc.math cimport sqrt

cdef double LOG_ZERO = -1.0e30
cdef double VALID_MIN = -1.0e29

cdef long KIND_NON_BLANK = 1
cdef long KIND_BLANK = 2
cdef long KIND_PAD_END = 3


cdef class StepKernel:
    cdef readonly long n_states, U, D
    cdef readonly long t
    cdef readonly long zero_norm_count
    cdef long cap, free_top

    cdef long[::1] token_of, kind, skip, owner
    cdef double[::1] score
    cdef long[::1] chain
    cdef double[:, ::1] act_sum
    cdef long[::1] act_cnt, act_start
    cdef double[:, ::1] ar_sum
    cdef long[::1] ar_parent, ar_token, ar_cnt, ar_start, ar_ref, free_list

    cdef bint scoring_set, normalize
    cdef double lam
    cdef long G
    cdef long[::1] group_of
    cdef double[:, ::1] te
    cdef double[::1] te_norm
    cdef double[:, ::1] gsum
    cdef double[::1] gcnt

    def __init__(self, token_of, kind, skip, owner, n_tokens, dim):
        self.token_of = np.ascontiguousarray(token_of, dtype=np.int64)
        self.kind = np.ascontiguousarray(kind, dtype=np.int64)
        self.skip = np.ascontiguousarray(skip, dtype=np.int64)
        self.owner = np.ascontiguousarray(owner, dtype=np.int64)
        self.n_states = self.token_of.shape[0]
        self.U = n_tokens
        self.D = dim
        self.cap = self.U * self.U + 4 * self.U + 16

        self.score = np.full(self.n_states, LOG_ZERO)
        self.chain = np.full(self.n_states, -1, dtype=np.int64)
        self.act_sum = np.zeros((self.n_states, self.D))
        self.act_cnt = np.zeros(self.n_states, dtype=np.int64)
        self.act_start = np.zeros(self.n_states, dtype=np.int64)

        self.ar_sum = np.zeros((self.cap, self.D))
        self.ar_parent = np.full(self.cap, -1, dtype=np.int64)
        self.ar_token = np.zeros(self.cap, dtype=np.int64)
        self.ar_cnt = np.zeros(self.cap, dtype=np.int64)
        self.ar_start = np.zeros(self.cap, dtype=np.int64)
        self.ar_ref = np.zeros(self.cap, dtype=np.int64)
        self.free_list = np.arange(self.cap - 1, -1, -1, dtype=np.int64)
        self.free_top = self.cap

        self.t = 0
        self.zero_norm_count = 0
        self.scoring_set = False

    @property
    def backend_name(self):
        return "cython"

    # -- arena ------------------------------------------------------------

    cdef long _alloc(self):
        if self.free_top == 0:
            self._grow()
        self.free_top -= 1
        return self.free_list[self.free_top]

    cdef void _grow(self):
        # Structurally unreachable (capacity covers the worst-case live set),
        # kept as a safety valve.
        cdef long old = self.cap
        cdef long new = old * 2
        cdef long k
        ar_sum = np.zeros((new, self.D))
        ar_sum[:old] = np.asarray(self.ar_sum)
        self.ar_sum = ar_sum
        for name in ("ar_parent", "ar_token", "ar_cnt", "ar_start", "ar_ref"):
            fresh = np.full(new, -1 if name == "ar_parent" else 0, dtype=np.int64)
            fresh[:old] = np.asarray(getattr(self, name))
            setattr(self, name, fresh)
        free_nd = np.zeros(new, dtype=np.int64)
        free_nd[: self.free_top] = np.asarray(self.free_list)[: self.free_top]
        self.free_list = free_nd
        for k in range(new - 1, old - 1, -1):
            self.free_list[self.free_top] = k
            self.free_top += 1
        self.cap = new

    cdef void _release(self, long c):
        while c != -1:
            self.ar_ref[c] -= 1
            if self.ar_ref[c] > 0:
                break
            self.free_list[self.free_top] = c
            self.free_top += 1
            c = self.ar_parent[c]

    cdef long _freeze(self, long src):
        cdef long e = self._alloc()
        cdef long parent = self.chain[src]
        cdef Py_ssize_t d
        if parent != -1:
            self.ar_ref[parent] += 1
        self.ar_parent[e] = parent
        self.ar_token[e] = self.owner[src]
        self.ar_cnt[e] = self.act_cnt[src]
        self.ar_start[e] = self.act_start[src]
        for d in range(self.D):
            self.ar_sum[e, d] = self.act_sum[src, d]
        self.ar_ref[e] = 1
        return e

    # -- lifecycle ----------------------------------------------------------

    def reset(self):
        cdef Py_ssize_t i
        for i in range(self.n_states):
            self.score[i] = LOG_ZERO
            self.chain[i] = -1
            self.act_cnt[i] = 0
            self.act_start[i] = 0
        np.asarray(self.act_sum)[:] = 0.0
        np.asarray(self.ar_ref)[:] = 0
        np.asarray(self.ar_parent)[:] = -1
        self.free_list = np.arange(self.cap - 1, -1, -1, dtype=np.int64)
        self.free_top = self.cap
        self.t = 0
        self.zero_norm_count = 0

    def nbytes(self):
        state = self.n_states * (8 * 4 + 8 * self.D)
        arena = self.cap * (8 * 5 + 8 * self.D)
        return state + arena

    # -- per-frame update -----------------------------------------------------

    cdef void _advance(self, double[:, ::1] lp, double[:, ::1] emb, Py_ssize_t r):
        cdef Py_ssize_t i, d
        cdef long b, s2, k, nc, e
        cdef double best, v
        cdef long D = self.D
        self.t += 1
        cdef long t = self.t
        # Right-to-left so every source read sees the previous frame's value.
        for i in range(self.n_states - 1, 0, -1):
            best = self.score[i]
            b = i
            v = self.score[i - 1]
            if v > best:
                best = v
                b = i - 1
            s2 = self.skip[i]
            if s2 >= 0:
                v = self.score[s2]
                if v > best:
                    best = v
                    b = s2
            self.score[i] = best + lp[r, self.token_of[i]]
            k = self.kind[i]
            if k == KIND_NON_BLANK:
                if b == i:
                    for d in range(D):
                        self.act_sum[i, d] += emb[r, d]
                    self.act_cnt[i] += 1
                else:
                    if b != 0:
                        nc = self._freeze(b)
                    else:
                        nc = -1
                    self._release(self.chain[i])
                    self.chain[i] = nc
                    for d in range(D):
                        self.act_sum[i, d] = emb[r, d]
                    self.act_cnt[i] = 1
                    self.act_start[i] = t
            elif k == KIND_BLANK:
                if b == i:
                    for d in range(D):
                        self.act_sum[i, d] += emb[r, d]
                    self.act_cnt[i] += 1
                else:
                    nc = self.chain[b]
                    if nc != -1:
                        self.ar_ref[nc] += 1
                    self._release(self.chain[i])
                    self.chain[i] = nc
                    for d in range(D):
                        self.act_sum[i, d] = self.act_sum[b, d] + emb[r, d]
                    self.act_cnt[i] = self.act_cnt[b] + 1
                    self.act_start[i] = self.act_start[b]
            elif b != i:  # pad_end freshly entered: close the last token
                e = self._freeze(b)
                self._release(self.chain[i])
                self.chain[i] = e
        # Leading pad is re-seeded, not accumulated: a match may start anywhere.
        self.score[0] = lp[r, self.token_of[0]]

    def advance_block(self, double[:, ::1] lp, double[:, ::1] emb, double[::1] out_scores):
        cdef Py_ssize_t r
        cdef Py_ssize_t n1 = self.n_states - 1
        for r in range(lp.shape[0]):
            self._advance(lp, emb, r)
            out_scores[r] = self.score[n1]

    @property
    def final_score(self):
        return self.score[self.n_states - 1]

    # -- readout ---------------------------------------------------------------

    def readout(self, double[:, ::1] sums, long[::1] counts, long[::1] starts):
        cdef Py_ssize_t d
        cdef long c, u
        for u in range(self.U):
            counts[u] = 0
            starts[u] = 0
            for d in range(self.D):
                sums[u, d] = 0.0
        if not self.score[self.n_states - 1] > VALID_MIN:
            return False
        c = self.chain[self.n_states - 1]
        u = self.U - 1
        while c != -1 and u >= 0:
            if self.ar_token[c] != u or self.ar_cnt[c] <= 0:
                return False
            for d in range(self.D):
                sums[u, d] = self.ar_sum[c, d]
            counts[u] = self.ar_cnt[c]
            starts[u] = self.ar_start[c]
            u -= 1
            c = self.ar_parent[c]
        return u == -1 and c == -1

    # -- fused detection scoring -------------------------------------------------

    def set_scoring(self, group_of, te_pooled, lam, normalize):
        self.group_of = np.ascontiguousarray(group_of, dtype=np.int64)
        te = np.ascontiguousarray(te_pooled, dtype=np.float64)
        self.te = te
        self.te_norm = np.linalg.norm(te, axis=1)
        self.lam = lam
        self.normalize = bool(normalize)
        self.G = te.shape[0]
        self.gsum = np.zeros((self.G, self.D))
        self.gcnt = np.zeros(self.G)
        self.scoring_set = True

    cdef long _walk_groups(self):
        # Returns the first token's start frame, or -1 for a malformed chain.
        cdef Py_ssize_t d
        cdef long g, c, u, start0 = 0
        for g in range(self.G):
            self.gcnt[g] = 0.0
            for d in range(self.D):
                self.gsum[g, d] = 0.0
        c = self.chain[self.n_states - 1]
        u = self.U - 1
        while c != -1 and u >= 0:
            if self.ar_token[c] != u or self.ar_cnt[c] <= 0:
                return -1
            g = self.group_of[u]
            if g >= 0:
                for d in range(self.D):
                    self.gsum[g, d] += self.ar_sum[c, d]
                self.gcnt[g] += self.ar_cnt[c]
            if u == 0:
                start0 = self.ar_start[c]
            u -= 1
            c = self.ar_parent[c]
        if u == -1 and c == -1:
            return start0
        return -1

    def process_block(self, double[:, ::1] lp, double[:, ::1] emb, double[:, ::1] out):
        if not self.scoring_set:
            raise RuntimeError("set_scoring() must be called before process_block()")
        cdef Py_ssize_t r, d
        cdef Py_ssize_t n1 = self.n_states - 1
        cdef long g, start0
        cdef double z_ctc, z_embed, dot, ns
        for r in range(lp.shape[0]):
            self._advance(lp, emb, r)
            z_ctc = self.score[n1]
            start0 = -1
            if z_ctc > VALID_MIN:
                start0 = self._walk_groups()
            if start0 < 0:
                out[r, 0] = LOG_ZERO
                out[r, 1] = 0.0
                out[r, 2] = LOG_ZERO
                out[r, 3] = 0.0
                continue
            z_embed = 0.0
            for g in range(self.G):
                dot = 0.0
                ns = 0.0
                for d in range(self.D):
                    dot += self.gsum[g, d] * self.te[g, d]
                    ns += self.gsum[g, d] * self.gsum[g, d]
                ns = sqrt(ns)
                if ns >= 1e-12 * self.gcnt[g] and self.te_norm[g] >= 1e-12:
                    z_embed += dot / (ns * self.te_norm[g])
                else:
                    self.zero_norm_count += 1
            z_embed /= self.G
            if self.normalize:
                z_ctc = z_ctc / (self.t - start0 + 2)
            out[r, 0] = z_ctc
            out[r, 1] = z_embed
            out[r, 2] = z_ctc + self.lam * z_embed
            out[r, 3] = 1.0
