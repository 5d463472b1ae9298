# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: tree induction, vote counting, coalition values.

Bit-identical to kernels._pure by construction: same splitmix64 streams
(C copy of toolwear.rng), same exact-int64 split scores with one double
division, same threshold expression, same traversal order. The extension is
compiled with -ffp-contract=off so double arithmetic rounds exactly like
CPython's. Any behavioural change must land in both backends.
"""

import numpy as np

from libc.stdint cimport int8_t, int32_t, int64_t, uint64_t
from libc.stdlib cimport free, malloc, qsort
from libc.string cimport memcpy

cdef extern from *:
    """
    #include <stdint.h>
    static inline uint64_t tw_mulhi64(uint64_t a, uint64_t b) {
        return (uint64_t)(((__uint128_t)a * b) >> 64);
    }
    """
    uint64_t tw_mulhi64(uint64_t a, uint64_t b) nogil

cdef uint64_t GOLDEN = <uint64_t>0x9E3779B97F4A7C15


cdef inline uint64_t mix64(uint64_t x) nogil:
    x ^= x >> 30
    x = x * <uint64_t>0xBF58476D1CE4E5B9
    x ^= x >> 27
    x = x * <uint64_t>0x94D049BB133111EB
    x ^= x >> 31
    return x


cdef inline uint64_t rng_next(uint64_t* state) nogil:
    state[0] = state[0] + GOLDEN
    return mix64(state[0])


cdef inline uint64_t rng_below(uint64_t* state, uint64_t n) nogil:
    return tw_mulhi64(rng_next(state), n)


cdef inline uint64_t substream(uint64_t seed, uint64_t index) nogil:
    return mix64(seed ^ mix64((index + 1) * GOLDEN))


ctypedef struct VL:
    double v
    int64_t lab


cdef int _vl_cmp(const void* a, const void* b) noexcept nogil:
    cdef double av = (<const VL*>a)[0].v
    cdef double bv = (<const VL*>b)[0].v
    if av < bv:
        return -1
    elif av > bv:
        return 1
    return 0


ctypedef struct Ctx:
    const double* X
    const int64_t* y
    Py_ssize_t m
    int max_depth
    int msl
    int k
    int32_t* feat
    double* thr
    int32_t* left
    int32_t* right
    int64_t* c0
    int64_t* c1
    Py_ssize_t n_nodes
    uint64_t rng
    int64_t* tmp
    VL* pairs
    int64_t* featpool


cdef Py_ssize_t _grow(Ctx* c, int64_t* idx, Py_ssize_t n, int depth) except -1:
    cdef Py_ssize_t nid = c.n_nodes
    cdef Py_ssize_t i, j
    cdef int64_t cnt1 = 0, cnt0
    cdef int f, best_f
    cdef Py_ssize_t nl, nr, nleft
    cdef int64_t nl0, nl1, nr0, nr1, num, den, cum1, tot1
    cdef double score, best_score, thr, lo, hi
    cdef uint64_t draw

    c.n_nodes += 1
    for i in range(n):
        cnt1 += c.y[idx[i]]
    cnt0 = n - cnt1
    c.feat[nid] = -1
    c.thr[nid] = 0.0
    c.left[nid] = -1
    c.right[nid] = -1
    c.c0[nid] = cnt0
    c.c1[nid] = cnt1
    if cnt0 == 0 or cnt1 == 0:
        return nid
    if c.max_depth >= 0 and depth >= c.max_depth:
        return nid
    if n < 2 * c.msl:
        return nid

    # candidate feature subset: partial Fisher-Yates, then ascending
    for i in range(c.m):
        c.featpool[i] = i
    for i in range(c.k):
        draw = rng_below(&c.rng, <uint64_t>(c.m - i))
        j = i + <Py_ssize_t>draw
        c.featpool[i], c.featpool[j] = c.featpool[j], c.featpool[i]
    for i in range(1, c.k):  # insertion sort of the first k entries
        num = c.featpool[i]
        j = i
        while j > 0 and c.featpool[j - 1] > num:
            c.featpool[j] = c.featpool[j - 1]
            j -= 1
        c.featpool[j] = num

    tot1 = cnt1
    best_score = float("inf")
    best_f = -1
    thr = 0.0
    for j in range(c.k):
        f = <int>c.featpool[j]
        for i in range(n):
            c.pairs[i].v = c.X[idx[i] * c.m + f]
            c.pairs[i].lab = c.y[idx[i]]
        qsort(c.pairs, n, sizeof(VL), _vl_cmp)
        if c.pairs[0].v == c.pairs[n - 1].v:
            continue
        cum1 = 0
        for i in range(n - 1):
            cum1 += c.pairs[i].lab
            if c.pairs[i].v < c.pairs[i + 1].v:
                nl = i + 1
                if nl < c.msl or n - nl < c.msl:
                    continue
                nl1 = cum1
                nl0 = nl - nl1
                nr = n - nl
                nr1 = tot1 - nl1
                nr0 = nr - nr1
                num = nl0 * nl1 * nr + nr0 * nr1 * nl
                den = (<int64_t>nl) * (<int64_t>nr)
                score = (<double>num) / (<double>den)
                if score < best_score:
                    best_score = score
                    best_f = f
                    lo = c.pairs[i].v
                    hi = c.pairs[i + 1].v
                    thr = 0.5 * (lo + hi)
                    if thr == hi:
                        thr = lo
    if best_f < 0:
        return nid

    # stable partition: left block then right block, original order kept
    nleft = 0
    for i in range(n):
        if c.X[idx[i] * c.m + best_f] <= thr:
            c.tmp[nleft] = idx[i]
            nleft += 1
    j = nleft
    for i in range(n):
        if c.X[idx[i] * c.m + best_f] > thr:
            c.tmp[j] = idx[i]
            j += 1
    memcpy(idx, c.tmp, n * sizeof(int64_t))

    c.feat[nid] = best_f
    c.thr[nid] = thr
    c.left[nid] = <int32_t>_grow(c, idx, nleft, depth + 1)
    c.right[nid] = <int32_t>_grow(c, idx + nleft, n - nleft, depth + 1)
    return nid


def build_forest(double[:, ::1] X, int64_t[::1] y, int n_trees, int max_depth,
                 int min_samples_leaf, int features_per_split, bint bootstrap,
                 unsigned long long seed):
    """Train a bagged forest; see kernels._pure.build_forest for the contract."""
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t m = X.shape[1]
    cdef Py_ssize_t cap = (<Py_ssize_t>n_trees) * (2 * n + 1)
    feat_arr = np.empty(cap, dtype=np.int32)
    thr_arr = np.empty(cap, dtype=np.float64)
    left_arr = np.empty(cap, dtype=np.int32)
    right_arr = np.empty(cap, dtype=np.int32)
    c0_arr = np.empty(cap, dtype=np.int64)
    c1_arr = np.empty(cap, dtype=np.int64)
    roots_arr = np.empty(n_trees, dtype=np.int32)
    cdef int32_t[::1] feat = feat_arr
    cdef double[::1] thr = thr_arr
    cdef int32_t[::1] left = left_arr
    cdef int32_t[::1] right = right_arr
    cdef int64_t[::1] c0 = c0_arr
    cdef int64_t[::1] c1 = c1_arr
    cdef int32_t[::1] roots = roots_arr

    cdef Ctx ctx
    ctx.X = &X[0, 0]
    ctx.y = &y[0]
    ctx.m = m
    ctx.max_depth = max_depth
    ctx.msl = min_samples_leaf
    ctx.k = features_per_split
    ctx.feat = &feat[0]
    ctx.thr = &thr[0]
    ctx.left = &left[0]
    ctx.right = &right[0]
    ctx.c0 = &c0[0]
    ctx.c1 = &c1[0]
    ctx.n_nodes = 0

    cdef int64_t* idx = <int64_t*>malloc(n * sizeof(int64_t))
    ctx.tmp = <int64_t*>malloc(n * sizeof(int64_t))
    ctx.pairs = <VL*>malloc(n * sizeof(VL))
    ctx.featpool = <int64_t*>malloc(m * sizeof(int64_t))
    if idx == NULL or ctx.tmp == NULL or ctx.pairs == NULL or ctx.featpool == NULL:
        free(idx); free(ctx.tmp); free(ctx.pairs); free(ctx.featpool)
        raise MemoryError()

    cdef Py_ssize_t t, i
    try:
        for t in range(n_trees):
            ctx.rng = substream(<uint64_t>seed, <uint64_t>t)
            if bootstrap:
                for i in range(n):
                    idx[i] = <int64_t>rng_below(&ctx.rng, <uint64_t>n)
            else:
                for i in range(n):
                    idx[i] = i
            roots[t] = <int32_t>_grow(&ctx, idx, n, 0)
    finally:
        free(idx); free(ctx.tmp); free(ctx.pairs); free(ctx.featpool)

    cdef Py_ssize_t cnt = ctx.n_nodes
    return (feat_arr[:cnt].copy(), thr_arr[:cnt].copy(),
            left_arr[:cnt].copy(), right_arr[:cnt].copy(),
            c0_arr[:cnt].copy(), c1_arr[:cnt].copy(), roots_arr)


cdef inline int64_t _route_vote(const int32_t* feature, const double* threshold,
                                const int32_t* left, const int32_t* right,
                                const int8_t* vote, const double* row,
                                Py_ssize_t node) nogil:
    while feature[node] >= 0:
        if row[feature[node]] <= threshold[node]:
            node = left[node]
        else:
            node = right[node]
    return vote[node]


def predict_votes(int32_t[::1] feature, double[::1] threshold,
                  int32_t[::1] left, int32_t[::1] right, int8_t[::1] vote,
                  int32_t[::1] roots, double[:, ::1] X):
    """Class-1 vote count per row of X, summed over all trees."""
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t m = X.shape[1]
    cdef Py_ssize_t n_trees = roots.shape[0]
    out_arr = np.zeros(n, dtype=np.int64)
    cdef int64_t[::1] out = out_arr
    if n == 0:
        return out_arr
    cdef Py_ssize_t r, t
    cdef int64_t s
    cdef const double* xrow
    for r in range(n):
        xrow = &X[r, 0]
        s = 0
        for t in range(n_trees):
            s += _route_vote(&feature[0], &threshold[0], &left[0], &right[0],
                             &vote[0], xrow, roots[t])
        out[r] = s
    return out_arr


def coalition_values(int32_t[::1] feature, double[::1] threshold,
                     int32_t[::1] left, int32_t[::1] right, int8_t[::1] vote,
                     int32_t[::1] roots, double[::1] x,
                     double[:, ::1] background, int64_t[::1] masks):
    """Mean class-1 vote fraction per coalition mask (see kernels._pure)."""
    cdef Py_ssize_t m = x.shape[0]
    cdef Py_ssize_t b = background.shape[0]
    cdef Py_ssize_t kcount = masks.shape[0]
    cdef Py_ssize_t n_trees = roots.shape[0]
    out_arr = np.empty(kcount, dtype=np.float64)
    cdef double[::1] out = out_arr
    if kcount == 0:
        return out_arr
    cdef double* hybrid = <double*>malloc(m * sizeof(double))
    if hybrid == NULL:
        raise MemoryError()
    cdef Py_ssize_t ki, bi, f, t
    cdef int64_t mask, total
    try:
        for ki in range(kcount):
            mask = masks[ki]
            total = 0
            for bi in range(b):
                for f in range(m):
                    if (mask >> f) & 1:
                        hybrid[f] = x[f]
                    else:
                        hybrid[f] = background[bi, f]
                for t in range(n_trees):
                    total += _route_vote(&feature[0], &threshold[0], &left[0],
                                         &right[0], &vote[0], hybrid,
                                         roots[t])
            out[ki] = (<double>total) / (<double>(b * n_trees))
    finally:
        free(hybrid)
    return out_arr
