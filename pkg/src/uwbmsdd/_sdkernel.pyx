# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled sphere-search and Viterbi kernels.

Mirrors uwbmsdd._sdpy operation for operation (same accumulation order,
same tie handling) so both backends return identical metrics and node
counts. Selected at import time by uwbmsdd._backend.
"""

from libc.math cimport INFINITY, fabs
from libc.stdlib cimport free, malloc

import numpy as np

BACKEND = "cython"


cdef struct SdWork:
    double *zu        # row-major (L+1) x (L+1)
    double *S         # per-depth absolute column sums
    double *dmem      # branch metric of the selected branch per depth
    double *path      # path metrics, path[0] = 0
    double *lam_counter
    signed char *a
    signed char *a_best
    signed char *P    # prefix products, +/-1
    signed char *nvis


cdef long _sosd_core(SdWork *w, int L, double lambda_max, double r_stop,
                     double *lam_best_out, bint *term_out) nogil:
    cdef int i, k, l, stride
    cdef double g, pg, d, delta, lam, clip, r, lam_best, R
    cdef long nodes = 0
    cdef bint terminated = 0

    stride = L + 1
    lam_best = INFINITY
    R = INFINITY
    w.path[0] = 0.0
    w.P[0] = 1
    for k in range(stride):
        w.lam_counter[k] = INFINITY
        w.a_best[k] = 0
        w.nvis[k] = 0

    # findbest at depth 1
    i = 1
    g = 0.0
    for l in range(i):
        g += w.zu[l * stride + i] * w.P[l]
    pg = w.P[i - 1] * g
    if pg >= 0.0:
        w.a[i] = 1
        d = w.S[i] - pg
    else:
        w.a[i] = -1
        d = w.S[i] + pg
    w.P[i] = w.P[i - 1] * w.a[i]
    w.dmem[i] = d
    w.nvis[i] = 1
    nodes += 1
    delta = d

    while i != 0:
        lam = delta + w.path[i - 1]
        w.path[i] = lam
        if lam < R:
            if i != L:
                # move down: findbest at the child depth
                i += 1
                g = 0.0
                for l in range(i):
                    g += w.zu[l * stride + i] * w.P[l]
                pg = w.P[i - 1] * g
                if pg >= 0.0:
                    w.a[i] = 1
                    d = w.S[i] - pg
                else:
                    w.a[i] = -1
                    d = w.S[i] + pg
                w.P[i] = w.P[i - 1] * w.a[i]
                w.dmem[i] = d
                w.nvis[i] = 1
                nodes += 1
                delta = d
            else:
                if lam < lam_best:
                    for k in range(1, L + 1):
                        if w.a[k] != w.a_best[k]:
                            w.lam_counter[k] = lam_best
                        w.a_best[k] = w.a[k]
                    lam_best = lam
                    if lam_best <= r_stop:
                        terminated = 1
                        break
                else:
                    for k in range(1, L + 1):
                        if w.a[k] != w.a_best[k] and lam < w.lam_counter[k]:
                            w.lam_counter[k] = lam
                if lambda_max < INFINITY:
                    clip = lam_best + lambda_max
                    for k in range(1, L + 1):
                        if w.lam_counter[k] > clip:
                            w.lam_counter[k] = clip
                # findnext at the leaf level
                while i > 0 and w.nvis[i] == 2:
                    i -= 1
                if i > 0:
                    w.a[i] = -w.a[i]
                    w.P[i] = w.P[i - 1] * w.a[i]
                    d = 2.0 * w.S[i] - w.dmem[i]
                    w.dmem[i] = d
                    w.nvis[i] = 2
                    nodes += 1
                    delta = d
        else:
            # sibling branch metric is >= this one: skip it, move up
            i -= 1
            if i > 0:
                while i > 0 and w.nvis[i] == 2:
                    i -= 1
                if i > 0:
                    w.a[i] = -w.a[i]
                    w.P[i] = w.P[i - 1] * w.a[i]
                    d = 2.0 * w.S[i] - w.dmem[i]
                    w.dmem[i] = d
                    w.nvis[i] = 2
                    nodes += 1
                    delta = d
        if i != 0:
            # radius rule: free levels k >= i plus fixed prefix positions
            # already differing from the incumbent
            r = w.lam_counter[i]
            for k in range(i + 1, L + 1):
                if w.lam_counter[k] > r:
                    r = w.lam_counter[k]
            for l in range(1, i):
                if w.a[l] != w.a_best[l] and w.lam_counter[l] > r:
                    r = w.lam_counter[l]
            R = r

    lam_best_out[0] = lam_best
    term_out[0] = terminated
    return nodes


cdef int _sd_alloc(SdWork *w, int stride) nogil:
    w.zu = <double *> malloc(stride * stride * sizeof(double))
    w.S = <double *> malloc(stride * sizeof(double))
    w.dmem = <double *> malloc(stride * sizeof(double))
    w.path = <double *> malloc(stride * sizeof(double))
    w.lam_counter = <double *> malloc(stride * sizeof(double))
    w.a = <signed char *> malloc(stride)
    w.a_best = <signed char *> malloc(stride)
    w.P = <signed char *> malloc(stride)
    w.nvis = <signed char *> malloc(stride)
    if (w.zu == NULL or w.S == NULL or w.dmem == NULL or w.path == NULL or
            w.lam_counter == NULL or w.a == NULL or w.a_best == NULL or
            w.P == NULL or w.nvis == NULL):
        return 0
    return 1


cdef void _sd_free(SdWork *w) nogil:
    free(w.zu)
    free(w.S)
    free(w.dmem)
    free(w.path)
    free(w.lam_counter)
    free(w.a)
    free(w.a_best)
    free(w.P)
    free(w.nvis)


cdef void _sd_load(SdWork *w, double[:, ::1] zu, int L) nogil:
    cdef int i, l, stride
    cdef double s
    stride = L + 1
    for l in range(stride):
        for i in range(stride):
            w.zu[l * stride + i] = zu[l, i]
    for i in range(1, stride):
        s = 0.0
        for l in range(i):
            s += fabs(zu[l, i])
        w.S[i] = s


def sosd_block(zu, int L, double lambda_max, double r_stop, trace=None):
    """Single-block sphere search; see uwbmsdd._sdpy.sosd_block.

    The trace argument is accepted for signature compatibility and must be
    None (instrumentation lives in the pure-Python kernel).
    """
    if trace is not None:
        raise ValueError("the compiled kernel does not support tracing")
    zu_arr = np.ascontiguousarray(zu, dtype=np.float64)
    lam_counter = np.empty(L, dtype=np.float64)
    a_best = np.empty(L, dtype=np.int8)

    cdef double[:, ::1] zu_mv = zu_arr
    cdef double[::1] lc_mv = lam_counter
    cdef signed char[::1] ab_mv = a_best
    cdef SdWork w
    cdef double lam_best = 0.0
    cdef bint term = 0
    cdef long nodes
    cdef int k

    if not _sd_alloc(&w, L + 1):
        _sd_free(&w)
        raise MemoryError
    try:
        _sd_load(&w, zu_mv, L)
        nodes = _sosd_core(&w, L, lambda_max, r_stop, &lam_best, &term)
        for k in range(L):
            lc_mv[k] = w.lam_counter[k + 1]
            ab_mv[k] = w.a_best[k + 1]
    finally:
        _sd_free(&w)
    return float(lam_best), lam_counter, a_best, int(nodes), bool(term)


def sosd_batch(zu3, int L, double lambda_max, r_stop):
    """Batched sphere search over (B, L+1, L+1) blocks; see uwbmsdd._sdpy."""
    zu3_arr = np.ascontiguousarray(zu3, dtype=np.float64)
    r_stop_arr = np.ascontiguousarray(r_stop, dtype=np.float64)
    cdef Py_ssize_t B = zu3_arr.shape[0]
    lam_best = np.empty(B, dtype=np.float64)
    lam_counter = np.empty((B, L), dtype=np.float64)
    a_best = np.empty((B, L), dtype=np.int8)
    nodes = np.empty(B, dtype=np.int64)
    term = np.zeros(B, dtype=np.uint8)

    cdef double[:, :, ::1] zu_mv = zu3_arr
    cdef double[::1] rs_mv = r_stop_arr
    cdef double[::1] lb_mv = lam_best
    cdef double[:, ::1] lc_mv = lam_counter
    cdef signed char[:, ::1] ab_mv = a_best
    cdef long[::1] nd_mv = nodes
    cdef unsigned char[::1] tm_mv = term

    cdef SdWork w
    cdef Py_ssize_t b
    cdef int k
    cdef double lb = 0.0
    cdef bint tm = 0

    if not _sd_alloc(&w, L + 1):
        _sd_free(&w)
        raise MemoryError
    try:
        with nogil:
            for b in range(B):
                _sd_load(&w, zu_mv[b], L)
                nd_mv[b] = _sosd_core(&w, L, lambda_max, rs_mv[b], &lb, &tm)
                lb_mv[b] = lb
                tm_mv[b] = tm
                for k in range(L):
                    lc_mv[b, k] = w.lam_counter[k + 1]
                    ab_mv[b, k] = w.a_best[k + 1]
    finally:
        _sd_free(&w)
    return lam_best, lam_counter, a_best, nodes, term.astype(bool)


def viterbi_path(llr2, sgn0, sgn1):
    """Maximum-correlation trellis path; see uwbmsdd._sdpy.viterbi_path."""
    llr_arr = np.ascontiguousarray(llr2, dtype=np.float64)
    sg0_arr = np.ascontiguousarray(sgn0, dtype=np.float64)
    sg1_arr = np.ascontiguousarray(sgn1, dtype=np.float64)
    cdef Py_ssize_t steps = llr_arr.shape[0]
    cdef Py_ssize_t S = sg0_arr.shape[0]
    cdef Py_ssize_t half = S >> 1

    prev = np.empty((steps, S), dtype=np.int32)
    bits = np.empty(steps, dtype=np.uint8)
    pm = np.full(S, -INFINITY, dtype=np.float64)
    pm_new = np.empty(S, dtype=np.float64)
    pm[0] = 0.0

    cdef double[:, ::1] llr_mv = llr_arr
    cdef double[:, ::1] sg0_mv = sg0_arr
    cdef double[:, ::1] sg1_mv = sg1_arr
    cdef int[:, ::1] prev_mv = prev
    cdef unsigned char[::1] bits_mv = bits
    cdef double[::1] pm_mv = pm
    cdef double[::1] pmn_mv = pm_new

    cdef Py_ssize_t t, ns, p1, p2, state
    cdef int ub
    cdef double l0, l1, cand1, cand2

    with nogil:
        for t in range(steps):
            l0 = llr_mv[t, 0]
            l1 = llr_mv[t, 1]
            for ns in range(S):
                p1 = ns >> 1
                p2 = p1 + half
                ub = <int> (ns & 1)
                cand1 = pm_mv[p1] + (l0 * sg0_mv[p1, ub] + l1 * sg1_mv[p1, ub])
                cand2 = pm_mv[p2] + (l0 * sg0_mv[p2, ub] + l1 * sg1_mv[p2, ub])
                if cand2 > cand1:
                    pmn_mv[ns] = cand2
                    prev_mv[t, ns] = <int> p2
                else:
                    pmn_mv[ns] = cand1
                    prev_mv[t, ns] = <int> p1
            for ns in range(S):
                pm_mv[ns] = pmn_mv[ns]

    state = 0
    if not pm[0] > -INFINITY:
        state = int(np.argmax(pm))
    with nogil:
        for t in range(steps - 1, -1, -1):
            bits_mv[t] = <unsigned char> (state & 1)
            state = prev_mv[t, state]
    return bits
