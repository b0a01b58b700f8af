"""Pure-Python sphere-search and Viterbi kernels.

Fallback backend with the same call signatures and the same operation order
as the compiled extension (uwbmsdd._sdkernel), so both produce identical
results and identical node counts. The sphere search additionally supports
a trace hook used by the single-visit instrumentation tests.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"

_INF = float("inf")


def sosd_block(zu, L, lambda_max, r_stop, trace=None):
    """Single-tree-search sphere decoder on one block.

    zu         dense (L+1, L+1) float array, Z_{l,i} in the strict upper
               triangle (l < i); other entries ignored.
    lambda_max metric-domain clip value (sigma_n2 * (L+1) * llr_max); pass
               inf to disable clipping, 0.0 for hard output.
    r_stop     early-termination radius; pass a negative value to disable
               (path metrics are nonnegative, so -1.0 never triggers).
    trace      optional list; every branch-metric evaluation appends
               (depth, tuple(symbols up to depth)).

    Returns (lam_best, lam_counter[L], a_best[L], nodes, terminated_early).
    The counterhypothesis metrics are in the raw metric domain and may be
    inf where never resolved.
    """
    zu = np.asarray(zu, dtype=np.float64)
    # per-depth columns and absolute sums; the two branches of one node
    # always satisfy delta(+a) + delta(-a) = 2*S[i]
    zcol = [None] * (L + 1)
    S = [0.0] * (L + 1)
    for i in range(1, L + 1):
        col = [float(zu[l, i]) for l in range(i)]
        zcol[i] = col
        s = 0.0
        for v in col:  # plain-order accumulation, identical to the compiled kernel
            s += abs(v)
        S[i] = s

    a = [0] * (L + 1)
    P = [1] * (L + 1)  # prefix products, P[0] = 1
    nvis = [0] * (L + 1)  # branches tried per depth, <= 2
    dmem = [0.0] * (L + 1)  # branch metric of the currently selected branch
    path = [0.0] * (L + 1)
    lam_counter = [_INF] * (L + 1)
    a_best = [0] * (L + 1)  # 0 = unset; differs from +/-1 on purpose
    lam_best = _INF
    R = _INF
    nodes = 0
    terminated = False

    def findbest(i):
        nonlocal nodes
        g = 0.0
        col = zcol[i]
        for l in range(i):
            g += col[l] * P[l]
        pg = P[i - 1] * g
        if pg >= 0.0:
            a[i] = 1
            d = S[i] - pg
        else:
            a[i] = -1
            d = S[i] + pg
        P[i] = P[i - 1] * a[i]
        dmem[i] = d
        nvis[i] = 1
        nodes += 1
        if trace is not None:
            trace.append((i, tuple(a[1 : i + 1])))
        return d

    def findnext(i):
        nonlocal nodes
        while i > 0 and nvis[i] == 2:
            i -= 1
        if i == 0:
            return 0, 0.0
        a[i] = -a[i]
        P[i] = P[i - 1] * a[i]
        d = 2.0 * S[i] - dmem[i]
        dmem[i] = d
        nvis[i] = 2
        nodes += 1
        if trace is not None:
            trace.append((i, tuple(a[1 : i + 1])))
        return i, d

    i = 1
    delta = findbest(1)
    while i != 0:
        lam = delta + path[i - 1]
        path[i] = lam
        if lam < R:
            if i != L:
                i += 1
                delta = findbest(i)
            else:
                if lam < lam_best:
                    # positions flipped relative to the incumbent inherit the
                    # old best metric as their counterhypothesis
                    for k in range(1, L + 1):
                        if a[k] != a_best[k]:
                            lam_counter[k] = lam_best
                        a_best[k] = a[k]
                    lam_best = lam
                    if lam_best <= r_stop:
                        terminated = True
                        break
                else:
                    for k in range(1, L + 1):
                        if a[k] != a_best[k] and lam < lam_counter[k]:
                            lam_counter[k] = lam
                if lambda_max < _INF:
                    clip = lam_best + lambda_max
                    for k in range(1, L + 1):
                        if lam_counter[k] > clip:
                            lam_counter[k] = clip
                i, delta = findnext(i)
        else:
            # the sibling branch at this depth has metric >= the current one,
            # so it is pruned by the same radius: move up directly
            i -= 1
            if i > 0:
                i, delta = findnext(i)
        if i != 0:
            # radius rule: branches may still update counterhypotheses at the
            # free levels k >= i or at fixed prefix positions that already
            # differ from the incumbent sequence
            r = lam_counter[i]
            for k in range(i + 1, L + 1):
                if lam_counter[k] > r:
                    r = lam_counter[k]
            for l in range(1, i):
                if a[l] != a_best[l] and lam_counter[l] > r:
                    r = lam_counter[l]
            R = r

    return (
        lam_best,
        np.array(lam_counter[1:], dtype=np.float64),
        np.array(a_best[1:], dtype=np.int8),
        nodes,
        terminated,
    )


def sosd_batch(zu3, L, lambda_max, r_stop):
    """Run sosd_block over a (B, L+1, L+1) batch; r_stop is a length-B array.

    Returns (lam_best[B], lam_counter[B, L], a_best[B, L], nodes[B], term[B]).
    """
    zu3 = np.asarray(zu3, dtype=np.float64)
    B = zu3.shape[0]
    lam_best = np.empty(B)
    lam_counter = np.empty((B, L))
    a_best = np.empty((B, L), dtype=np.int8)
    nodes = np.empty(B, dtype=np.int64)
    term = np.zeros(B, dtype=bool)
    for b in range(B):
        lam_best[b], lam_counter[b], a_best[b], nodes[b], term[b] = sosd_block(
            zu3[b], L, lambda_max, float(r_stop[b])
        )
    return lam_best, lam_counter, a_best, nodes, term


def viterbi_path(llr2, sgn0, sgn1):
    """Maximum-correlation trellis path, traceback from the zero state.

    llr2       (steps, 2) float array of per-branch bit reliabilities.
    sgn0/sgn1  (S, 2) float arrays of +/-1 output signs (1 - 2c) of the two
               coded bits emitted for (state, input). The state transition
               is the shift register ns = ((s << 1) | u) mod S, so each
               state ns has predecessors ns >> 1 and (ns >> 1) + S/2 under
               the input bit u = ns & 1.

    Returns a (steps,) uint8 array of input bits. Assumes the encoder starts
    in state 0; traceback starts at state 0 (zero-terminated stream) or at
    the best reachable state if 0 was never reached.
    """
    llr2 = np.asarray(llr2, dtype=np.float64)
    steps = llr2.shape[0]
    S = sgn0.shape[0]
    half = S >> 1
    ns = np.arange(S)
    p1 = ns >> 1  # low predecessor of each state
    p2 = p1 + half
    ub = ns & 1  # input bit that leads into each state

    pm = np.full(S, -_INF)
    pm[0] = 0.0
    prev = np.empty((steps, S), dtype=np.int32)
    bm = llr2[:, 0, None, None] * sgn0[None, :, :] + llr2[:, 1, None, None] * sgn1[None, :, :]
    for t in range(steps):
        cand1 = pm[p1] + bm[t, p1, ub]
        cand2 = pm[p2] + bm[t, p2, ub]
        take2 = cand2 > cand1
        pm = np.where(take2, cand2, cand1)
        prev[t] = np.where(take2, p2, p1)

    state = 0 if pm[0] > -_INF else int(np.argmax(pm))
    bits = np.empty(steps, dtype=np.uint8)
    for t in range(steps - 1, -1, -1):
        bits[t] = state & 1
        state = prev[t, state]
    return bits
