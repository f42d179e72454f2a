"""Compiled successive-cancellation list kernel.

Memory layout: per tree level ``k`` (node size ``2**k``) the LLRs and the
left-child partial sums of every path live in row ``j`` of ``alpha``/``beta``
at column offset ``2**k``; level ``m`` of ``alpha`` holds the channel LLRs.
Path forks do not copy arrays; instead each level keeps an owner map from
path index to the row holding that path's data, and the maps are permuted at
every fork (lazy copy). Overall cost is O(L * N * log N).

The code tree is walked in "nodes" rather than leaves: an all-frozen subtree
(rate-0) or a subtree whose only unfrozen bit is its last leaf (repetition,
which includes a single information leaf) is decided in one step. With the
min-sum update and the hard-decision path metric, both shortcuts produce
exactly the metrics of the leaf-by-leaf schedule.
"""

import numpy as np
from numba import njit

RATE0 = 0
REP = 1


def node_schedule(frozen):
    """Decompose the code tree into rate-0 / repetition nodes, in decoding order.

    Returns ``(start, level, kind)`` int64 arrays.
    """
    frozen = np.asarray(frozen, dtype=bool)
    n = frozen.size
    m = n.bit_length() - 1
    out = []

    def rec(start, k):
        seg = frozen[start:start + (1 << k)]
        if seg.all():
            out.append((start, k, RATE0))
        elif seg[:-1].all():
            out.append((start, k, REP))
        else:
            rec(start, k - 1)
            rec(start + (1 << (k - 1)), k - 1)

    rec(0, m)
    arr = np.array(out, dtype=np.int64).reshape(-1, 3)
    return arr[:, 0].copy(), arr[:, 1].copy(), arr[:, 2].copy()


@njit(cache=True)
def _ctz(i):
    r = 0
    while (i & 1) == 0:
        i >>= 1
        r += 1
    return r


@njit(cache=True)
def scl_decode(llr, node_start, node_level, node_kind, list_size):
    """Run SCL over the mother code.

    Parameters
    ----------
    llr : float64 array of length 2**m
        Channel LLRs in mother-code order (0 at punctured positions).
    node_start, node_level, node_kind : int64 arrays
        Output of :func:`node_schedule` for the frozen set.
    list_size : int
        Maximum number of surviving paths.

    Returns
    -------
    u : uint8 array (n_paths, 2**m)
        Decoded input vectors, best path metric first; equal metrics keep
        path order.
    pm : float64 array (n_paths,)
        Path metrics, non-decreasing.
    """
    n = llr.shape[0]
    m = _ctz(n)
    L = list_size
    n_nodes = node_start.shape[0]

    alpha = np.empty((L, 2 * n))
    beta = np.empty((L, 2 * n), dtype=np.uint8)
    alpha[0, n:] = llr
    own_a = np.zeros((m + 1, L), dtype=np.int64)
    own_b = np.zeros((m + 1, L), dtype=np.int64)
    pm = np.zeros(L)
    parent = np.zeros((n_nodes, L), dtype=np.int64)
    bits = np.zeros((n_nodes, L), dtype=np.uint8)
    tmp = np.zeros(n, dtype=np.uint8)

    cand_pm = np.empty(2 * L)
    perm = np.empty(L, dtype=np.int64)
    new_bit = np.zeros(L, dtype=np.uint8)
    new_pm = np.empty(L)
    scratch = np.empty(L, dtype=np.int64)

    n_act = 1
    for q in range(n_nodes):
        i = node_start[q]
        kq = node_level[q]
        size = 1 << kq

        # LLR propagation down to the node
        if i == 0:
            top = m
        else:
            top = _ctz(i)
            h = 1 << top
            for j in range(n_act):
                ra = own_a[top + 1, j]
                rb = own_b[top, j]
                for t in range(h):
                    sgn = 1.0 - 2.0 * beta[rb, h + t]
                    alpha[j, h + t] = alpha[ra, 3 * h + t] + sgn * alpha[ra, 2 * h + t]
                own_a[top, j] = j
        for k in range(top - 1, kq - 1, -1):
            h = 1 << k
            for j in range(n_act):
                ra = own_a[k + 1, j]
                for t in range(h):
                    a = alpha[ra, 2 * h + t]
                    b = alpha[ra, 3 * h + t]
                    alpha[j, h + t] = np.sign(a) * np.sign(b) * min(abs(a), abs(b))
                own_a[k, j] = j

        # node decision
        if node_kind[q] == RATE0:
            for j in range(n_act):
                ra = own_a[kq, j]
                acc = 0.0
                for t in range(size):
                    a = alpha[ra, size + t]
                    if a < 0:
                        acc -= a
                pm[j] += acc
                parent[q, j] = j
                new_bit[j] = 0
        else:
            for j in range(n_act):
                ra = own_a[kq, j]
                neg = 0.0
                pos = 0.0
                for t in range(size):
                    a = alpha[ra, size + t]
                    if a < 0:
                        neg -= a
                    else:
                        pos += a
                cand_pm[2 * j] = pm[j] + neg
                cand_pm[2 * j + 1] = pm[j] + pos
            n_cand = 2 * n_act
            n_new = min(n_cand, L)
            # keep the n_new smallest metrics; ties at the threshold go to
            # the lower candidate index; survivors stay in candidate order
            if n_new < n_cand:
                thr = np.partition(cand_pm[:n_cand], n_new - 1)[n_new - 1]
                n_below = 0
                for c in range(n_cand):
                    if cand_pm[c] < thr:
                        n_below += 1
                n_tie = n_new - n_below
            else:
                thr = np.inf
                n_tie = 0
            r = 0
            for c in range(n_cand):
                v = cand_pm[c]
                keep = v < thr
                if not keep and v == thr and n_tie > 0:
                    keep = True
                    n_tie -= 1
                if keep:
                    perm[r] = c >> 1
                    new_bit[r] = c & 1
                    new_pm[r] = v
                    r += 1
            for r in range(n_new):
                pm[r] = new_pm[r]
                parent[q, r] = perm[r]
                bits[q, r] = new_bit[r]
            for k in range(m + 1):
                for r in range(n_new):
                    scratch[r] = own_a[k, perm[r]]
                for r in range(n_new):
                    own_a[k, r] = scratch[r]
                for r in range(n_new):
                    scratch[r] = own_b[k, perm[r]]
                for r in range(n_new):
                    own_b[k, r] = scratch[r]
            n_act = n_new

        # partial-sum propagation back up
        if i + size == n:
            break
        up = _ctz(i + size)
        for j in range(n_act):
            bj = new_bit[j]
            for t in range(size):
                tmp[t] = bj
            for k in range(kq, up):
                h = 1 << k
                rb = own_b[k, j]
                for t in range(h):
                    tmp[h + t] = tmp[t]
                    tmp[t] ^= beta[rb, h + t]
            h = 1 << up
            for t in range(h):
                beta[j, h + t] = tmp[t]
        for j in range(n_act):
            own_b[up, j] = j

    final = np.argsort(pm[:n_act], kind="mergesort")
    u = np.zeros((n_act, n), dtype=np.uint8)
    for r in range(n_act):
        j = final[r]
        p = j
        for q in range(n_nodes - 1, -1, -1):
            if node_kind[q] == REP:
                u[r, node_start[q] + (1 << node_level[q]) - 1] = bits[q, p]
            p = parent[q, p]
    return u, pm[final]
