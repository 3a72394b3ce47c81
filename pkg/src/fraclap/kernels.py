"""Hot inner-loop kernels: tolerance-based point dedup/matching and CG.

All functions here are nopython-compatible and get JIT-compiled when numba
is enabled (see :mod:`fraclap.jit`); otherwise the same code runs
interpreted.  Both modes produce bitwise-identical results: the spatial
hash only routes candidate comparisons, the outcome is decided by exact
float distance checks.

Point merging uses a grid hash with cell size equal to the tolerance, so
two points within tolerance differ by at most one cell per axis and are
always found by scanning the 3^d neighbor cells.  Cell coordinates are
packed into 21 bits each; packing collisions merely add distance checks.
"""

import numpy as np

from .jit import maybe_njit

_KEY_MASK = (1 << 21) - 1
_M63 = (1 << 63) - 1


@maybe_njit
def _cell_key(q0, q1, q2):
    return ((q0 & _KEY_MASK) << 42) | ((q1 & _KEY_MASK) << 21) | (q2 & _KEY_MASK)


@maybe_njit
def _slot_hash(key):
    # xorshift mix so table slots draw on all key bits (the packed key has
    # structured low bits); masking after left shifts keeps Python ints and
    # wrapping int64 arithmetic bitwise identical
    h = key
    h ^= h >> 33
    h ^= (h << 13) & _M63
    h ^= h >> 29
    return h


@maybe_njit
def _dedup_core(points, tol):
    """Merge points closer than ``tol``, preserving first-occurrence order.

    Returns ``(assign, uniq_rows, amb_i, amb_j)`` where ``assign[i]`` is the
    unique-vertex index of input row ``i`` and ``uniq_rows`` lists the source
    row of each unique vertex.  A merge at distance in ``(tol/10, tol]`` is
    suspicious (true coincidences land far below ``tol/10``); the first such
    pair of rows is reported through ``amb_i, amb_j`` (-1, -1 when clean).
    """
    n, d = points.shape
    cap = 8
    while cap < 4 * n:
        cap <<= 1
    mask = cap - 1
    head = np.full(cap, -1, np.int64)
    slot_key = np.zeros(cap, np.int64)
    nxt = np.full(n, -1, np.int64)
    uniq_row = np.empty(n, np.int64)
    assign = np.empty(n, np.int64)
    n_uniq = 0
    amb_i = -1
    amb_j = -1
    tol2 = tol * tol
    near2 = (0.1 * tol) * (0.1 * tol)
    ozlo = -1 if d == 3 else 0
    ozhi = 1 if d == 3 else 0
    for i in range(n):
        q0 = int(np.floor(points[i, 0] / tol))
        q1 = int(np.floor(points[i, 1] / tol))
        if d == 3:
            q2 = int(np.floor(points[i, 2] / tol))
        else:
            q2 = 0
        best = -1
        best_d2 = np.inf
        for ox in range(-1, 2):
            for oy in range(-1, 2):
                for oz in range(ozlo, ozhi + 1):
                    key = _cell_key(q0 + ox, q1 + oy, q2 + oz)
                    s = _slot_hash(key) & mask
                    while head[s] != -1:
                        if slot_key[s] == key:
                            j = head[s]
                            while j != -1:
                                r = uniq_row[j]
                                d2 = 0.0
                                for k in range(d):
                                    dv = points[i, k] - points[r, k]
                                    d2 += dv * dv
                                if d2 < best_d2:
                                    best_d2 = d2
                                    best = j
                                j = nxt[j]
                            break
                        s = (s + 1) & mask
        if best >= 0 and best_d2 <= tol2:
            if best_d2 > near2 and amb_i < 0:
                amb_i = i
                amb_j = uniq_row[best]
            assign[i] = best
        else:
            key = _cell_key(q0, q1, q2)
            s = _slot_hash(key) & mask
            while head[s] != -1 and slot_key[s] != key:
                s = (s + 1) & mask
            if head[s] == -1:
                slot_key[s] = key
                nxt[n_uniq] = -1
            else:
                nxt[n_uniq] = head[s]
            head[s] = n_uniq
            uniq_row[n_uniq] = i
            assign[i] = n_uniq
            n_uniq += 1
    return assign, uniq_row[:n_uniq].copy(), amb_i, amb_j


@maybe_njit
def _match_core(ref, query, tol):
    """Nearest-reference match within ``tol`` for each query point.

    Returns ``(best_idx, best_d2)``; ``best_idx[i]`` is -1 when no reference
    point lies within ``tol`` of ``query[i]``.
    """
    m, d = ref.shape
    nq = query.shape[0]
    cap = 8
    while cap < 4 * m:
        cap <<= 1
    mask = cap - 1
    head = np.full(cap, -1, np.int64)
    slot_key = np.zeros(cap, np.int64)
    nxt = np.full(m, -1, np.int64)
    ozlo = -1 if d == 3 else 0
    ozhi = 1 if d == 3 else 0
    for r in range(m):
        q0 = int(np.floor(ref[r, 0] / tol))
        q1 = int(np.floor(ref[r, 1] / tol))
        if d == 3:
            q2 = int(np.floor(ref[r, 2] / tol))
        else:
            q2 = 0
        key = _cell_key(q0, q1, q2)
        s = _slot_hash(key) & mask
        while head[s] != -1 and slot_key[s] != key:
            s = (s + 1) & mask
        if head[s] == -1:
            slot_key[s] = key
            nxt[r] = -1
        else:
            nxt[r] = head[s]
        head[s] = r
    best_idx = np.full(nq, -1, np.int64)
    best_d2 = np.full(nq, np.inf, np.float64)
    tol2 = tol * tol
    for i in range(nq):
        q0 = int(np.floor(query[i, 0] / tol))
        q1 = int(np.floor(query[i, 1] / tol))
        if d == 3:
            q2 = int(np.floor(query[i, 2] / tol))
        else:
            q2 = 0
        for ox in range(-1, 2):
            for oy in range(-1, 2):
                for oz in range(ozlo, ozhi + 1):
                    key = _cell_key(q0 + ox, q1 + oy, q2 + oz)
                    s = _slot_hash(key) & mask
                    while head[s] != -1:
                        if slot_key[s] == key:
                            r = head[s]
                            while r != -1:
                                d2 = 0.0
                                for k in range(d):
                                    dv = query[i, k] - ref[r, k]
                                    d2 += dv * dv
                                if d2 <= tol2 and d2 < best_d2[i]:
                                    best_d2[i] = d2
                                    best_idx[i] = r
                                r = nxt[r]
                            break
                        s = (s + 1) & mask
    return best_idx, best_d2


@maybe_njit
def _cg_core(indptr, indices, data, b, x, rtol, maxiter):
    """Conjugate gradient on a CSR matrix; ``x`` holds the iterate in place.

    Returns ``(iterations, status, residual_norm)`` with status 0 converged,
    1 iteration budget exhausted, 2 non-positive curvature (matrix not SPD).
    """
    n = b.shape[0]
    r = np.empty(n, np.float64)
    p = np.empty(n, np.float64)
    ap = np.empty(n, np.float64)
    bb = 0.0
    for i in range(n):
        s = 0.0
        for k in range(indptr[i], indptr[i + 1]):
            s += data[k] * x[indices[k]]
        r[i] = b[i] - s
        p[i] = r[i]
        bb += b[i] * b[i]
    if bb == 0.0:
        for i in range(n):
            x[i] = 0.0
        return 0, 0, 0.0
    rs = 0.0
    for i in range(n):
        rs += r[i] * r[i]
    target2 = rtol * rtol * bb
    it = 0
    while rs > target2 and it < maxiter:
        pap = 0.0
        for i in range(n):
            s = 0.0
            for k in range(indptr[i], indptr[i + 1]):
                s += data[k] * p[indices[k]]
            ap[i] = s
            pap += p[i] * s
        if pap <= 0.0:
            return it, 2, np.sqrt(rs)
        alpha = rs / pap
        for i in range(n):
            x[i] += alpha * p[i]
            r[i] -= alpha * ap[i]
        rs_new = 0.0
        for i in range(n):
            rs_new += r[i] * r[i]
        beta = rs_new / rs
        rs = rs_new
        for i in range(n):
            p[i] = r[i] + beta * p[i]
        it += 1
    status = 0 if rs <= target2 else 1
    return it, status, np.sqrt(rs)
