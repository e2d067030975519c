"""Branch-and-bound minimum distance between two ordered point sequences.

Consecutive points of a path are spatially close, so dyadic blocks of
indices have small bounding boxes.  Pairs of blocks whose box-to-box distance
exceeds the best distance found so far (or the cap) are discarded; surviving
pairs are split into their children, nearest first.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit


@njit(cache=True)
def _build(P, K):
    n, d = P.shape
    nb = np.empty(K + 1, np.int64)
    off = np.empty(K + 2, np.int64)
    off[0] = 0
    for k in range(K + 1):
        nb[k] = (n + (1 << k) - 1) >> k
        off[k + 1] = off[k] + nb[k]
    lo = np.empty((off[K + 1], d))
    hi = np.empty((off[K + 1], d))
    for i in range(n):
        for t in range(d):
            lo[i, t] = P[i, t]
            hi[i, t] = P[i, t]
    for k in range(1, K + 1):
        for i in range(nb[k]):
            c0 = off[k - 1] + 2 * i
            has1 = 2 * i + 1 < nb[k - 1]
            for t in range(d):
                a = lo[c0, t]
                b = hi[c0, t]
                if has1:
                    a = min(a, lo[c0 + 1, t])
                    b = max(b, hi[c0 + 1, t])
                lo[off[k] + i, t] = a
                hi[off[k] + i, t] = b
    return lo, hi, nb, off


@njit(cache=True)
def _box_gap2(loA, hiA, ia, loB, hiB, ib):
    s = 0.0
    for t in range(loA.shape[1]):
        g = loA[ia, t] - hiB[ib, t]
        g2 = loB[ib, t] - hiA[ia, t]
        if g2 > g:
            g = g2
        if g > 0.0:
            s += g * g
    return s


@njit(cache=True)
def _min_distance2(P, Q, cap2):
    n = P.shape[0]
    m = Q.shape[0]
    K = 0
    while (1 << K) < max(n, m):
        K += 1
    loA, hiA, nbA, offA = _build(P, K)
    loB, hiB, nbB, offB = _build(Q, K)
    best2 = cap2
    found = False
    size = 4 * (K + 2)
    st_k = np.empty(size, np.int64)
    st_a = np.empty(size, np.int64)
    st_b = np.empty(size, np.int64)
    st_k[0] = K
    st_a[0] = 0
    st_b[0] = 0
    sp = 1
    ck = np.empty(4, np.int64)
    ca = np.empty(4, np.int64)
    cb = np.empty(4, np.int64)
    cl = np.empty(4)
    while sp > 0:
        sp -= 1
        k = st_k[sp]
        ia = st_a[sp]
        ib = st_b[sp]
        if k == 0:
            s = 0.0
            for t in range(P.shape[1]):
                diff = P[ia, t] - Q[ib, t]
                s += diff * diff
            if s <= best2:
                best2 = s
                found = True
            continue
        if _box_gap2(loA, hiA, offA[k] + ia, loB, hiB, offB[k] + ib) > best2:
            continue
        nc = 0
        for xa in range(2 * ia, min(2 * ia + 2, nbA[k - 1])):
            for xb in range(2 * ib, min(2 * ib + 2, nbB[k - 1])):
                g = _box_gap2(loA, hiA, offA[k - 1] + xa, loB, hiB, offB[k - 1] + xb)
                if g <= best2:
                    ck[nc] = k - 1
                    ca[nc] = xa
                    cb[nc] = xb
                    cl[nc] = g
                    nc += 1
        # push farthest first so the nearest child is explored next
        order = np.argsort(-cl[:nc])
        for j in order:
            st_k[sp] = ck[j]
            st_a[sp] = ca[j]
            st_b[sp] = cb[j]
            sp += 1
    return best2, found


def min_distance(P, Q, cap=math.inf) -> float:
    """``min_{i,j} |P_i - Q_j|``, or ``inf`` if it exceeds ``cap``."""
    P = np.ascontiguousarray(P, dtype=float)
    Q = np.ascontiguousarray(Q, dtype=float)
    if P.ndim != 2 or Q.ndim != 2 or P.shape[1] != Q.shape[1]:
        raise ValueError("point arrays must be (n, d) with matching d")
    if len(P) == 0 or len(Q) == 0:
        return math.inf
    cap2 = cap * cap if math.isfinite(cap) else math.inf
    best2, found = _min_distance2(P, Q, cap2)
    return math.sqrt(best2) if found else math.inf


def brute_min_distance(P, Q) -> float:
    """Reference: all pairs, same arithmetic as :func:`min_distance`."""
    P = np.asarray(P, dtype=float)
    Q = np.asarray(Q, dtype=float)
    best = math.inf
    for i in range(len(P)):
        d2 = ((P[i][None, :] - Q) ** 2).sum(axis=1)
        best = min(best, float(d2.min()))
    return math.sqrt(best)
