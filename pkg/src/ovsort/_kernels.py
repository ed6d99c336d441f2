"""Compiled inner loops over ``(n, L)`` uint8 key arrays.

Every kernel moves an int64 ``perm`` array in lockstep with the key rows so
callers can recover where each output key came from.  ``cnt`` is a one-slot
int64 array; each key comparison bumps ``cnt[0]``.  All kernels release the
GIL so they can run on disjoint spans from several threads.

Helpers are local closures on purpose: numba inlines them, whereas calls to
separate jitted functions taking arrays pay refcounting on every comparison.
"""

from __future__ import annotations

import numpy as np
from numba import njit

INSERTION_CUTOFF = 16

_opts = dict(nogil=True, cache=True)


# --------------------------------------------------------------------------
# heapsort (bottom-up: descend to a leaf along larger children, then climb)


@njit(**_opts)
def heapsort(a, perm, cnt):
    n = a.shape[0]
    L = a.shape[1]
    if n < 2:
        return
    tmp = np.empty((2, L), dtype=a.dtype)

    def cmp(i, j):
        cnt[0] += 1
        for b in range(L):
            x = a[i, b]
            y = a[j, b]
            if x != y:
                return -1 if x < y else 1
        return 0

    def sift(root, end):
        j = root
        while 2 * j + 2 < end:
            c = 2 * j + 1
            if cmp(c, c + 1) < 0:
                c += 1
            j = c
        if 2 * j + 1 < end:
            j = 2 * j + 1
        while j > root and cmp(root, j) > 0:
            j = (j - 1) // 2
        if j == root:
            return
        # rotate the path root..j up one level; the sifted key lands at j
        for b in range(L):
            tmp[0, b] = a[j, b]
        tp = perm[j]
        for b in range(L):
            a[j, b] = a[root, b]
        perm[j] = perm[root]
        while j > root:
            j = (j - 1) // 2
            for b in range(L):
                tmp[1, b] = a[j, b]
            tp2 = perm[j]
            for b in range(L):
                a[j, b] = tmp[0, b]
            perm[j] = tp
            for b in range(L):
                tmp[0, b] = tmp[1, b]
            tp = tp2

    for i in range(n // 2 - 1, -1, -1):
        sift(i, n)
    for end in range(n - 1, 0, -1):
        for b in range(L):
            v = a[0, b]
            a[0, b] = a[end, b]
            a[end, b] = v
        t = perm[0]
        perm[0] = perm[end]
        perm[end] = t
        sift(0, end)


# --------------------------------------------------------------------------
# quicksort: median of three, insertion sort below the cutoff, heapsort
# once the depth budget runs out


@njit(**_opts)
def quicksort(a, perm, cnt):
    n = a.shape[0]
    L = a.shape[1]
    if n < 2:
        return
    depth = 0
    m = n
    while m > 1:
        depth += 1
        m >>= 1
    # tmp[0] holds the pivot, tmp[1] the key being inserted
    tmp = np.empty((2, L), dtype=a.dtype)

    def cmp(i, j):
        cnt[0] += 1
        for b in range(L):
            x = a[i, b]
            y = a[j, b]
            if x != y:
                return -1 if x < y else 1
        return 0

    def cmp_tmp(i, t):
        cnt[0] += 1
        for b in range(L):
            x = a[i, b]
            y = tmp[t, b]
            if x != y:
                return -1 if x < y else 1
        return 0

    def swap(i, j):
        for b in range(L):
            v = a[i, b]
            a[i, b] = a[j, b]
            a[j, b] = v
        t = perm[i]
        perm[i] = perm[j]
        perm[j] = t

    def insertion(lo, hi):
        for i in range(lo + 1, hi):
            if cmp(i - 1, i) <= 0:
                continue
            for b in range(L):
                tmp[1, b] = a[i, b]
            tp = perm[i]
            for b in range(L):
                a[i, b] = a[i - 1, b]
            perm[i] = perm[i - 1]
            j = i - 1
            while j > lo and cmp_tmp(j - 1, 1) > 0:
                for b in range(L):
                    a[j, b] = a[j - 1, b]
                perm[j] = perm[j - 1]
                j -= 1
            for b in range(L):
                a[j, b] = tmp[1, b]
            perm[j] = tp

    def partition(lo, hi):
        mid = lo + (hi - lo) // 2
        last = hi - 1
        if cmp(mid, lo) < 0:
            swap(mid, lo)
        if cmp(last, mid) < 0:
            swap(last, mid)
            if cmp(mid, lo) < 0:
                swap(mid, lo)
        for b in range(L):
            tmp[0, b] = a[mid, b]
        # Hoare partition; a[lo] <= pivot <= a[last] act as sentinels
        i = lo - 1
        j = hi
        while True:
            i += 1
            while cmp_tmp(i, 0) < 0:
                i += 1
            j -= 1
            while cmp_tmp(j, 0) > 0:
                j -= 1
            if i >= j:
                return j + 1
            swap(i, j)

    # The recursion runs on an explicit stack (numba cannot cache
    # self-recursive functions).  The smaller side is always processed
    # first, so at most lg n frames are pending.
    stack = np.empty((depth + 2, 3), dtype=np.int64)
    stack[0, 0] = 0
    stack[0, 1] = n
    stack[0, 2] = 2 * depth
    top = 1
    while top > 0:
        top -= 1
        lo = stack[top, 0]
        hi = stack[top, 1]
        budget = stack[top, 2]
        while hi - lo > INSERTION_CUTOFF:
            if budget == 0:
                heapsort(a[lo:hi], perm[lo:hi], cnt)
                lo = hi
                break
            budget -= 1
            cut = partition(lo, hi)
            if cut - lo < hi - cut:
                stack[top, 0] = cut
                stack[top, 1] = hi
                hi = cut
            else:
                stack[top, 0] = lo
                stack[top, 1] = cut
                lo = cut
            stack[top, 2] = budget
            top += 1
        insertion(lo, hi)


# --------------------------------------------------------------------------
# p-way merging of spans of one source array


@njit(**_opts)
def merge_spans(src, src_perm, starts, ends, out, out_perm, out_lo, cnt):
    """Merge sorted spans ``src[starts[r]:ends[r]]`` into ``out[out_lo:]``.

    Equal keys leave in run order.  Two runs use a plain two-pointer merge;
    more use a loser tree (``K - 1`` comparisons to build, at most
    ``ceil(lg K)`` per emitted key).
    """
    K = starts.shape[0]
    L = src.shape[1]
    o = out_lo
    if K == 0:
        return
    if K == 1:
        for i in range(starts[0], ends[0]):
            for b in range(L):
                out[o, b] = src[i, b]
            out_perm[o] = src_perm[i]
            o += 1
        return
    pos = starts.copy()

    def cmp(i, j):
        cnt[0] += 1
        for b in range(L):
            x = src[i, b]
            y = src[j, b]
            if x != y:
                return -1 if x < y else 1
        return 0

    if K == 2:
        i, ie, j, je = pos[0], ends[0], pos[1], ends[1]
        while i < ie and j < je:
            if cmp(j, i) < 0:
                for b in range(L):
                    out[o, b] = src[j, b]
                out_perm[o] = src_perm[j]
                j += 1
            else:
                for b in range(L):
                    out[o, b] = src[i, b]
                out_perm[o] = src_perm[i]
                i += 1
            o += 1
        while i < ie:
            for b in range(L):
                out[o, b] = src[i, b]
            out_perm[o] = src_perm[i]
            i += 1
            o += 1
        while j < je:
            for b in range(L):
                out[o, b] = src[j, b]
            out_perm[o] = src_perm[j]
            j += 1
            o += 1
        return

    def beats(x, y):
        # exhausted runs lose without a key comparison; ties go to the lower run
        if pos[x] >= ends[x]:
            return False
        if pos[y] >= ends[y]:
            return True
        c = cmp(pos[x], pos[y])
        if c != 0:
            return c < 0
        return x < y

    # internal nodes 1..K-1; the leaf of run r is node K + r
    loser = np.empty(K, dtype=np.int64)
    winner = np.empty(2 * K, dtype=np.int64)
    for r in range(K):
        winner[K + r] = r
    for t in range(K - 1, 0, -1):
        x = winner[2 * t]
        y = winner[2 * t + 1]
        if beats(y, x):
            winner[t] = y
            loser[t] = x
        else:
            winner[t] = x
            loser[t] = y
    w = winner[1]
    total = 0
    for r in range(K):
        total += ends[r] - starts[r]
    for _ in range(total):
        i = pos[w]
        for b in range(L):
            out[o, b] = src[i, b]
        out_perm[o] = src_perm[i]
        o += 1
        pos[w] = i + 1
        t = (w + K) >> 1
        while t > 0:
            c = loser[t]
            if beats(c, w):
                loser[t] = w
                w = c
            t >>= 1


@njit(**_opts)
def merge_buckets(src, src_perm, seq_starts, bounds, out, out_perm, out_offsets, first, last, cnt):
    """Form buckets ``first..last-1``: bucket j merges, for every sequence k,
    ``src[seq_starts[k] + bounds[k, j] : seq_starts[k] + bounds[k, j + 1]]``."""
    p = bounds.shape[0]
    starts = np.empty(p, dtype=np.int64)
    ends = np.empty(p, dtype=np.int64)
    for j in range(first, last):
        m = 0
        for k in range(p):
            s = seq_starts[k] + bounds[k, j]
            e = seq_starts[k] + bounds[k, j + 1]
            if e > s:
                starts[m] = s
                ends[m] = e
                m += 1
        merge_spans(src, src_perm, starts[:m], ends[:m], out, out_perm, out_offsets[j], cnt)


# --------------------------------------------------------------------------
# splitting a sorted sequence around tagged splitters


@njit(**_opts)
def _split(x, k, skeys, sseq, sidx, row, cnt, binary):
    m = x.shape[0]
    L = x.shape[1]
    nspl = skeys.shape[0]

    def tagged_le(i, j):
        # (x[i], k, i) <= (skeys[j], sseq[j], sidx[j])
        cnt[0] += 1
        for b in range(L):
            u = x[i, b]
            v = skeys[j, b]
            if u != v:
                return u < v
        if k != sseq[j]:
            return k < sseq[j]
        return i <= sidx[j]

    row[0] = 0
    lo = 0
    for j in range(nspl):
        if binary:
            # splitters are sorted, so the previous count is a lower bound
            hi = m
            while lo < hi:
                mid = (lo + hi) >> 1
                if tagged_le(mid, j):
                    lo = mid + 1
                else:
                    hi = mid
        else:
            while lo < m and tagged_le(lo, j):
                lo += 1
        row[j + 1] = lo
    row[nspl + 1] = m


@njit(**_opts)
def split_binary(x, k, skeys, sseq, sidx, row, cnt):
    """row[j + 1] = number of positions of x whose tagged key is <= splitter j,
    found by one binary search per splitter."""
    _split(x, k, skeys, sseq, sidx, row, cnt, True)


@njit(**_opts)
def split_merge(x, k, skeys, sseq, sidx, row, cnt):
    """Same contract as split_binary, by one linear merge pass."""
    _split(x, k, skeys, sseq, sidx, row, cnt, False)
