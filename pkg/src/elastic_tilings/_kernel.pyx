# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled set-partition enumeration; mirrors ``_kernel_py``."""

from libc.stdint cimport uint64_t, int64_t

cdef enum:
    MAXV = 64


cdef double _rec(uint64_t mask, const double[::1] w, const int64_t[:, ::1] binom,
                 int n) noexcept nogil:
    cdef int verts[MAXV]
    cdef int idx[MAXV]
    cdef int m = 0, v, k, j, first
    cdef uint64_t rest, bits
    cdef int64_t rank
    cdef double total = 0.0

    if mask == 0:
        return 1.0
    rest = mask
    while rest:
        v = 0
        while not (rest >> v) & 1:
            v += 1
        verts[m] = v
        m += 1
        rest &= rest - 1
    first = verts[0]
    k = n - 1
    if k == 0:
        return w[binom[first, 1]] * _rec(mask & ~((<uint64_t>1) << first), w, binom, n)
    # lexicographic (n-1)-combinations of verts[1..m-1]
    for j in range(k):
        idx[j] = j + 1
    while True:
        rank = binom[first, 1]
        bits = (<uint64_t>1) << first
        for j in range(k):
            rank += binom[verts[idx[j]], j + 2]
            bits |= (<uint64_t>1) << verts[idx[j]]
        total += w[rank] * _rec(mask & ~bits, w, binom, n)
        j = k - 1
        while j >= 0 and idx[j] == m - k + j:
            j -= 1
        if j < 0:
            break
        idx[j] += 1
        j += 1
        while j < k:
            idx[j] = idx[j - 1] + 1
            j += 1
    return total


def partition_sum(uint64_t mask, const double[::1] weights, const int64_t[:, ::1] binom, int n):
    """Sum over partitions of ``mask`` into n-blocks of the product of block weights.

    ``weights`` is indexed by the colex rank of each block.
    """
    cdef double out
    with nogil:
        out = _rec(mask, weights, binom, n)
    return out
