"""Pure-Python set-partition enumeration; the reference for ``_kernel``."""

from __future__ import annotations

from itertools import combinations


def partition_sum(mask: int, weights, binom, n: int) -> float:
    """Sum over partitions of ``mask`` into n-blocks of the product of block weights.

    ``weights`` is indexed by the colex rank of each block.
    """
    if mask == 0:
        return 1.0
    verts = [v for v in range(mask.bit_length()) if mask >> v & 1]
    first, rest = verts[0], verts[1:]
    base_rank = int(binom[first][1])
    total = 0.0
    for combo in combinations(rest, n - 1):
        rank = base_rank
        bits = 1 << first
        for j, v in enumerate(combo):
            rank += int(binom[v][j + 2])
            bits |= 1 << v
        total += weights[rank] * partition_sum(mask & ~bits, weights, binom, n)
    return total
