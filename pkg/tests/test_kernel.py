import itertools

import numpy as np
import pytest

from elastic_tilings import kernel
from elastic_tilings import _kernel_py


def test_binomial_table():
    b = kernel.binomial_table(10, 4)
    from math import comb

    for v in range(11):
        for j in range(5):
            assert b[v, j] == comb(v, j)


def test_block_rank_is_a_bijection():
    N, n = 8, 3
    b = kernel.binomial_table(N, n)
    ranks = sorted(kernel.block_rank(c, b) for c in itertools.combinations(range(N), n))
    assert ranks == list(range(len(ranks)))


def _brute(N, n, w, b):
    def rec(rest):
        if not rest:
            return 1.0
        first, others = rest[0], rest[1:]
        total = 0.0
        for combo in itertools.combinations(others, n - 1):
            block = (first,) + combo
            left = tuple(v for v in others if v not in combo)
            total += w[kernel.block_rank(block, b)] * rec(left)
        return total

    return rec(tuple(range(N)))


@pytest.mark.parametrize("backend", kernel.available_backends())
@pytest.mark.parametrize("N,n", [(4, 2), (6, 2), (6, 3), (8, 4), (9, 3)])
def test_partition_sum_matches_brute_force(backend, N, n, rng):
    b = kernel.binomial_table(N, n)
    w = rng.uniform(0.1, 1.0, size=int(b[N, n]))
    got = kernel.partition_sum((1 << N) - 1, w, b, n, backend)
    assert got == pytest.approx(_brute(N, n, w, b), rel=1e-13)


@pytest.mark.skipif("cython" not in kernel.available_backends(), reason="compiled kernel not built")
def test_backends_bit_identical(rng):
    N, n = 12, 2
    b = kernel.binomial_table(N, n)
    w = rng.uniform(0.0, 1.0, size=int(b[N, n]))
    full = (1 << N) - 1
    assert kernel.partition_sum(full, w, b, n, "cython") == kernel.partition_sum(full, w, b, n, "python")


def test_unknown_backend():
    b = kernel.binomial_table(4, 2)
    with pytest.raises(ValueError):
        kernel.partition_sum(15, np.ones(6), b, 2, "fortran")


def test_python_twin_is_importable_directly():
    b = kernel.binomial_table(4, 2)
    assert _kernel_py.partition_sum(15, [1.0] * 6, b.tolist(), 2) == 3.0


def test_environment_forces_pure_backend():
    import os
    import subprocess
    import sys

    env = dict(os.environ, ELASTIC_TILINGS_PURE="1")
    code = "from elastic_tilings import kernel; print(kernel.BACKEND, kernel.available_backends())"
    res = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert res.stdout.split()[0] == "python"
