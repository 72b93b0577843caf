"""Backend selection for the set-partition kernel.

The compiled extension is used when it imports; otherwise, or when the
environment variable ``ELASTIC_TILINGS_PURE`` is set to a non-empty value,
the pure-Python twin is used. Both return bit-identical sums: they visit
blocks in the same order and accumulate in the same tree.
"""

from __future__ import annotations

import os

import numpy as np

from . import _kernel_py

_compiled = None
if not os.environ.get("ELASTIC_TILINGS_PURE"):
    try:
        from . import _kernel as _compiled  # type: ignore[no-redef]
    except ImportError:  # pragma: no cover - depends on the build
        _compiled = None

BACKEND = "cython" if _compiled is not None else "python"
MAX_VERTICES = 64


def available_backends() -> list[str]:
    return ["cython", "python"] if _compiled is not None else ["python"]


def binomial_table(N: int, n: int) -> np.ndarray:
    """``C(v, j)`` for ``v <= N``, ``j <= n``, as an int64 array."""
    out = np.zeros((N + 1, n + 1), dtype=np.int64)
    for v in range(N + 1):
        out[v, 0] = 1
        for j in range(1, min(v, n) + 1):
            out[v, j] = out[v - 1, j - 1] + (out[v - 1, j] if j <= v - 1 else 0)
    return out


def block_rank(block, binom) -> int:
    """Colex rank of an ascending block."""
    return int(sum(int(binom[v, j + 1]) for j, v in enumerate(block)))


def partition_sum(mask: int, weights: np.ndarray, binom: np.ndarray, n: int,
                  backend: str | None = None) -> float:
    backend = backend or BACKEND
    if backend == "cython":
        if _compiled is None:
            raise RuntimeError("compiled kernel is not available")
        return _compiled.partition_sum(
            mask, np.ascontiguousarray(weights, dtype=np.float64),
            np.ascontiguousarray(binom, dtype=np.int64), n,
        )
    if backend == "python":
        return _kernel_py.partition_sum(mask, list(map(float, weights)), binom.tolist(), n)
    raise ValueError(f"unknown backend {backend!r}")
