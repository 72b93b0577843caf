"""Exact partition functions by enumeration, and constant-weight closed forms."""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Protocol, Sequence

import numpy as np

from . import kernel
from .numerics import log_factorial
from .weighting import Weighting, pointwise_deviation

DEFAULT_BUDGET = 10**8
RATIONAL_MAX_N = 12


class BlockWeight(Protocol):
    N: int
    n: int

    def log_value(self, verts: Sequence[int]) -> float: ...

    def exact_value(self, verts: Sequence[int]) -> Fraction: ...


class BudgetExceeded(RuntimeError):
    def __init__(self, count: int, budget: int) -> None:
        super().__init__(f"{count} tilings exceed the enumeration budget of {budget}")
        self.count = count
        self.budget = budget


class DivisibilityError(ValueError):
    pass


@dataclass(frozen=True)
class PartitionResult:
    log_Z: float
    N: int
    n: int
    mode: str = "float"
    Z_exact: Fraction | None = None

    @property
    def pressure(self) -> float:
        return self.log_Z / self.N

    @property
    def Z(self) -> float:
        return math.exp(self.log_Z)

    @property
    def root(self) -> float:
        """``Z^{1/N} = e^p``."""
        return math.exp(self.pressure)


def _check(N: int, n: int) -> None:
    if n < 1 or N < 1 or N % n:
        raise DivisibilityError(f"tile size n={n} must divide N={N}")


def tiling_count(N: int, n: int) -> int:
    """Number of partitions of N labelled vertices into blocks of size n."""
    _check(N, n)
    m = N // n
    return math.factorial(N) // (math.factorial(m) * math.factorial(n) ** m)


def _block_logs(f: BlockWeight, binom: np.ndarray) -> np.ndarray:
    N, n = f.N, f.n
    out = np.empty(int(binom[N, n]), dtype=np.float64)
    for block in itertools.combinations(range(N), n):
        out[kernel.block_rank(block, binom)] = f.log_value(block)
    return out


def _rational_sum(mask: int, f: BlockWeight, n: int) -> Fraction:
    if mask == 0:
        return Fraction(1)
    verts = [v for v in range(mask.bit_length()) if mask >> v & 1]
    first = verts[0]
    total = Fraction(0)
    for combo in itertools.combinations(verts[1:], n - 1):
        block = (first,) + combo
        bits = sum(1 << v for v in block)
        total += f.exact_value(block) * _rational_sum(mask & ~bits, f, n)
    return total


def exact_partition(
    f: BlockWeight,
    mode: str = "float",
    budget: int = DEFAULT_BUDGET,
    backend: str | None = None,
    workers: int = 1,
) -> PartitionResult:
    """Sum over all tilings of the product of tile activities.

    Each partition is enumerated once: the smallest uncovered vertex is
    completed by every (n-1)-subset of the remaining vertices. With
    ``workers > 1`` the branches of vertex 0 run on a thread pool (the
    compiled kernel releases the GIL); branch results are reduced in branch
    order, so the float result does not depend on ``workers``.
    """
    N, n = f.N, f.n
    _check(N, n)
    count = tiling_count(N, n)
    if count > budget:
        raise BudgetExceeded(count, budget)
    if N > kernel.MAX_VERTICES:
        raise BudgetExceeded(count, budget)
    full = (1 << N) - 1
    if mode == "rational":
        if N > RATIONAL_MAX_N:
            raise ValueError(f"rational mode is limited to N <= {RATIONAL_MAX_N}")
        Z = _rational_sum(full, f, n)
        return PartitionResult(math.log(Z), N, n, "rational", Z)
    if mode != "float":
        raise ValueError(f"unknown mode {mode!r}")

    binom = kernel.binomial_table(N, n)
    logs = _block_logs(f, binom)
    shift = float(logs.max())
    w = np.exp(logs - shift)
    if workers <= 1:
        S = kernel.partition_sum(full, w, binom, n, backend)
    else:
        branches = []
        for combo in itertools.combinations(range(1, N), n - 1):
            block = (0,) + combo
            bits = sum(1 << v for v in block)
            branches.append((kernel.block_rank(block, binom), full & ~bits))
        with ThreadPoolExecutor(max_workers=workers) as pool:
            subs = list(pool.map(lambda b: kernel.partition_sum(b[1], w, binom, n, backend), branches))
        S = 0.0
        for (rank, _), sub in zip(branches, subs):
            S += w[rank] * sub
    return PartitionResult(math.log(S) + (N // n) * shift, N, n, "float")


def log_z0_hat(N: int, n: int) -> float:
    _check(N, n)
    m = N // n
    per_tile = log_factorial(n - 1) + log_factorial(N - n) - log_factorial(N - 1)
    count = log_factorial(N) - log_factorial(m) - m * log_factorial(n)
    return m * per_tile + count


def z0_hat(N: int, n: int) -> PartitionResult:
    """Partition function of the constant weighting; depends only on N and n."""
    exact = None
    if N <= 2000:
        m = N // n
        f = Fraction(math.factorial(n - 1) * math.factorial(N - n), math.factorial(N - 1))
        exact = f**m * tiling_count(N, n)
    return PartitionResult(log_z0_hat(N, n), N, n, "closed-form", exact)


@dataclass(frozen=True)
class Z0Limit:
    pressure: float
    Z0: float


def z0_limit(n: int) -> Z0Limit:
    """Infinite-volume constant-weight pressure ``(1-n)/n`` and ``Z⁰ = e^{(1-n)/n}``."""
    if n < 1:
        raise ValueError("n must be positive")
    p = (1 - n) / n
    return Z0Limit(p, math.exp(p))


def log_universal_bound(N: int, n: int) -> float:
    """``ln M`` with ``M = [(N/n)!^{-1} (N/n)^{N/n}]^{1/N}``."""
    _check(N, n)
    m = N // n
    return (-log_factorial(m) + m * (math.log(N) - math.log(n))) / N


def universal_bound(N: int, n: int) -> float:
    """Upper bound on ``Z^{1/N}`` valid for every normalized weighting."""
    return math.exp(log_universal_bound(N, n))


@dataclass(frozen=True)
class GapBound:
    gap: float
    bound: float
    deviation: float
    applicable: bool

    @property
    def holds(self) -> bool:
        return self.applicable and self.gap <= self.bound


def lemma2_gap_bound(f1: Weighting, f2: Weighting, eps: float, **kw) -> GapBound:
    """``|Z(f₁)^{1/N} - Z(f₂)^{1/N}|`` against ``ε M`` when ``|f₁ - f₂| <= ε f₁``.

    ``M`` is :func:`universal_bound`. Not applicable (``holds`` false) when
    the pointwise premise fails.
    """
    dev = pointwise_deviation(f1, f2)
    bound = eps * universal_bound(f1.N, f1.n)
    if dev > eps:
        return GapBound(math.nan, bound, dev, False)
    r1 = exact_partition(f1, **kw).root
    r2 = exact_partition(f2, **kw).root
    return GapBound(abs(r1 - r2), bound, dev, True)
