"""Log-domain arithmetic, log-factorials, Stirling bounds and the root estimate."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import mpmath
import numpy as np
from scipy.special import logsumexp

__all__ = [
    "LogNum",
    "log_add",
    "log_sum",
    "log_factorial",
    "log_binomial",
    "stirling_sandwich",
    "StirlingBounds",
    "root_estimate_check",
    "RootEstimate",
]

NEG_INF = -math.inf

# exact cumulative table up to this size; lgamma beyond it
_TABLE_LIMIT = 1 << 20
_table: list[float] = [0.0, 0.0]
_acc = [0.0, 0.0]  # running (sum, compensation)


@dataclass(frozen=True, order=True)
class LogNum:
    """A positive real stored by its natural log (``-inf`` is zero)."""

    log_value: float

    @classmethod
    def of(cls, x: float) -> "LogNum":
        if x < 0:
            raise ValueError("LogNum holds nonnegative values only")
        return cls(math.log(x) if x > 0 else NEG_INF)

    def __mul__(self, other: "LogNum") -> "LogNum":
        return LogNum(self.log_value + other.log_value)

    def __truediv__(self, other: "LogNum") -> "LogNum":
        if other.log_value == NEG_INF:
            raise ZeroDivisionError("division by LogNum zero")
        return LogNum(self.log_value - other.log_value)

    def __add__(self, other: "LogNum") -> "LogNum":
        return LogNum(log_add(self.log_value, other.log_value))

    def __pow__(self, p: float) -> "LogNum":
        return LogNum(self.log_value * p)

    def root(self, k: float) -> "LogNum":
        return LogNum(self.log_value / k)

    def __float__(self) -> float:
        return math.exp(self.log_value)


def log_add(a: float, b: float) -> float:
    return float(np.logaddexp(a, b))


def log_sum(logs: Iterable[float]) -> float:
    arr = np.fromiter(logs, dtype=float)
    if arr.size == 0 or not np.isfinite(arr.max()):
        return float(arr.max()) if arr.size else NEG_INF
    return float(logsumexp(arr))


def _extend_table(r: int) -> None:
    # Neumaier-compensated running sum of ln k
    total, comp = _acc
    for k in range(len(_table), r + 1):
        t = math.log(k)
        s = total + t
        if abs(total) >= abs(t):
            comp += (total - s) + t
        else:
            comp += (t - s) + total
        total = s
        _table.append(total + comp)
    _acc[:] = [total, comp]


def log_factorial(r: int) -> float:
    """``ln r!``, exact summation up to 2**20 and ``lgamma`` above."""
    if r < 0:
        raise ValueError(f"log_factorial of negative {r}")
    r = int(r)
    if r >= _TABLE_LIMIT:
        return math.lgamma(r + 1)
    if r >= len(_table):
        _extend_table(r)
    return _table[r]


def log_binomial(a: int, b: int) -> float:
    if b < 0 or b > a:
        return NEG_INF
    return log_factorial(a) - log_factorial(b) - log_factorial(a - b)


@dataclass(frozen=True)
class StirlingBounds:
    """Feller's sandwich ``sqrt(2 pi r) < r!/(r/e)^r < sqrt(2 pi r) e^{1/12r}``.

    ``lower``/``value``/``upper`` are natural logs. The two gaps are computed
    at 50 significant digits, so their signs are reliable even where the
    logs themselves agree to the last float bit.
    """

    r: int
    lower: float
    value: float
    upper: float
    gap_below: float
    gap_above: float

    @property
    def strict(self) -> bool:
        return self.gap_below > 0 and self.gap_above > 0


def stirling_sandwich(r: int) -> StirlingBounds:
    if r < 1:
        raise ValueError("Stirling sandwich needs r >= 1")
    with mpmath.workdps(50):
        rr = mpmath.mpf(r)
        value = mpmath.loggamma(rr + 1) - rr * mpmath.log(rr) + rr
        lower = mpmath.log(2 * mpmath.pi * rr) / 2
        upper = lower + 1 / (12 * rr)
        return StirlingBounds(
            r=r,
            lower=float(lower),
            value=float(value),
            upper=float(upper),
            gap_below=float(value - lower),
            gap_above=float(upper - value),
        )


@dataclass(frozen=True)
class RootEstimate:
    A: float
    perturbed: float
    lower: float
    upper: float
    delta_max: float
    delta_min: float
    holds: bool


def root_estimate_check(a, delta, rtol: float = 1e-12) -> RootEstimate:
    """Check ``(1-|min δ|)A <= (Σ_i Π_j a_ij(1+δ_ij))^{1/N} <= (1+|max δ|)A``.

    ``a`` and ``delta`` are (rows, N) arrays; the root is over the column
    count N. Products are taken in log space.
    """
    a = np.asarray(a, dtype=float)
    delta = np.asarray(delta, dtype=float)
    if a.ndim != 2 or a.shape != delta.shape:
        raise ValueError(f"shape mismatch: a{a.shape} vs delta{delta.shape}")
    if (a < 0).any():
        raise ValueError("entries of a must be nonnegative")
    if (np.abs(delta) > 1).any():
        raise ValueError("perturbations must satisfy |delta| <= 1")
    N = a.shape[1]
    with np.errstate(divide="ignore"):
        log_rows = np.log(a).sum(axis=1)
        log_rows_p = np.log(a * (1.0 + delta)).sum(axis=1)
    A = math.exp(log_sum(log_rows) / N)
    perturbed = math.exp(log_sum(log_rows_p) / N)
    dmax, dmin = float(delta.max()), float(delta.min())
    lower = (1.0 - abs(dmin)) * A
    upper = (1.0 + abs(dmax)) * A
    slack = rtol * max(A, perturbed)
    holds = lower - slack <= perturbed <= upper + slack
    return RootEstimate(A, perturbed, lower, upper, dmax, dmin, holds)
