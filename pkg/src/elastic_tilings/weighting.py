"""Tile activities: construction, smoothness, scaling and box averaging.

A weighting is stored as a function of the canonical translation class of
its argument (see :func:`~elastic_tilings.lattice.canonical_key`), so
symmetry and translation invariance hold by construction. Values are kept
as natural logs; the normalization sum is done with ``logsumexp``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

from .lattice import (
    Dissection,
    Lattice,
    LatticeError,
    canonical_key,
    difference,
    distances_from_origin,
)
from .numerics import log_sum

KINDS = ("constant", "pair-exponential", "user-table")

Key = tuple[int, ...]


class WeightingError(ValueError):
    pass


@dataclass(frozen=True)
class WeightingFamily:
    """Recipe for a weighting before normalization.

    ``pair-exponential`` uses raw value ``exp(-(1/scale) Σ_{j<k} dist)``.
    ``user-table`` takes ``table``: either a mapping from canonical key to a
    positive raw value (floats or Fractions) or a callable on keys.
    """

    kind: str = "constant"
    scale: float | None = None
    norm: str = "euclidean"
    table: Mapping[Key, float] | Callable[[Key], float] | None = field(
        default=None, compare=False, repr=False
    )

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise WeightingError(f"unknown family kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "pair-exponential" and not (self.scale and self.scale > 0):
            raise WeightingError("pair-exponential family needs scale > 0")
        if self.kind == "user-table" and self.table is None:
            raise WeightingError("user-table family needs a table")


def canonical_keys(lat: Lattice, n: int, diagonal: bool = True) -> list[Key]:
    """Every translation class of n-point multisets (or sets, if not ``diagonal``)."""
    keys = set()
    pool = range(lat.N)
    for rest in itertools.combinations_with_replacement(pool, n - 1):
        t = (0,) + rest
        if not diagonal and len(set(t)) < n:
            continue
        keys.add(canonical_key(lat, t))
    return sorted(keys)


def max_pair_distance(lat: Lattice, verts: Sequence[int], norm: str) -> float:
    row = distances_from_origin(lat, norm)
    best = 0.0
    for a, b in itertools.combinations(verts, 2):
        best = max(best, row[difference(lat, a, b)])
    return best


def _pair_distance_sum(lat: Lattice, verts: Sequence[int], norm: str) -> float:
    row = distances_from_origin(lat, norm)
    return math.fsum(row[difference(lat, a, b)] for a, b in itertools.combinations(verts, 2))


class Weighting:
    """A normalized activity on n-point tiles of ``lat``."""

    def __init__(
        self,
        lat: Lattice,
        n: int,
        log_raw: Callable[[Key], float],
        *,
        family: WeightingFamily | None = None,
        exact_raw: Callable[[Key], Fraction] | None = None,
    ) -> None:
        if n < 1 or lat.N % n:
            raise WeightingError(f"tile size n={n} must divide N={lat.N}")
        self.lat = lat
        self.n = n
        self.family = family or WeightingFamily()
        self.norm = self.family.norm
        self._log_raw = log_raw
        self._memo: dict[Key, float] = {}
        # normalization: sum over the (n-1)-subsets completing vertex 0
        completions = [
            (0,) + rest for rest in itertools.combinations(range(1, lat.N), n - 1)
        ]
        raw = [log_raw(canonical_key(lat, t)) for t in completions]
        if any(math.isnan(r) or r == math.inf for r in raw):
            raise WeightingError("raw weighting values must be finite")
        self.log_norm = log_sum(raw)
        if not math.isfinite(self.log_norm):
            raise WeightingError("normalizing sum is zero or overflowed")
        self._exact_raw = exact_raw
        self._exact_norm: Fraction | None = None
        if exact_raw is not None:
            self._exact_norm = sum(
                (exact_raw(canonical_key(lat, t)) for t in completions), Fraction(0)
            )

    @property
    def N(self) -> int:
        return self.lat.N

    def key(self, verts: Sequence[int]) -> Key:
        if len(verts) != self.n:
            raise WeightingError(f"expected {self.n} vertices, got {len(verts)}")
        return canonical_key(self.lat, verts)

    def log_value_of_key(self, key: Key) -> float:
        v = self._memo.get(key)
        if v is None:
            v = self._log_raw(key) - self.log_norm
            self._memo[key] = v
        return v

    def log_value(self, verts: Sequence[int]) -> float:
        return self.log_value_of_key(self.key(verts))

    def value(self, verts: Sequence[int]) -> float:
        return math.exp(self.log_value(verts))

    __call__ = value

    def exact_value(self, verts: Sequence[int]) -> Fraction:
        """Rational value; exact when the family carries rational raw values."""
        if self._exact_raw is None:
            return Fraction(self.value(verts))
        key = self.key(verts)
        return self._exact_raw(key) / self._exact_norm

    @property
    def is_exact(self) -> bool:
        return self._exact_raw is not None

    def __repr__(self) -> str:
        return f"Weighting(d={self.lat.d}, L={self.lat.L}, n={self.n}, family={self.family!r})"


def build_weighting(fam: WeightingFamily, lat: Lattice, n: int) -> Weighting:
    """Build and normalize a weighting from a family recipe."""
    if fam.kind == "constant":
        return Weighting(lat, n, lambda key: 0.0, family=fam, exact_raw=lambda key: Fraction(1))
    if fam.kind == "pair-exponential":
        scale = float(fam.scale)
        return Weighting(
            lat, n, lambda key: -_pair_distance_sum(lat, key, fam.norm) / scale, family=fam
        )
    table = fam.table
    lookup = table if callable(table) else table.__getitem__

    def log_raw(key: Key) -> float:
        try:
            v = lookup(key)
        except KeyError:
            raise WeightingError(f"user table has no entry for tile class {key}") from None
        if not v > 0:
            raise WeightingError(f"raw value {v} for {key} is not positive")
        return math.log(v)

    exact = None
    if not callable(table) and table and all(isinstance(v, Fraction) for v in table.values()):
        exact = lambda key: table[key]  # noqa: E731
    return Weighting(lat, n, log_raw, family=fam, exact_raw=exact)


def normalization_residual(f: Weighting, base: int = 0) -> float:
    """``|Σ f(base, i2..in) / (n-1)! - 1|`` over distinct completions."""
    others = [v for v in range(f.N) if v != base]
    total = math.fsum(
        f.value((base,) + rest) for rest in itertools.combinations(others, f.n - 1)
    )
    return abs(total - 1.0)


def smoothness(f: Weighting) -> float:
    """Smallest s with ``|f(i+u) - f(i)| <= s f(i)`` for single-vertex unit moves.

    Diagonal tuples are included.
    """
    lat = f.lat
    units = lat.unit_vectors()
    worst = 0.0
    for key in canonical_keys(lat, f.n, diagonal=True):
        here = f.log_value_of_key(key)
        for pos in range(f.n):
            for u in units:
                moved = list(key)
                moved[pos] = lat.translate(key[pos], u)
                there = f.log_value(moved)
                worst = max(worst, abs(math.expm1(there - here)))
    return worst


def decay_radius(f: Weighting) -> float:
    """Smallest R with ``f <= exp(-maxdist / R)``; ``inf`` if none exists."""
    worst = 0.0
    for key in canonical_keys(f.lat, f.n, diagonal=True):
        dist = max_pair_distance(f.lat, key, f.norm)
        if dist == 0:
            continue
        lv = f.log_value_of_key(key)
        if lv >= 0:
            return math.inf
        worst = max(worst, dist / -lv)
    return worst


@dataclass(frozen=True)
class ScaledWeighting:
    weighting: Weighting
    defect: float
    """Normalization sum of ``λ^d f(λx)`` minus one, before renormalizing."""


def scale_weighting(f: Weighting, lam: int) -> ScaledWeighting:
    """Rescale ``x -> λ^d f(λx)`` onto the lattice of edge ``L/λ`` and renormalize.

    ``λ`` must be a positive integer dividing ``L`` so that ``λx`` lands on
    the original lattice for every vertex of the coarser one.
    """
    if int(lam) != lam or lam < 1 or f.lat.L % int(lam):
        raise LatticeError(f"scale factor {lam} must be a positive integer dividing L={f.lat.L}")
    lam = int(lam)
    lat = f.lat
    small = Lattice(lat.d, lat.L // lam)
    if small.N % f.n:
        raise WeightingError(f"tile size {f.n} does not divide rescaled volume {small.N}")
    shift = lat.d * math.log(lam)

    def log_raw(key: Key) -> float:
        big = [lat.vertex([lam * c for c in small.coords(v)]) for v in key]
        return shift + f.log_value(big)

    fam = WeightingFamily("user-table", norm=f.norm, table=lambda key: math.exp(log_raw(key)))
    g = Weighting(small, f.n, log_raw, family=fam)
    return ScaledWeighting(g, math.expm1(g.log_norm))


def tilt_weighting(f: Weighting, eps: float, rng) -> Weighting:
    """Random pointwise tilt of ``f`` with ``|g - f| <= eps f`` after renormalizing.

    Each tile class gets an independent factor ``e^u``, ``u`` uniform on
    ``[-a, a]`` with ``a = ln(1+eps)/2``; the renormalizing constant lies in
    ``[e^-a, e^a]``, so ``g/f`` stays inside ``[1/(1+eps), 1+eps]``.
    """
    if eps <= 0:
        raise WeightingError("tilt size must be positive")
    a = 0.5 * math.log1p(eps)
    keys = canonical_keys(f.lat, f.n, diagonal=True)
    shifts = rng.uniform(-a, a, size=len(keys))
    logs = {k: f.log_value_of_key(k) + float(u) for k, u in zip(keys, shifts)}
    fam = WeightingFamily("user-table", norm=f.norm, table={k: math.exp(v) for k, v in logs.items()})
    return Weighting(f.lat, f.n, logs.__getitem__, family=fam)


def pointwise_deviation(f: Weighting, g: Weighting) -> float:
    """``max |g/f - 1|`` over tile classes with distinct vertices."""
    if f.lat != g.lat or f.n != g.n:
        raise WeightingError("weightings live on different lattices or tile sizes")
    return max(
        abs(math.expm1(g.log_value_of_key(k) - f.log_value_of_key(k)))
        for k in canonical_keys(f.lat, f.n, diagonal=False)
    )


def placement_mass(f: Weighting, exact: bool = False) -> float | Fraction:
    """Sum of ``f`` over all n-subsets of the lattice (equals N/n)."""
    subsets = itertools.combinations(range(f.N), f.n)
    if exact:
        return sum((f.exact_value(s) for s in subsets), Fraction(0))
    return math.fsum(f.value(s) for s in subsets)


class CoarseWeighting:
    """Box average of a weighting over a dissection.

    The value of a tuple depends only on the multiset of boxes holding its
    vertices; each table entry is the mean of ``f`` over the distinct-vertex
    tuples of that box pattern. Patterns with no distinct-vertex realization
    (more vertices in one box than it holds) are absent.
    """

    def __init__(self, base: Weighting, dis: Dissection) -> None:
        if dis.parent != base.lat:
            raise LatticeError("dissection is over a different lattice")
        self.base = base
        self.dis = dis
        self.n = base.n
        self.lat = base.lat
        self.table: dict[Key, float] = {}
        self.counts: dict[Key, int] = {}
        members = dis.members
        for pattern in canonical_keys(dis.coarse, self.n, diagonal=True):
            total = []
            for tup in itertools.product(*(members[b] for b in pattern)):
                if len(set(tup)) == self.n:
                    total.append(base.log_value(tup))
            if total:
                self.table[pattern] = log_sum(total) - math.log(len(total))
                self.counts[pattern] = len(total)

    @property
    def N(self) -> int:
        return self.lat.N

    def pattern(self, verts: Sequence[int]) -> Key:
        return canonical_key(self.dis.coarse, [self.dis.box_of(v) for v in verts])

    def log_value_of_pattern(self, pattern: Key) -> float:
        try:
            return self.table[pattern]
        except KeyError:
            raise WeightingError(f"box pattern {pattern} has no distinct-vertex tuples") from None

    def log_value(self, verts: Sequence[int]) -> float:
        return self.log_value_of_pattern(self.pattern(verts))

    def value(self, verts: Sequence[int]) -> float:
        return math.exp(self.log_value(verts))

    __call__ = value

    def exact_value(self, verts: Sequence[int]) -> Fraction:
        return Fraction(self.value(verts))


def coarse_average(f: Weighting, dis: Dissection) -> CoarseWeighting:
    return CoarseWeighting(f, dis)


@dataclass(frozen=True)
class AveragingReport:
    alpha: float
    bound: float
    worst_ratio: float
    holds: bool
    vacuous: bool


def lemma3_check(f: Weighting, dis: Dissection, fbar: CoarseWeighting | None = None) -> AveragingReport:
    """Compare ``|f - f̄|/f`` on every tile against ``α/(1-α)``, ``α = ℓ̄ d n sm(f)``."""
    fbar = fbar or coarse_average(f, dis)
    alpha = dis.box_edge * f.lat.d * f.n * smoothness(f)
    worst = 0.0
    for s in itertools.combinations(range(f.N), f.n):
        worst = max(worst, abs(math.expm1(fbar.log_value(s) - f.log_value(s))))
    if alpha >= 1:
        return AveragingReport(alpha, math.inf, worst, True, True)
    bound = alpha / (1 - alpha)
    # tiny slack for the float average
    return AveragingReport(alpha, bound, worst, worst <= bound * (1 + 1e-12) + 1e-15, False)
