"""Periodic cubic lattices and their dissections into sub-cubes.

Vertex ids are row-major over coordinates (last axis varies fastest).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

NORMS = ("euclidean", "linf")


class LatticeError(ValueError):
    """Invalid lattice geometry or vertex id."""


@dataclass(frozen=True)
class Lattice:
    """A d-dimensional periodic cube of edge ``L``."""

    d: int
    L: int

    def __post_init__(self) -> None:
        if self.d < 1 or self.L < 1:
            raise LatticeError(f"need d >= 1 and L >= 1, got d={self.d}, L={self.L}")

    @property
    def N(self) -> int:
        return self.L**self.d

    def __len__(self) -> int:
        return self.N

    def check(self, v: int) -> int:
        if not 0 <= v < self.N:
            raise LatticeError(f"vertex id {v} outside [0, {self.N})")
        return v

    @cached_property
    def _coords(self) -> tuple[tuple[int, ...], ...]:
        return tuple(self._decode(v) for v in range(self.N))

    def _decode(self, v: int) -> tuple[int, ...]:
        out = []
        for _ in range(self.d):
            v, r = divmod(v, self.L)
            out.append(r)
        return tuple(reversed(out))

    def coords(self, v: int) -> tuple[int, ...]:
        return self._coords[self.check(v)]

    def vertex(self, coords: Sequence[int]) -> int:
        if len(coords) != self.d:
            raise LatticeError(f"expected {self.d} coordinates, got {len(coords)}")
        v = 0
        for c in coords:
            v = v * self.L + (c % self.L)
        return v

    def translate(self, v: int, shift: Sequence[int]) -> int:
        return self.vertex([c + s for c, s in zip(self.coords(v), shift)])

    def unit_vectors(self) -> list[tuple[int, ...]]:
        """The 2d unit lattice vectors."""
        units = []
        for axis in range(self.d):
            for sign in (1, -1):
                u = [0] * self.d
                u[axis] = sign
                units.append(tuple(u))
        return units

    def wrap(self, delta: int) -> int:
        """Minimal image of a 1-d offset, in (-L/2, L/2]."""
        delta %= self.L
        if 2 * delta > self.L:
            delta -= self.L
        return delta


def torus_displacement(a: int, b: int, lat: Lattice) -> tuple[int, ...]:
    """Minimal-image coordinate difference ``b - a``."""
    ca, cb = lat.coords(a), lat.coords(b)
    return tuple(lat.wrap(y - x) for x, y in zip(ca, cb))


def norm_of(disp: Sequence[float], norm: str = "euclidean") -> float:
    if norm == "euclidean":
        return math.sqrt(sum(x * x for x in disp))
    if norm == "linf":
        return float(max((abs(x) for x in disp), default=0))
    raise LatticeError(f"unknown norm {norm!r}; expected one of {NORMS}")


def min_image_distance(a: int, b: int, lat: Lattice, norm: str = "euclidean") -> float:
    return norm_of(torus_displacement(a, b, lat), norm)


@dataclass(frozen=True)
class Dissection:
    """Partition of a lattice into ``N̄`` cubic boxes of edge ``box_edge``.

    Boxes are themselves indexed row-major on the coarse torus of edge
    ``L̄ = L / box_edge``.
    """

    parent: Lattice
    box_edge: int
    coarse: Lattice = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if self.box_edge < 1 or self.parent.L % self.box_edge:
            raise LatticeError(
                f"box edge {self.box_edge} must divide L={self.parent.L}"
            )
        object.__setattr__(self, "coarse", Lattice(self.parent.d, self.parent.L // self.box_edge))

    @property
    def n_box(self) -> int:
        """Vertices per box, ``n̄``."""
        return self.box_edge**self.parent.d

    @property
    def num_boxes(self) -> int:
        """``N̄ = N / n̄``."""
        return self.coarse.N

    @property
    def boxes_per_side(self) -> int:
        return self.coarse.L

    @cached_property
    def _box_of(self) -> tuple[int, ...]:
        lat, e = self.parent, self.box_edge
        return tuple(self.coarse.vertex([c // e for c in lat.coords(v)]) for v in range(lat.N))

    def box_of(self, v: int) -> int:
        return self._box_of[self.parent.check(v)]

    @cached_property
    def members(self) -> tuple[tuple[int, ...], ...]:
        """Vertex ids of each box, ascending."""
        out: list[list[int]] = [[] for _ in range(self.num_boxes)]
        for v, b in enumerate(self._box_of):
            out[b].append(v)
        return tuple(tuple(m) for m in out)

    def box_center_distance(self, b1: int, b2: int, norm: str = "euclidean") -> float:
        """Distance between box centres, in lattice units."""
        disp = torus_displacement(b1, b2, self.coarse)
        return norm_of([x * self.box_edge for x in disp], norm)


def box_of(v: int, dis: Dissection) -> int:
    return dis.box_of(v)


_row_cache: dict[tuple[Lattice, str], tuple[float, ...]] = {}


def distances_from_origin(lat: Lattice, norm: str = "euclidean") -> tuple[float, ...]:
    """Minimal-image distance from vertex 0 to every vertex (index with ``difference``)."""
    key = (lat, norm)
    row = _row_cache.get(key)
    if row is None:
        row = tuple(norm_of([lat.wrap(c) for c in lat.coords(v)], norm) for v in range(lat.N))
        _row_cache[key] = row
    return row


def difference(lat: Lattice, a: int, b: int) -> int:
    """Vertex id of the coordinate difference ``b - a`` (mod L)."""
    return lat.vertex([y - x for x, y in zip(lat.coords(a), lat.coords(b))])


def canonical_key(lat: Lattice, verts) -> tuple[int, ...]:
    """Canonical form of a vertex multiset up to translation.

    Each member is tried as the origin; the sorted ids of the shifted
    multiset are compared and the smallest wins.
    """
    coords = [lat.coords(v) for v in verts]
    best: tuple[int, ...] | None = None
    for base in set(coords):
        key = tuple(sorted(lat.vertex([x - y for x, y in zip(c, base)]) for c in coords))
        if best is None or key < best:
            best = key
    assert best is not None
    return best
