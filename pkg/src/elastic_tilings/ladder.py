"""Approximate partition functions Z⁺ ≥ Z′ ≥ Z⁻ built from a box-averaged weighting.

All three come from one proto-sum over ordered sequences of N/n vertex sets
(sets may overlap each other), weighted by ``Π f̄(S_i)``, divided by
``(N/n)!`` and multiplied by ``(n̄!/n̄^n̄)^N̄``:

* Z⁺ keeps every term and has a closed form independent of f̄;
* Z′ keeps terms whose per-box vertex occupancy is exactly n̄;
* Z⁻ is a structured sub-sum of Z′, bounded below by F₁···F₅.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .exact import BudgetExceeded, exact_partition, log_z0_hat, tiling_count
from .lattice import Dissection, LatticeError, canonical_key
from .numerics import log_binomial, log_factorial
from .weighting import CoarseWeighting, Weighting, coarse_average

DEFAULT_PRIME_STATES = 10**6
ORDER_TOL = 1e-12


class LadderError(ValueError):
    pass


def log_z_plus_closed(N: int, n: int, n_box: int) -> float:
    """``ln Z⁺ = -ln(N/n)! + (N/n) ln N + N̄ (ln n̄! - n̄ ln n̄) - (N/n) ln n``."""
    if N % n or N % n_box:
        raise LadderError(f"need n={n} and n̄={n_box} to divide N={N}")
    m = N // n
    boxes = N // n_box
    return (
        -log_factorial(m)
        + m * math.log(N)
        + boxes * (log_factorial(n_box) - n_box * math.log(n_box))
        - m * math.log(n)
    )


def z_plus(dis: Dissection, n: int) -> float:
    """``ln Z⁺`` for a dissection; the value does not depend on the weighting."""
    return log_z_plus_closed(dis.parent.N, n, dis.n_box)


def occupancy_vector(sets: Iterable[Sequence[int]], dis: Dissection) -> list[int]:
    """Per-box count of set vertices, with multiplicity across sets."""
    occ = [0] * dis.num_boxes
    for s in sets:
        for v in s:
            occ[dis.box_of(v)] += 1
    return occ


def _set_profiles(fbar: CoarseWeighting) -> list[tuple[tuple[int, ...], float]]:
    """(occupancy profile, ln Σ f̄) for each box multiset a single set can occupy."""
    dis, n = fbar.dis, fbar.n
    nb = dis.n_box
    out = []
    for boxes in itertools.combinations_with_replacement(range(dis.num_boxes), n):
        prof = [0] * dis.num_boxes
        for b in boxes:
            prof[b] += 1
        if max(prof) > nb:
            continue
        pattern = canonical_key(dis.coarse, boxes)
        lw = fbar.log_value_of_pattern(pattern) + sum(
            log_binomial(nb, r) for r in prof if r
        )
        out.append((tuple(prof), lw))
    return out


def z_prime(fbar: CoarseWeighting, max_states: int = DEFAULT_PRIME_STATES) -> float:
    """``ln Z′`` by convolving per-set occupancy generating functions.

    A set's f̄ value depends only on its occupancy profile, so the ordered
    sum over N/n sets with every box filled exactly n̄ times is the
    ``(n̄, …, n̄)`` coefficient of ``G(x)^{N/n}``, where G sums
    ``f̄ · Π C(n̄, r_j)`` over profiles.
    """
    dis, n = fbar.dis, fbar.n
    nb, boxes, N = dis.n_box, dis.num_boxes, dis.parent.N
    states = (nb + 1) ** boxes
    if states > max_states:
        raise BudgetExceeded(states, max_states)
    m = N // n
    profiles = _set_profiles(fbar)
    shift = max(lw for _, lw in profiles)
    terms = [(prof, math.exp(lw - shift)) for prof, lw in profiles]
    cur = np.zeros((nb + 1,) * boxes)
    cur[(0,) * boxes] = 1.0
    log_scale = 0.0
    for _ in range(m):
        new = np.zeros_like(cur)
        for prof, w in terms:
            dst = tuple(slice(r, nb + 1) for r in prof)
            src = tuple(slice(0, nb + 1 - r) for r in prof)
            new[dst] += w * cur[src]
        top = new.max()
        if top == 0:
            return -math.inf
        new /= top
        log_scale += math.log(top) + shift
        cur = new
    coef = cur[(nb,) * boxes]
    if coef == 0:
        return -math.inf
    return (
        math.log(coef) + log_scale - log_factorial(m)
        + boxes * (log_factorial(nb) - nb * math.log(nb))
    )


@dataclass(frozen=True, order=True)
class Supertype:
    """Translation class of a pointed box sequence.

    Stored with the pointed box at the coarse origin; ``rest`` is the sorted
    tuple of the other n-1 box ids (repeats allowed).
    """

    rest: tuple[int, ...]

    @property
    def boxes(self) -> tuple[int, ...]:
        return (0,) + self.rest


def _rest_radius(dis: Dissection, rest: Sequence[int], norm: str) -> float:
    return max((dis.box_center_distance(0, b, norm) for b in rest), default=0.0)


def enumerate_supertypes(
    dis: Dissection, n: int, cutoff_radius: float = math.inf, norm: str = "euclidean"
) -> list[Supertype]:
    """Supertypes whose rest boxes all lie within ``cutoff_radius`` of the pointed box.

    Distances are between box centres in lattice units, minimal image.
    """
    if cutoff_radius < 0:
        raise LadderError("cutoff radius must be nonnegative")
    out = []
    for rest in itertools.combinations_with_replacement(range(dis.num_boxes), n - 1):
        if _rest_radius(dis, rest, norm) <= cutoff_radius:
            out.append(Supertype(tuple(rest)))
    return out


def _cover_count_log(dis: Dissection, t: Supertype) -> float:
    nb = dis.n_box
    mult: dict[int, int] = {}
    for b in t.rest:
        mult[b] = mult.get(b, 0) + 1
    total = 0.0
    for b, k in mult.items():
        total += log_binomial(nb - 1 if b == 0 else nb, k)
    return total


def supertype_mass(
    fbar: CoarseWeighting, t: Supertype, point: int | None = None, method: str = "closed"
) -> float:
    """Sum of f̄ over pointed sets at a fixed vertex of the pointed box covered by ``t``.

    ``closed`` multiplies the box-pattern value by the number of covered
    sets; ``direct`` sums over the sets themselves, pointed at ``point``
    (default: first vertex of the pointed box).
    """
    dis = fbar.dis
    if method == "closed":
        lc = _cover_count_log(dis, t)
        if lc == -math.inf:
            return 0.0
        return math.exp(fbar.log_value_of_pattern(canonical_key(dis.coarse, t.boxes)) + lc)
    if method != "direct":
        raise ValueError(f"unknown method {method!r}")
    members = dis.members
    z = members[0][0] if point is None else point
    if dis.box_of(z) != 0:
        raise LadderError(f"point {z} is not in the pointed box")
    mult: dict[int, int] = {}
    for b in t.rest:
        mult[b] = mult.get(b, 0) + 1
    choices = [
        list(itertools.combinations([v for v in members[b] if v != z], k))
        for b, k in sorted(mult.items())
    ]
    terms = []
    for pick in itertools.product(*choices):
        verts = (z,) + tuple(v for grp in pick for v in grp)
        terms.append(fbar.value(verts))
    return math.fsum(terms)


@dataclass
class MassSpectrum:
    """Supertype masses sorted by decreasing ``a_k`` (ties by supertype)."""

    entries: list[tuple[Supertype, float]]
    eps: float
    M_bar: int = 0
    M: int = 0
    complete: bool = True

    @property
    def masses(self) -> list[float]:
        return [a for _, a in self.entries]

    @property
    def total(self) -> float:
        return math.fsum(self.masses)

    def kept_mass(self, k: int | None = None) -> float:
        return math.fsum(self.masses[: self.M if k is None else k])


def mass_spectrum(
    fbar: CoarseWeighting, eps: float, cutoff_radius: float = math.inf
) -> MassSpectrum:
    """Masses of all supertypes within the cutoff, with the truncation counts.

    ``M_bar`` is the shortest prefix with mass above ``1 - ε/20``; ``M``
    keeps the entries of that prefix exceeding ``ε/(20 M_bar)``.
    """
    if eps <= 0:
        raise LadderError("eps must be positive")
    types = enumerate_supertypes(fbar.dis, fbar.n, cutoff_radius, fbar.base.norm)
    entries = [(t, supertype_mass(fbar, t)) for t in types]
    entries.sort(key=lambda e: (-e[1], e[0]))
    spectrum = MassSpectrum(entries, eps, complete=math.isinf(cutoff_radius))
    spectrum.M_bar, spectrum.M = truncation_counts(spectrum.masses, eps)
    return spectrum


def truncation_counts(masses: Sequence[float], eps: float) -> tuple[int, int]:
    running = 0.0
    M_bar = len(masses)
    for k, a in enumerate(masses, 1):
        running += a
        if running > 1 - eps / 20:
            M_bar = k
            break
    floor = eps / (20 * M_bar) if M_bar else 0.0
    M = sum(1 for a in masses[:M_bar] if a > floor)
    return M_bar, M


@dataclass
class AlphaAssignment:
    """Grid-rounded supertype proportions, aligned with the spectrum order."""

    alpha: list[Fraction]
    alpha_bar: list[Fraction]
    step: Fraction
    feasible: bool
    """Whether ``n̄ > 200 M̄ n / ε²`` held, guaranteeing the closeness bound."""
    moves: int = 0

    def counts(self) -> list[int]:
        """``α_k n̄/n``, each an integer."""
        return [int(a / self.step) for a in self.alpha]


def choose_alpha(spectrum: MassSpectrum, n_box: int, n: int, eps: float) -> AlphaAssignment:
    """Round ``ᾱ_k = a_k / Σ_{k≤M} a_k`` onto multiples of n/n̄ keeping Σα = 1.

    Pairwise transfer: take the off-grid α nearest its lower grid point and
    the (other) off-grid α nearest its upper grid point, and move both by
    the smaller gap, one down and one up. No α leaves the grid interval it
    started in, so ``|α_k - ᾱ_k| < n/n̄``. Arithmetic is exact.
    """
    if eps <= 0:
        raise LadderError("eps must be positive")
    if not spectrum.entries or spectrum.M == 0:
        raise LadderError("empty spectrum")
    if n_box % n:
        raise LadderError(f"n={n} must divide n̄={n_box}")
    step = Fraction(n, n_box)
    M = spectrum.M
    kept = [Fraction(a) for a in spectrum.masses[:M]]
    denom = sum(kept)
    bar = [a / denom for a in kept] + [Fraction(0)] * (len(spectrum.entries) - M)
    alpha = list(bar)
    moves = 0
    while True:
        off = [k for k, a in enumerate(alpha) if a % step]
        if not off:
            break
        if len(off) == 1:  # pragma: no cover - excluded by exact Σα = 1
            raise LadderError("rounding stalled with one off-grid value")
        below = {k: alpha[k] % step for k in off}
        above = {k: step - below[k] for k in off}
        down = min(off, key=lambda k: (below[k], k))
        up = min((k for k in off if k != down), key=lambda k: (above[k], k))
        t = min(below[down], above[up])
        alpha[down] -= t
        alpha[up] += t
        moves += 1
    feasible = n_box > Fraction(200 * spectrum.M_bar * n) / Fraction(eps) ** 2
    return AlphaAssignment(alpha, bar, step, feasible, moves)


@dataclass(frozen=True)
class AlphaContract:
    on_grid: bool
    sums_to_one: bool
    close: bool
    worst_excess: Fraction


def alpha_contract(assign: AlphaAssignment, spectrum: MassSpectrum, eps: float) -> AlphaContract:
    """Check integrality, Σα = 1 and ``|α_k - ᾱ_k| <= (ε/10) a_k`` exactly."""
    e = Fraction(eps)
    on_grid = all(a % assign.step == 0 and a >= 0 for a in assign.alpha)
    total = sum(assign.alpha) == 1
    worst = Fraction(0)
    for k, (a, ab) in enumerate(zip(assign.alpha, assign.alpha_bar)):
        limit = e / 10 * Fraction(spectrum.masses[k]) if k < spectrum.M else Fraction(0)
        worst = max(worst, abs(a - ab) - limit)
    return AlphaContract(on_grid, total, worst <= 0, worst)


@dataclass(frozen=True)
class ZMinusBound:
    log_factors: tuple[float, float, float, float, float]

    @property
    def log_value(self) -> float:
        return math.fsum(self.log_factors)


def z_minus_lower(
    fbar: CoarseWeighting,
    spectrum: MassSpectrum,
    alpha: AlphaAssignment,
    validate: bool = True,
) -> ZMinusBound:
    """Lower bound ``F₁F₂F₃F₄F₅ <= Z⁻`` in log form."""
    dis, n = fbar.dis, fbar.n
    N, nb = dis.parent.N, dis.n_box
    if nb % n:
        raise LadderError(f"n={n} must divide n̄={nb}")
    per_box = nb // n
    boxes = N // nb
    m = N // n
    counts = []
    for a in alpha.alpha:
        c = a * per_box
        if c.denominator != 1:
            raise LadderError(f"α·n̄/n = {c} is not an integer")
        counts.append(int(c))
    if validate and (sum(alpha.alpha) != 1 or min(alpha.alpha) < 0):
        raise LadderError("α must be nonnegative and sum to 1")
    masses = spectrum.masses
    lf1 = -log_factorial(m) + boxes * (log_factorial(nb) - nb * math.log(nb))
    lf2 = -m * math.log(n)
    lf3 = log_factorial(m) - boxes * log_factorial(per_box) + m * math.log(nb)
    lf4 = boxes * (log_factorial(per_box) - math.fsum(log_factorial(c) for c in counts))
    lf5 = boxes * math.fsum(c * math.log(a) for c, a in zip(counts, masses) if c)
    return ZMinusBound((lf1, lf2, lf3, lf4, lf5))


def log_alpha_mass_factor(spectrum: MassSpectrum, alpha: AlphaAssignment, n: int) -> float:
    """``ln Π_k (a_k/α_k)^{α_k/n}`` over entries with α_k > 0."""
    return math.fsum(
        float(a) / n * math.log(m / float(a))
        for a, m in zip(alpha.alpha, spectrum.masses) if a > 0
    )


def stirling_form(fbar: CoarseWeighting, spectrum: MassSpectrum, alpha: AlphaAssignment) -> dict:
    """Split ``ln(F₁···F₅)/N`` into the limit value and its Stirling correction factors."""
    n, nb = fbar.n, fbar.dis.n_box
    per_box = nb // n
    second = (log_factorial(nb) - nb * (math.log(nb) - 1)) / nb
    third = []
    for a in alpha.alpha:
        r = int(a * per_box)
        if r:
            third.append((r * (math.log(r) - 1) - log_factorial(r)) / nb)
    return {
        "limit": (1 - n) / n,
        "box_factorial": second,
        "alpha_factorials": math.fsum(third),
        "alpha_factorial_terms": third,
        "mass_factor": log_alpha_mass_factor(spectrum, alpha, n),
    }


@dataclass
class BoundReport:
    N: int
    n: int
    n_box: int
    eps: float
    log_z_plus: float
    log_z0_hat: float
    log_z_prime: float | None = None
    log_z_minus_lower: float | None = None
    log_factors: tuple[float, ...] | None = None
    log_z_fbar: float | None = None
    log_z_f: float | None = None
    M_bar: int | None = None
    M: int | None = None
    alpha_feasible: bool | None = None
    stirling_slack_ok: bool | None = None
    alpha_factorials_ok: bool | None = None
    mass_factor_ok: bool | None = None
    skipped: dict[str, str] = field(default_factory=dict)

    def root(self, log_value: float | None) -> float | None:
        return None if log_value is None else math.exp(log_value / self.N)

    @property
    def z0_limit_root(self) -> float:
        return math.exp((1 - self.n) / self.n)

    @property
    def ordering_holds(self) -> bool:
        chain = [v for v in (self.log_z_plus, self.log_z_prime, self.log_z_minus_lower) if v is not None]
        return all(a >= b - ORDER_TOL * max(1.0, abs(a)) for a, b in zip(chain, chain[1:]))

    @property
    def gap_b_hat(self) -> float:
        """``|Z⁺^{1/N} - Ẑ⁰^{1/N}|``."""
        return abs(self.root(self.log_z_plus) - self.root(self.log_z0_hat))

    @property
    def gap_b_limit(self) -> float:
        """``|Z⁺^{1/N} - e^{(1-n)/n}|``."""
        return abs(self.root(self.log_z_plus) - self.z0_limit_root)

    @property
    def gap_a(self) -> float | None:
        if self.log_z_prime is None or self.log_z_fbar is None:
            return None
        return abs(self.root(self.log_z_prime) - self.root(self.log_z_fbar))

    @property
    def gap_c(self) -> float | None:
        if self.log_z_minus_lower is None:
            return None
        return abs(self.root(self.log_z_plus) - self.root(self.log_z_minus_lower))

    def as_dict(self) -> dict:
        out = {
            "N": self.N, "n": self.n, "n_box": self.n_box, "eps": self.eps,
            "log_z_plus": self.log_z_plus, "log_z_prime": self.log_z_prime,
            "log_z_minus_lower": self.log_z_minus_lower,
            "log_factors": list(self.log_factors) if self.log_factors else None,
            "log_z_fbar": self.log_z_fbar, "log_z_f": self.log_z_f,
            "log_z0_hat": self.log_z0_hat,
            "root_z_plus": self.root(self.log_z_plus),
            "root_z_prime": self.root(self.log_z_prime),
            "root_z_minus_lower": self.root(self.log_z_minus_lower),
            "root_z_fbar": self.root(self.log_z_fbar),
            "root_z_f": self.root(self.log_z_f),
            "root_z0_hat": self.root(self.log_z0_hat),
            "z0_limit_root": self.z0_limit_root,
            "gap_b_hat": self.gap_b_hat, "gap_b_limit": self.gap_b_limit,
            "gap_a": self.gap_a, "gap_c": self.gap_c,
            "M_bar": self.M_bar, "M": self.M,
            "alpha_feasible": self.alpha_feasible,
            "mass_factor_ok": self.mass_factor_ok, "alpha_factorials_ok": self.alpha_factorials_ok, "stirling_slack_ok": self.stirling_slack_ok,
            "ordering_holds": self.ordering_holds,
            "skipped": dict(sorted(self.skipped.items())),
        }
        return out


def closed_form_report(N: int, n: int, n_box: int, eps: float = 0.1) -> BoundReport:
    """Z⁺ against Ẑ⁰ and the limit value, using closed forms only."""
    return BoundReport(N, n, n_box, eps, log_z_plus_closed(N, n, n_box), log_z0_hat(N, n))


def ladder_check(
    f: Weighting,
    dis: Dissection,
    eps: float,
    budget: int = 10**8,
    max_prime_states: int = DEFAULT_PRIME_STATES,
    corrupt_alpha: bool = False,
) -> BoundReport:
    """Evaluate every feasible rung for ``f`` and the dissection, plus the gaps.

    Rungs that exceed their budget are recorded in ``skipped``.
    ``corrupt_alpha`` is a test hook: it zeroes every α (breaking Σα = 1)
    so the assembled bound overshoots.
    """
    if dis.parent != f.lat:
        raise LatticeError("dissection is over a different lattice")
    N, n, nb = f.N, f.n, dis.n_box
    rep = BoundReport(N, n, nb, eps, z_plus(dis, n), log_z0_hat(N, n))
    fbar = coarse_average(f, dis)
    try:
        rep.log_z_prime = z_prime(fbar, max_prime_states)
    except BudgetExceeded as exc:
        rep.skipped["z_prime"] = str(exc)
    if nb % n == 0:
        spectrum = mass_spectrum(fbar, eps)
        rep.M_bar, rep.M = spectrum.M_bar, spectrum.M
        alpha = choose_alpha(spectrum, nb, n, eps)
        if corrupt_alpha:
            alpha = AlphaAssignment([Fraction(0)] * len(alpha.alpha), alpha.alpha_bar, alpha.step, False)
        rep.alpha_feasible = alpha.feasible
        zm = z_minus_lower(fbar, spectrum, alpha, validate=not corrupt_alpha)
        rep.log_factors = zm.log_factors
        rep.log_z_minus_lower = zm.log_value
        rep.mass_factor_ok = log_alpha_mass_factor(spectrum, alpha, n) >= -eps / (4 * n)
        rep.stirling_slack_ok = (
            0.5 * math.log(2 * math.pi) + 0.5 * math.log(nb) + 1 / 12
            <= nb * eps / (10 * max(spectrum.M, 1))
        )
        terms = stirling_form(fbar, spectrum, alpha)["alpha_factorial_terms"]
        rep.alpha_factorials_ok = all(-t <= eps / (10 * max(spectrum.M, 1)) for t in terms)
    else:
        rep.skipped["z_minus"] = f"n={n} does not divide n̄={nb}"
    if tiling_count(N, n) <= budget:
        rep.log_z_fbar = exact_partition(fbar, budget=budget).log_Z
        rep.log_z_f = exact_partition(f, budget=budget).log_Z
    else:
        rep.skipped["exact"] = f"{tiling_count(N, n)} tilings exceed budget {budget}"
    return rep


def theorem_b_gap(N: int, n: int, n_box: int) -> float:
    return closed_form_report(N, n, n_box).gap_b_hat

