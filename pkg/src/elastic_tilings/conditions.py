"""Parameter schedule linking smoothness, box size and supertype truncation.

Everything is evaluated in log space: the schedule produces box volumes far
beyond float range once the working epsilon is small enough for every
inequality to pass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .lattice import Dissection
from .ladder import MassSpectrum, enumerate_supertypes, supertype_mass, truncation_counts
from .weighting import CoarseWeighting, decay_radius

# above this many nats, rounding to integers is skipped (relative effect < 1e-300)
_INT_LIMIT = 700.0


class ConditionsError(ValueError):
    pass


def exponents(n: int, d: int, s) -> dict[str, object]:
    """Exponents of ε̄ for sm(f), n̄ and M̄. Exact if ``s`` is a Fraction."""
    return {
        "sm": n + 1 + Fraction(2, d) + (2 * n + 3) * s,
        "n_box": -n * d - 2 - 2 * (n + 1) * s * d,
        "M_bar": -n * d - 2 * n * d * s,
    }


def _nearest_power(log_x: float, d: int) -> tuple[int | None, float]:
    """Nearest d-th power to ``e^{log_x}`` as (integer, log); integer None if huge."""
    if log_x > _INT_LIMIT:
        return None, log_x
    x = math.exp(log_x)
    root = x ** (1.0 / d)
    lo = max(1, math.floor(root))
    cands = [lo, lo + 1] + ([lo - 1] if lo > 1 else [])
    best = min(cands, key=lambda r: (abs(r**d - x), r))
    return best**d, d * math.log(best)


def _nearest_int(log_x: float) -> tuple[int | None, float]:
    if log_x > _INT_LIMIT:
        return None, log_x
    k = max(1, round(math.exp(log_x)))
    return k, math.log(k)


@dataclass(frozen=True)
class ConditionsParams:
    eps: float
    s: float
    d: int
    n: int
    eps_bar: float
    log_eps_bar: float
    log_sm_target: float
    log_n_box_real: float
    log_M_bar_real: float
    n_box: int | None
    log_n_box: float
    box_edge: int | None
    M_bar: int | None
    log_M_bar: float
    c1: float

    @property
    def sm_target(self) -> float:
        return math.exp(self.log_sm_target)

    @property
    def log_alpha(self) -> float:
        """``ln α`` with ``α = ℓ̄ d n sm(f)`` and ℓ̄ from the unrounded n̄."""
        return math.log(self.d * self.n) + self.log_n_box_real / self.d + self.log_sm_target

    @property
    def alpha(self) -> float:
        return math.exp(self.log_alpha)

    @property
    def max_decay_radius(self) -> float:
        """Largest R(f) allowed by ``R(f) < c₁ / sm(f)``."""
        return self.c1 / self.sm_target


def conditions_params(
    eps: float, s: float, d: int, n: int, eps_bar: float | None = None,
    log_eps_bar: float | None = None, c1: float = 2.0,
) -> ConditionsParams:
    """Schedule ``sm = ε̄^{n+1+2/d+(2n+3)s}``, ``n̄ ≅ ε̄^{-nd-2-2(n+1)sd}``, ``M̄ ≅ ε̄^{-nd-2nds}``.

    ``n̄`` is rounded to the nearest d-th power and ``M̄`` to the nearest
    integer. Pass ``log_eps_bar`` for values below float range.
    """
    if eps <= 0:
        raise ConditionsError("eps must be positive")
    if s <= 0:
        raise ConditionsError("slack exponent s must be positive")
    if d < 1 or n < 1:
        raise ConditionsError("d and n must be positive")
    if log_eps_bar is None:
        eb = eps if eps_bar is None else eps_bar
        if not 0 < eb <= eps:
            raise ConditionsError("need 0 < eps_bar <= eps")
        log_eps_bar = math.log(eb)
    elif log_eps_bar > math.log(eps):
        raise ConditionsError("need eps_bar <= eps")
    ex = exponents(n, d, s)
    l_sm = float(ex["sm"]) * log_eps_bar
    l_nb = float(ex["n_box"]) * log_eps_bar
    l_mb = float(ex["M_bar"]) * log_eps_bar
    nb, l_nb_r = _nearest_power(l_nb, d)
    mb, l_mb_r = _nearest_int(l_mb)
    edge = None if nb is None else round(nb ** (1.0 / d))
    return ConditionsParams(
        eps=eps, s=s, d=d, n=n,
        eps_bar=math.exp(log_eps_bar), log_eps_bar=log_eps_bar,
        log_sm_target=l_sm, log_n_box_real=l_nb, log_M_bar_real=l_mb,
        n_box=nb, log_n_box=l_nb_r, box_edge=edge, M_bar=mb, log_M_bar=l_mb_r, c1=c1,
    )


@dataclass(frozen=True)
class Inequality:
    name: str
    lhs: float
    rhs: float
    holds: bool


@dataclass(frozen=True)
class ConditionsReport:
    params: ConditionsParams
    inequalities: tuple[Inequality, ...]
    threshold_log_eps_bar: float | None

    @property
    def all_pass(self) -> bool:
        return all(q.holds for q in self.inequalities)

    @property
    def failing(self) -> list[str]:
        return [q.name for q in self.inequalities if not q.holds]

    @property
    def threshold_eps_bar(self) -> float | None:
        if self.threshold_log_eps_bar is None:
            return None
        return math.exp(self.threshold_log_eps_bar)

    def as_dict(self) -> dict:
        p = self.params
        return {
            "eps": p.eps, "s": p.s, "d": p.d, "n": p.n, "c1": p.c1,
            "eps_bar": p.eps_bar, "log_eps_bar": p.log_eps_bar,
            "sm_target": p.sm_target, "log_sm_target": p.log_sm_target,
            "n_box": p.n_box, "log_n_box": p.log_n_box, "box_edge": p.box_edge,
            "M_bar": p.M_bar, "log_M_bar": p.log_M_bar,
            "alpha": p.alpha,
            "inequalities": [
                {"name": q.name, "lhs": q.lhs, "rhs": q.rhs, "holds": q.holds}
                for q in self.inequalities
            ],
            "all_pass": self.all_pass,
            "failing": self.failing,
            "threshold_eps_bar": self.threshold_eps_bar,
            "threshold_log_eps_bar": self.threshold_log_eps_bar,
        }


def _inequalities(p: ConditionsParams) -> tuple[Inequality, ...]:
    log_eps = math.log(p.eps)
    out = []
    # n̄ > 200 M̄ n / ε², compared in logs
    lhs = p.log_n_box
    rhs = math.log(200 * p.n) + p.log_M_bar - 2 * log_eps
    out.append(Inequality("box_volume_vs_truncation", lhs, rhs, lhs > rhs))
    # ½ln 2π + ½ln n̄ + 1/12 <= n̄ ε / (10 M̄), with M <= M̄
    lhs = 0.5 * math.log(2 * math.pi) + 0.5 * p.log_n_box + 1 / 12
    log_rhs = p.log_n_box + log_eps - math.log(10) - p.log_M_bar
    out.append(Inequality("stirling_slack", math.log(lhs), log_rhs, math.log(lhs) <= log_rhs))
    # ε̄^{-2sd} > 200 n
    lhs = -2 * p.s * p.d * p.log_eps_bar
    rhs = math.log(200 * p.n)
    out.append(Inequality("reduced_truncation", lhs, rhs, lhs > rhs))
    # the Stirling slack with the unrounded schedule and ε̄ in place of ε
    nb_real = p.log_n_box_real
    lhs = 0.5 * math.log(2 * math.pi) + 0.5 * nb_real + 1 / 12
    ex = exponents(p.n, p.d, p.s)
    log_rhs = -math.log(10) + p.log_eps_bar + nb_real - float(ex["M_bar"]) * p.log_eps_bar
    out.append(Inequality("reduced_stirling_slack", math.log(lhs), log_rhs, math.log(lhs) <= log_rhs))
    # α/(1-α) <= ε
    la = p.log_alpha
    if la < 0:
        lhs = la - math.log1p(-math.exp(la))
        out.append(Inequality("pointwise_average", lhs, log_eps, lhs <= log_eps))
    else:
        out.append(Inequality("pointwise_average", math.inf, log_eps, False))
    return tuple(out)


def _passes(eps: float, s: float, d: int, n: int, log_eps_bar: float, c1: float) -> bool:
    p = conditions_params(eps, s, d, n, log_eps_bar=log_eps_bar, c1=c1)
    return all(q.holds for q in _inequalities(p))


def threshold(eps: float, s: float, d: int, n: int, c1: float = 2.0,
              floor_log: float = -1e6, iters: int = 200) -> float | None:
    """Largest ``ln ε̄ <= ln ε`` at which every inequality passes (bisection)."""
    hi = math.log(eps)
    if _passes(eps, s, d, n, hi, c1):
        return hi
    lo = hi
    step = 1.0
    while True:
        lo = max(hi - step, floor_log)
        if _passes(eps, s, d, n, lo, c1):
            break
        if lo <= floor_log:
            return None
        step *= 2
    # invariant: lo passes, hi fails
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if _passes(eps, s, d, n, mid, c1):
            lo = mid
        else:
            hi = mid
    return lo


def verify_conditions(p: ConditionsParams) -> ConditionsReport:
    """Evaluate every parameter inequality and bisect for the passing threshold."""
    return ConditionsReport(p, _inequalities(p), threshold(p.eps, p.s, p.d, p.n, p.c1))


def scaling_identity(p: ConditionsParams) -> tuple[float, float]:
    """``ln(M̄^{1/nd} ℓ̄ sm)`` from the unrounded schedule, and ``ln ε̄^{-s}``."""
    nd = p.n * p.d
    lhs = p.log_M_bar_real / nd + p.log_n_box_real / p.d + p.log_sm_target
    return lhs, -p.s * p.log_eps_bar


@dataclass(frozen=True)
class TailReport:
    eps: float
    enumerated_mass: float
    deficit: float
    envelope: float
    M_bar_needed: int | None
    eq74_holds: bool
    eq76_holds: bool
    M_bar: int
    M: int

    @property
    def within_envelope(self) -> bool:
        # the deficit is 1 - fsum(masses); allow for its rounding
        return self.deficit <= self.envelope + 1e-12


def envelope_bound(fbar: CoarseWeighting, cutoff_radius: float) -> float:
    """Upper bound on the mass of supertypes beyond the cutoff from the decay radius.

    A supertype whose farthest rest box has centre distance r holds tiles of
    maximal pair distance at least ``r - √d (ℓ̄-1)``, where ``f <= e^{-dist/R(f)}``;
    the average f̄ inherits the bound. Summed over excluded supertypes with
    their covered-set counts.
    """
    from .ladder import _cover_count_log

    dis = fbar.dis
    R = decay_radius(fbar.base)
    norm = fbar.base.norm
    spread = (math.sqrt(dis.parent.d) if norm == "euclidean" else 1.0) * (dis.box_edge - 1)
    total = []
    for t in enumerate_supertypes(dis, fbar.n):
        r = max((dis.box_center_distance(0, b, norm) for b in t.rest), default=0.0)
        if r <= cutoff_radius:
            continue
        count = math.exp(_cover_count_log(dis, t))
        if math.isinf(R):
            total.append(count)
        else:
            total.append(count * math.exp(-max(0.0, r - spread) / R))
    return math.fsum(total)


def tail_mass_check(
    fbar: CoarseWeighting, spectrum: MassSpectrum, eps: float, cutoff_radius: float = math.inf
) -> TailReport:
    """Mass captured by a (possibly truncated) spectrum versus the truncation targets.

    The deficit is ``1 - Σ a_k`` over the enumerated supertypes; the envelope
    is :func:`envelope_bound` for the same cutoff (zero when nothing is cut).
    """
    masses = spectrum.masses
    enumerated = math.fsum(masses)
    deficit = max(0.0, 1.0 - enumerated)
    running = 0.0
    needed = None
    for k, a in enumerate(masses, 1):
        running += a
        if running > 1 - eps / 20:
            needed = k
            break
    M_bar, M = truncation_counts(masses, eps)
    kept = math.fsum(masses[:M])
    env = 0.0 if math.isinf(cutoff_radius) else envelope_bound(fbar, cutoff_radius)
    return TailReport(
        eps=eps, enumerated_mass=enumerated, deficit=deficit, envelope=env,
        M_bar_needed=needed, eq74_holds=needed is not None,
        eq76_holds=kept > 1 - eps / 10, M_bar=M_bar, M=M,
    )


def truncated_mass(fbar: CoarseWeighting, cutoff_radius: float) -> float:
    """Exact mass of the supertypes excluded by the cutoff."""
    dis = fbar.dis
    out = []
    for t in enumerate_supertypes(dis, fbar.n):
        r = max((dis.box_center_distance(0, b, fbar.base.norm) for b in t.rest), default=0.0)
        if r > cutoff_radius:
            out.append(supertype_mass(fbar, t))
    return math.fsum(out)


__all__ = [
    "ConditionsParams", "ConditionsReport", "Dissection", "Inequality", "TailReport",
    "conditions_params", "envelope_bound", "exponents", "scaling_identity",
    "tail_mass_check", "threshold", "truncated_mass", "verify_conditions",
]
