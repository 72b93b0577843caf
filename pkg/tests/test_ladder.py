import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from conftest import weighting
from elastic_tilings.cli import _feasible_box, _random_spectrum
from elastic_tilings.exact import BudgetExceeded, exact_partition
from elastic_tilings.ladder import (
    LadderError,
    Supertype,
    alpha_contract,
    choose_alpha,
    closed_form_report,
    enumerate_supertypes,
    ladder_check,
    log_z_plus_closed,
    mass_spectrum,
    occupancy_vector,
    supertype_mass,
    theorem_b_gap,
    z_minus_lower,
    z_plus,
    z_prime,
)
from elastic_tilings.lattice import Dissection
from elastic_tilings.numerics import log_factorial
from elastic_tilings.weighting import coarse_average


def _proto(fbar, exact_occupancy):
    """Brute-force proto-sum over ordered sequences of N/n overlapping sets."""
    dis, n, N = fbar.dis, fbar.n, fbar.N
    m, nb = N // n, dis.n_box
    sets = list(itertools.combinations(range(N), n))
    vals = {s: fbar(s) for s in sets}
    total = 0.0
    for seq in itertools.product(sets, repeat=m):
        if exact_occupancy and occupancy_vector(seq, dis) != [nb] * dis.num_boxes:
            continue
        total += math.prod(vals[s] for s in seq)
    c = dis.num_boxes * (log_factorial(nb) - nb * math.log(nb))
    return math.log(total) - log_factorial(m) + c


@pytest.mark.parametrize("L,eb", [(4, 2), (6, 3), (6, 2)])
@pytest.mark.parametrize("kind,scale", [("constant", None), ("pair-exponential", 2.0)])
def test_z_prime_and_z_plus_match_brute_force(L, eb, kind, scale):
    f = weighting(1, L, 2, kind, scale)
    dis = Dissection(f.lat, eb)
    fbar = coarse_average(f, dis)
    assert z_prime(fbar) == pytest.approx(_proto(fbar, True), rel=1e-12)
    assert z_plus(dis, 2) == pytest.approx(_proto(fbar, False), rel=1e-12)


def test_desk_values():
    f = weighting(1, 4, 2)
    dis = Dissection(f.lat, 2)
    assert math.exp(z_plus(dis, 2)) == pytest.approx(0.5, abs=1e-12)
    assert math.exp(z_prime(coarse_average(f, dis))) == pytest.approx(0.25, abs=1e-12)


def test_unit_boxes_reduce_to_exact():
    f = weighting(1, 8, 2, "pair-exponential", 3.0)
    fbar = coarse_average(f, Dissection(f.lat, 1))
    assert z_prime(fbar) == pytest.approx(exact_partition(f).log_Z, rel=1e-12)


def test_z_prime_budget():
    f = weighting(1, 16, 2)
    with pytest.raises(BudgetExceeded):
        z_prime(coarse_average(f, Dissection(f.lat, 2)), max_states=1000)


def test_z_plus_divisibility():
    with pytest.raises(LadderError):
        log_z_plus_closed(10, 3, 5)


@pytest.mark.parametrize("d,L,eb", [(1, 8, 2), (1, 8, 4), (2, 4, 2), (1, 12, 3)])
def test_supertype_masses_sum_to_one(d, L, eb):
    f = weighting(d, L, 2, "pair-exponential", 1.5)
    fbar = coarse_average(f, Dissection(f.lat, eb))
    spectrum = mass_spectrum(fbar, 0.1)
    assert spectrum.total == pytest.approx(1.0, abs=1e-12)
    assert spectrum.masses == sorted(spectrum.masses, reverse=True)


@pytest.mark.parametrize("n", [2, 3])
def test_supertype_closed_matches_direct(n):
    L = 12 if n == 3 else 8
    f = weighting(1, L, n, "pair-exponential", 2.0)
    dis = Dissection(f.lat, 4 if n == 2 else 3)
    fbar = coarse_average(f, dis)
    for t in enumerate_supertypes(dis, n):
        a = supertype_mass(fbar, t)
        for z in dis.members[0]:
            assert supertype_mass(fbar, t, point=z, method="direct") == pytest.approx(a, rel=1e-12)


def test_supertype_cutoff_and_point_errors():
    f = weighting(1, 8, 2)
    dis = Dissection(f.lat, 2)
    assert [t.rest for t in enumerate_supertypes(dis, 2, cutoff_radius=2.0)] == [(0,), (1,), (3,)]
    with pytest.raises(LadderError):
        enumerate_supertypes(dis, 2, cutoff_radius=-1)
    with pytest.raises(LadderError):
        supertype_mass(coarse_average(f, dis), Supertype((1,)), point=5, method="direct")


def test_choose_alpha_exact_on_grid_input():
    f = weighting(1, 8, 2)
    fbar = coarse_average(f, Dissection(f.lat, 4))
    spectrum = mass_spectrum(fbar, 0.1)
    a = choose_alpha(spectrum, 4, 2, 0.1)
    assert sum(a.alpha) == 1
    assert all(x % Fraction(1, 2) == 0 for x in a.alpha)


def test_choose_alpha_contract_random(rng):
    for _ in range(50):
        spectrum = _random_spectrum(rng, 0.1)
        nb = _feasible_box(spectrum.M_bar, 2, 0.1)
        a = choose_alpha(spectrum, nb, 2, 0.1)
        assert a.feasible
        c = alpha_contract(a, spectrum, 0.1)
        assert c.on_grid and c.sums_to_one and c.close


def test_choose_alpha_rejects():
    f = weighting(1, 8, 2)
    spectrum = mass_spectrum(coarse_average(f, Dissection(f.lat, 4)), 0.1)
    with pytest.raises(LadderError):
        choose_alpha(spectrum, 3, 2, 0.1)
    with pytest.raises(LadderError):
        choose_alpha(spectrum, 4, 2, 0.0)


def test_z_minus_rejects_bad_alpha():
    f = weighting(1, 8, 2)
    fbar = coarse_average(f, Dissection(f.lat, 4))
    spectrum = mass_spectrum(fbar, 0.1)
    a = choose_alpha(spectrum, 4, 2, 0.1)
    a.alpha = [Fraction(1, 3)] + [Fraction(0)] * (len(a.alpha) - 1)
    with pytest.raises(LadderError):
        z_minus_lower(fbar, spectrum, a)


@pytest.mark.parametrize("L,eb", [(4, 2), (8, 2), (8, 4), (8, 8)])
@pytest.mark.parametrize("kind,scale", [("constant", None), ("pair-exponential", 4.0)])
def test_ladder_ordering(L, eb, kind, scale):
    f = weighting(1, L, 2, kind, scale)
    rep = ladder_check(f, Dissection(f.lat, eb), 0.1)
    assert rep.log_z_prime is not None and rep.log_z_minus_lower is not None
    assert rep.ordering_holds
    tol = 1e-12 * abs(rep.log_z_plus)
    assert rep.log_z_plus >= rep.log_z_prime - tol
    assert rep.log_z_prime >= rep.log_z_minus_lower - tol


def test_corrupt_alpha_breaks_ordering():
    f = weighting(1, 8, 2, "pair-exponential", 4.0)
    rep = ladder_check(f, Dissection(f.lat, 2), 0.1, corrupt_alpha=True)
    assert not rep.ordering_holds


def test_bound_report_serializes():
    f = weighting(1, 8, 2)
    d = ladder_check(f, Dissection(f.lat, 4), 0.1).as_dict()
    assert d["ordering_holds"] and d["gap_a"] is not None
    assert set(d["skipped"]) == set()


def test_theorem_b_gap_shrinks_with_box_size():
    gaps = [theorem_b_gap(10**4, 2, nb) for nb in (10, 100, 1000, 10**4)]
    assert all(a > b for a, b in zip(gaps, gaps[1:]))
    rep = closed_form_report(10**4, 2, 100)
    assert rep.log_z_prime is None and rep.ordering_holds


def test_gap_a_shrinks_with_volume_at_fixed_box():
    # fixed box edge, growing lattice: |Z'^{1/N} - Z(f̄)^{1/N}| decreases
    for kind, scale in (("constant", None), ("pair-exponential", 4.0)):
        gaps = []
        for L in (8, 16):
            f = weighting(1, L, 2, kind, scale)
            fbar = coarse_average(f, Dissection(f.lat, 2))
            zp = z_prime(fbar)
            zf = exact_partition(fbar).log_Z
            gaps.append(abs(math.exp(zp / L) - math.exp(zf / L)))
        assert gaps[1] < gaps[0]
