import math
from fractions import Fraction

import numpy as np
import pytest

from conftest import weighting
from elastic_tilings.conditions import (
    ConditionsError,
    conditions_params,
    exponents,
    scaling_identity,
    tail_mass_check,
    threshold,
    truncated_mass,
    verify_conditions,
)
from elastic_tilings.ladder import mass_spectrum
from elastic_tilings.lattice import Dissection
from elastic_tilings.weighting import coarse_average


def test_example_schedule():
    p = conditions_params(0.1, 0.1, 1, 2)
    assert p.log_sm_target == pytest.approx(5.7 * math.log(0.1))
    assert p.log_n_box_real == pytest.approx(-4.6 * math.log(0.1))
    assert p.M_bar == 251
    assert p.n_box == round(10**4.6)
    assert p.alpha == pytest.approx(2 * 0.1**1.1, rel=1e-12)


def test_rounding_to_powers():
    p = conditions_params(0.1, 0.1, 2, 2)
    assert p.box_edge**2 == p.n_box
    assert abs(p.n_box - math.exp(p.log_n_box_real)) <= 2 * p.box_edge + 1


def test_s_to_zero_limit():
    ex = exponents(3, 2, Fraction(0))
    assert ex == {"sm": Fraction(3 + 1) + Fraction(2, 2), "n_box": -3 * 2 - 2, "M_bar": -3 * 2}


@pytest.mark.parametrize("n,d", [(2, 1), (3, 2), (4, 3)])
@pytest.mark.parametrize("s", [Fraction(1, 10), Fraction(1, 3), Fraction(7, 5)])
def test_scaling_identity_exact(n, d, s):
    # M̄^{1/nd} · ℓ̄ · sm has ε̄-exponent exactly -s
    ex = exponents(n, d, s)
    assert ex["M_bar"] / (n * d) + ex["n_box"] / d + ex["sm"] == -s


@pytest.mark.parametrize("eb", [0.1, 1e-3, 1e-8, 1e-30])
def test_scaling_identity_numeric(eb):
    p = conditions_params(0.1, 0.2, 2, 3, eps_bar=eb)
    lhs, rhs = scaling_identity(p)
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_large_eps_bar_fails():
    rep = verify_conditions(conditions_params(0.5, 0.1, 1, 2))
    assert not rep.all_pass and rep.failing


def test_threshold_and_monotone_grid():
    eps, s, d, n = 0.1, 0.1, 1, 2
    t = threshold(eps, s, d, n)
    assert t is not None
    # binding inequality: ε̄^{-2sd} > 200 n
    assert math.exp(t) == pytest.approx(400**-5, rel=1e-9)
    assert -2 * s * d * t > math.log(200 * n)
    grid = np.logspace(-1, -40, 60)
    status = [verify_conditions(conditions_params(eps, s, d, n, eps_bar=float(e))).all_pass for e in grid]
    first = status.index(True)
    assert all(status[first:]) and not any(status[:first])


def test_extreme_eps_bar_in_logs():
    p = conditions_params(0.1, 0.1, 1, 2, log_eps_bar=-5000.0)
    assert p.n_box is None and p.M_bar is None
    assert verify_conditions(p).all_pass


def test_errors():
    with pytest.raises(ConditionsError):
        conditions_params(0.1, 0.0, 1, 2)
    with pytest.raises(ConditionsError):
        conditions_params(-0.1, 0.1, 1, 2)
    with pytest.raises(ConditionsError):
        conditions_params(0.1, 0.1, 1, 2, eps_bar=0.2)


def test_report_dict():
    d = verify_conditions(conditions_params(0.1, 0.1, 1, 2)).as_dict()
    assert d["M_bar"] == 251
    assert {q["name"] for q in d["inequalities"]} >= {"reduced_truncation", "pointwise_average"}


def test_tail_complete_enumeration():
    f = weighting(1, 8, 2, "pair-exponential", 2.0)
    fbar = coarse_average(f, Dissection(f.lat, 2))
    spectrum = mass_spectrum(fbar, 0.1)
    rep = tail_mass_check(fbar, spectrum, 0.1)
    assert rep.deficit == pytest.approx(0.0, abs=1e-12)
    assert rep.eq74_holds and rep.eq76_holds
    assert rep.M_bar_needed <= len(spectrum.entries)


@pytest.mark.parametrize("d,L,eb", [(1, 16, 2), (1, 24, 2), (2, 8, 2), (1, 12, 3)])
@pytest.mark.parametrize("scale", [0.5, 1.0, 2.0, 4.0])
def test_tail_deficit_below_envelope(d, L, eb, scale):
    f = weighting(d, L, 2, "pair-exponential", scale)
    fbar = coarse_average(f, Dissection(f.lat, eb))
    for cutoff in (float(eb), 2.0 * eb):
        spectrum = mass_spectrum(fbar, 0.1, cutoff)
        rep = tail_mass_check(fbar, spectrum, 0.1, cutoff)
        assert rep.deficit == pytest.approx(truncated_mass(fbar, cutoff), abs=1e-12)
        assert rep.within_envelope
