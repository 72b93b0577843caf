import math
from fractions import Fraction

import pytest

from conftest import weighting
from elastic_tilings import kernel
from elastic_tilings.exact import (
    BudgetExceeded,
    DivisibilityError,
    exact_partition,
    lemma2_gap_bound,
    log_universal_bound,
    tiling_count,
    universal_bound,
    z0_hat,
    z0_limit,
)
from elastic_tilings.weighting import tilt_weighting


def test_tiling_counts():
    assert tiling_count(4, 2) == 3
    assert tiling_count(6, 2) == 15
    assert tiling_count(6, 3) == 10
    assert tiling_count(16, 2) == 2027025
    with pytest.raises(DivisibilityError):
        tiling_count(5, 2)


def test_small_closed_forms():
    assert z0_hat(4, 2).Z_exact == Fraction(1, 3)
    assert z0_hat(6, 2).Z_exact == Fraction(3, 25)
    assert z0_hat(4, 2).log_Z == pytest.approx(math.log(1 / 3))


def test_rational_mode_exact():
    res = exact_partition(weighting(1, 6, 2), mode="rational")
    assert res.Z_exact == Fraction(3, 25)
    assert res.mode == "rational"


def test_rational_matches_float_for_pair_exponential():
    f = weighting(1, 8, 2, "pair-exponential", 2.0)
    a = exact_partition(f)
    b = exact_partition(f, mode="rational")
    assert a.log_Z == pytest.approx(b.log_Z, rel=1e-12)


@pytest.mark.parametrize("backend", kernel.available_backends())
def test_backends_and_workers_agree(backend):
    f = weighting(1, 10, 2, "pair-exponential", 3.0)
    ref = exact_partition(f, backend=backend)
    par = exact_partition(f, backend=backend, workers=3)
    assert ref.log_Z == par.log_Z


def test_budget_guard():
    f = weighting(1, 16, 2)
    with pytest.raises(BudgetExceeded) as info:
        exact_partition(f, budget=1000)
    assert info.value.count == 2027025


def test_unknown_mode():
    with pytest.raises(ValueError):
        exact_partition(weighting(1, 4, 2), mode="interval")


def test_result_accessors():
    res = exact_partition(weighting(1, 4, 2))
    assert res.Z == pytest.approx(1 / 3)
    assert res.pressure == pytest.approx(-math.log(3) / 4)
    assert res.root == pytest.approx(3 ** -0.25)


def test_limit_and_universal_bound():
    assert z0_limit(2).Z0 == pytest.approx(math.exp(-0.5))
    assert universal_bound(4, 2) == pytest.approx(2 ** 0.25, abs=1e-12)
    # M^N = (N/n)^{N/n} / (N/n)!
    assert math.exp(12 * log_universal_bound(12, 3)) == pytest.approx(4**4 / 24)


def test_pressure_of_constant_tends_to_limit():
    gaps = [abs(z0_hat(N, 2).pressure - z0_limit(2).pressure) for N in (10, 100, 1000, 10**5)]
    assert all(a > b for a, b in zip(gaps, gaps[1:]))


def test_lemma2_identity_and_tilt(rng):
    f = weighting(1, 6, 2, "pair-exponential", 1.0)
    same = lemma2_gap_bound(f, f, 0.01)
    assert same.gap == 0 and same.holds
    g = tilt_weighting(f, 0.02, rng)
    assert lemma2_gap_bound(f, g, 0.02).holds
    # premise fails: not applicable
    h = tilt_weighting(f, 0.5, rng)
    res = lemma2_gap_bound(f, h, 0.001)
    assert not res.applicable and not res.holds
