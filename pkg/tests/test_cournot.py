import math

import mpmath
import pytest
from hypothesis import given
from hypothesis import strategies as st

from typicality_lab.cournot import (
    Negligibility,
    budget,
    classify,
    repeat_probability,
    sigma_max_gaussian,
    sigma_max_hoeffding,
)
from typicality_lab.errors import DomainError
from typicality_lab.extprob import from_linear, from_log
from typicality_lab.tails import gaussian_tail

LN10 = math.log(10)
COSMIC = budget(10**81, 10**62)


def p10(e):
    return from_log(e * LN10)


class TestBudget:
    def test_headline_numbers(self):
        assert COSMIC.n_max == 10**143
        assert COSMIC.n_max_exp == 143
        assert COSMIC.sigma_max == pytest.approx(25.5, abs=0.2)
        assert COSMIC.epsilon_max_coefficient == pytest.approx(12.75, abs=0.1)

    def test_exponent_arithmetic_is_exact(self):
        b = budget(7 * 10**300, 3 * 10**200)
        assert b.n_max == 21 * 10**500
        assert b.n_max_exp == 501

    def test_degenerate(self):
        b = budget(1, 1)
        assert b.n_max == 1 and b.sigma_max == 0.0

    def test_solves_the_tail_equation(self):
        got = gaussian_tail(COSMIC.sigma_max).log_value
        assert got == pytest.approx(-COSMIC.log_n_max, rel=1e-9)

    def test_round_trip_exponent(self):
        assert gaussian_tail(COSMIC.sigma_max).log10_value == pytest.approx(-143, rel=5e-3)

    def test_against_mpmath_root(self):
        mpmath.mp.dps = 40
        f = lambda s: mpmath.log(mpmath.erfc(s / mpmath.sqrt(2))) + 143 * mpmath.log(10)
        root = mpmath.findroot(f, 25.5)
        assert COSMIC.sigma_max == pytest.approx(float(root), rel=1e-10)

    def test_hoeffding_variant(self):
        h = budget(10**81, 10**62, method="hoeffding")
        assert h.sigma_max == pytest.approx(math.sqrt(math.log(2e143) / 0.5), rel=1e-12)
        assert h.sigma_max == pytest.approx(25.7, abs=0.05)
        assert h.sigma_max == pytest.approx(COSMIC.sigma_max, rel=0.01)

    def test_monotone_in_budget(self):
        sig = [sigma_max_gaussian(math.log(10.0**e)) for e in range(1, 300, 7)]
        assert all(a < b for a, b in zip(sig, sig[1:]))

    def test_json(self):
        assert COSMIC.to_json() == {
            "atoms_exp": 81,
            "time_ratio_exp": 62,
            "n_max_exp": 143,
            "sigma_max": 25.53,
            "epsilon_max_coefficient": 12.76,
        }

    @pytest.mark.parametrize("atoms,ratio", [(0, 1), (1, 0), (2.5, 1)])
    def test_invalid(self, atoms, ratio):
        with pytest.raises(DomainError):
            budget(atoms, ratio)

    def test_hoeffding_needs_interior_p(self):
        with pytest.raises(DomainError):
            sigma_max_hoeffding(10.0, p=1.0)


class TestClassify:
    @pytest.mark.parametrize(
        "exp,tier",
        [
            (-20, Negligibility.ORDINARY),
            (-143 + 0.01, Negligibility.ORDINARY),
            (-200, Negligibility.COSMICALLY_NEGLIGIBLE),
            (-999, Negligibility.COSMICALLY_NEGLIGIBLE),
            (-2174, Negligibility.BOREL_UNIVERSALLY_NEGLIGIBLE),
            (-1e9, Negligibility.BOREL_UNIVERSALLY_NEGLIGIBLE),
        ],
    )
    def test_tiers(self, exp, tier):
        assert classify(p10(exp), COSMIC) is tier

    def test_zero_is_borel(self):
        assert classify(from_linear(0), COSMIC) is Negligibility.BOREL_UNIVERSALLY_NEGLIGIBLE

    @given(st.floats(min_value=-5000, max_value=0))
    def test_borel_implies_cosmic(self, e):
        p = p10(e)
        if classify(p, COSMIC) is Negligibility.BOREL_UNIVERSALLY_NEGLIGIBLE:
            assert p < COSMIC.threshold


class TestRepeat:
    def test_one_over_e(self):
        n = 10**6
        assert repeat_probability(from_linear(1 / n), n).value == pytest.approx(0.6321, abs=1e-4)

    def test_hundred_n(self):
        n = 10**6
        r = repeat_probability(from_linear(1 / n), 100 * n)
        assert round(r.log10_complement) == -43
        assert r.log_complement == pytest.approx(-100, rel=1e-5)

    @given(st.floats(min_value=-23000, max_value=-1e-3))
    def test_single_trial_is_identity(self, lv):
        p = from_log(lv)
        assert repeat_probability(p, 1) == p

    def test_extreme_range(self):
        r = repeat_probability(p10(-10000), 10**300)
        assert r.log10_value == pytest.approx(-9700, abs=1e-9)
        sure = repeat_probability(p10(-250), 10**300)
        assert sure.log_complement == pytest.approx(-1e50, rel=1e-9)
        small = repeat_probability(p10(-10000), 10**20)
        assert small.log10_value == pytest.approx(-9980, abs=1e-9)

    def test_against_mpmath(self):
        mpmath.mp.dps = 50
        for e, t in [(-3, 500), (-8, 10**7), (-12, 3 * 10**12)]:
            want = 1 - (1 - mpmath.mpf(10) ** e) ** t
            got = repeat_probability(p10(e), t)
            assert got.value == pytest.approx(float(want), rel=1e-9)

    def test_monotone(self):
        p = p10(-5)
        vals = [repeat_probability(p, t) for t in (1, 10, 10**3, 10**5, 10**7)]
        assert all(a < b for a, b in zip(vals, vals[1:]))
        byp = [repeat_probability(p10(e), 1000) for e in (-9, -7, -5, -3)]
        assert all(a < b for a, b in zip(byp, byp[1:]))

    def test_bad_trials(self):
        with pytest.raises(DomainError):
            repeat_probability(p10(-3), 0)
