import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from typicality_lab.errors import BudgetError, DomainError, RangeError
from typicality_lab.tails import (
    BinomialSpec,
    RegimeWarning,
    binom_log_pmf,
    binomial_band,
    chebyshev_bound,
    confidence_interval,
    gaussian_tail,
    gaussian_tail_leading,
    hoeffding_bound,
    hypergeometric_pmf,
    moivre_laplace_pmf,
    two_sided_tail,
    wlln_table,
)

LN10 = math.log(10)


def log_fraction(x: Fraction) -> float:
    return math.log(x.numerator) - math.log(x.denominator)


def exact_pmf(n, p: Fraction, k):
    return math.comb(n, k) * p**k * (1 - p) ** (n - k)


def exact_tail(n, p: Fraction, eps: Fraction):
    """Brute-force P(|k/n - p| >= eps) in rational arithmetic."""
    return sum(exact_pmf(n, p, k) for k in range(n + 1) if abs(Fraction(k, n) - p) >= eps)


def mp_gauss_tail(sigma):
    mpmath.mp.dps = 50
    return mpmath.erfc(mpmath.mpf(sigma) / mpmath.sqrt(2))


class TestBinomialSpec:
    def test_accessors(self):
        s = BinomialSpec(100, 0.3)
        assert s.mean == 0.3
        assert s.delta_q == pytest.approx(math.sqrt(0.21 / 100))
        assert s.sigma_limit == pytest.approx(0.3 / s.delta_q)

    @pytest.mark.parametrize("n,p", [(0, 0.5), (-3, 0.5), (10, 1.5), (10, -0.1)])
    def test_invalid(self, n, p):
        with pytest.raises(DomainError):
            BinomialSpec(n, p)


class TestPmf:
    def test_hand_enumeration(self):
        assert binom_log_pmf(BinomialSpec(4, 0.5), 2).value == pytest.approx(0.375, rel=1e-14)

    def test_square(self):
        assert binom_log_pmf(BinomialSpec(2, 0.75), 2).value == pytest.approx(9 / 16, rel=1e-14)

    def test_central_thousand(self):
        v = binom_log_pmf(BinomialSpec(1000, 0.5), 500).value
        central = 1 / (1000 * math.sqrt(0.25 / 1000) * math.sqrt(2 * math.pi))
        assert v == pytest.approx(0.025225, abs=5e-6)
        assert v == pytest.approx(central, rel=1e-3)

    def test_out_of_range(self):
        with pytest.raises(DomainError):
            binom_log_pmf(BinomialSpec(10, 0.5), 11)

    def test_degenerate_p(self):
        s = BinomialSpec(10, 1.0)
        assert binom_log_pmf(s, 10).is_one()
        assert binom_log_pmf(s, 9).is_zero()

    @settings(max_examples=150)
    @given(
        st.integers(min_value=1, max_value=400),
        st.fractions(min_value=Fraction(1, 100), max_value=Fraction(99, 100), max_denominator=100),
        st.data(),
    )
    def test_twelve_digits_against_rational_oracle(self, n, p, data):
        k = data.draw(st.integers(min_value=0, max_value=n))
        # the oracle uses the exact binary value of the float p
        fp = Fraction(float(p))
        want = exact_pmf(n, fp, k)
        got = binom_log_pmf(BinomialSpec(n, float(p)), k)
        assert got.log_value == pytest.approx(log_fraction(want), rel=1e-12, abs=1e-12)

    @pytest.mark.parametrize("n", [10**6, 10**8, 10**9])
    def test_large_n_against_mpmath(self, n):
        mpmath.mp.dps = 40
        for k in (n // 2, n // 2 + int(3 * math.sqrt(n)), n // 3):
            want = mpmath.log(mpmath.binomial(n, k)) + n * mpmath.log(mpmath.mpf(1) / 2)
            got = binom_log_pmf(BinomialSpec(n, 0.5), k).log_value
            assert got == pytest.approx(float(want), rel=1e-12)

    @pytest.mark.parametrize("n", [1, 7, 50, 333, 2000, 10**4])
    @pytest.mark.parametrize("p", [0.01, 0.3, 0.5, 0.77])
    def test_normalization(self, n, p):
        assert binomial_band(BinomialSpec(n, p), 0, n).value == pytest.approx(1.0, abs=1e-10)
        total = sum(binom_log_pmf(BinomialSpec(n, p), k).value for k in range(n + 1)) if n <= 2000 else 1.0
        assert total == pytest.approx(1.0, abs=1e-10)


class TestMoivreLaplace:
    def test_central(self):
        v = moivre_laplace_pmf(BinomialSpec(1000, 0.5), 500).value
        assert v == pytest.approx(0.025231, abs=1e-6)

    def test_off_center(self):
        s = BinomialSpec(1000, 0.5)
        ml = moivre_laplace_pmf(s, 550).value
        assert ml == pytest.approx(math.exp(-5) * 0.0252313, rel=1e-4)
        assert ml == pytest.approx(binom_log_pmf(s, 550).value, rel=0.02)

    def test_million(self):
        s = BinomialSpec(10**6, 0.5)
        ml = moivre_laplace_pmf(s, 5 * 10**5).value
        assert ml == pytest.approx(binom_log_pmf(s, 5 * 10**5).value, rel=5e-6)

    def test_small_n_warns(self):
        with pytest.warns(RegimeWarning):
            moivre_laplace_pmf(BinomialSpec(10, 0.5), 5)

    def test_converges_within_three_sigma(self):
        n = 10**4
        s = BinomialSpec(n, 0.5)
        half = int(3 * math.sqrt(n * 0.25))
        worst = 0.0
        for k in range(n // 2 - half, n // 2 + half + 1):
            ml = moivre_laplace_pmf(s, k).value
            ex = binom_log_pmf(s, k).value
            worst = max(worst, abs(ml - ex) / ex)
        assert worst < 0.01


class TestGaussianTail:
    def test_zero_width(self):
        assert gaussian_tail(0).is_one()

    def test_three_sigma(self):
        assert gaussian_tail(3).complement_value == pytest.approx(0.9973, abs=5e-5)

    def test_ten_sigma(self):
        t = gaussian_tail(10)
        assert t.value == pytest.approx(1.524e-23, rel=1e-3)
        assert math.floor(t.log10_value) == -23

    def test_cosmic_sigma(self):
        assert gaussian_tail(25.5).log10_value == pytest.approx(-143, abs=0.5)

    @pytest.mark.parametrize("sigma", [0.1, 1, 2.5, 7, 15, 29.9, 30.1, 45, 100, 300])
    def test_against_mpmath(self, sigma):
        want = float(mpmath.log(mp_gauss_tail(sigma)))
        assert gaussian_tail(sigma).log_value == pytest.approx(want, rel=1e-13, abs=1e-14)

    def test_crossover_continuity(self):
        below = gaussian_tail(30 - 1e-9).log_value
        above = gaussian_tail(30 + 1e-9).log_value
        assert abs(above - below) / abs(below) < 1e-9

    @pytest.mark.parametrize("sigma", np.arange(10, 40.5, 2.5))
    def test_leading_asymptote_within_two_percent(self, sigma):
        ratio = math.exp(gaussian_tail_leading(sigma).log_value - gaussian_tail(sigma).log_value)
        assert ratio == pytest.approx(1.0, rel=0.02)

    def test_hundred_sigma_exponent(self):
        assert gaussian_tail(100).log10_value == pytest.approx(-2174 + math.log10(2.68836), abs=1e-4)


class TestTwoSidedTail:
    def test_brute_force_n20(self):
        spec = BinomialSpec(20, 0.5)
        rep = two_sided_tail(spec, 0.25 / spec.delta_q)
        want = sum(math.comb(20, k) for k in range(21) if k <= 5 or k >= 15) / 2**20
        assert rep.exact.value == pytest.approx(want, rel=1e-12)

    def test_strict_boundary_variant(self):
        spec = BinomialSpec(20, 0.5)
        rep = two_sided_tail(spec, 0.25 / spec.delta_q, inclusive=False)
        want = sum(math.comb(20, k) for k in range(21) if k < 5 or k > 15) / 2**20
        assert rep.exact.value == pytest.approx(want, rel=1e-12)

    def test_three_sigma_gaussian(self):
        rep = two_sided_tail(BinomialSpec(10**4, 0.5), 3)
        assert rep.gaussian_confidence.value == pytest.approx(0.9973, abs=5e-5)

    def test_headlines(self):
        r10 = two_sided_tail(BinomialSpec(10**10, 0.5), 10)
        r100 = two_sided_tail(BinomialSpec(10**24, 0.5), 100)
        assert round(r10.gaussian_confidence.log10_complement) == -23
        assert r100.gaussian_confidence.log10_complement == pytest.approx(-2174, abs=1)
        assert r100.asymptotic

    def test_exact_matches_mpmath_summation_at_large_n(self):
        n = 10**9
        rep = two_sided_tail(BinomialSpec(n, 0.5), 4)
        # the band edge n/2 - 4 sqrt(n)/2 is not an integer; sum the lower
        # side in 30-digit arithmetic and double it by symmetry
        mpmath.mp.dps = 30
        k = math.ceil(n / 2 - 2 * math.sqrt(n)) - 1
        term = mpmath.exp(
            mpmath.loggamma(n + 1) - mpmath.loggamma(k + 1) - mpmath.loggamma(n - k + 1) - n * mpmath.log(2)
        )
        total = mpmath.mpf(0)
        while term > total * mpmath.mpf("1e-25"):
            total += term
            term = term * k / (n - k + 1)
            k -= 1
        assert rep.exact.value == pytest.approx(float(2 * total), rel=1e-12)

    def test_sigma_out_of_range(self):
        spec = BinomialSpec(100, 0.1)
        with pytest.raises(RangeError):
            two_sided_tail(spec, spec.sigma_limit * 1.01)
        with pytest.raises(RangeError):
            two_sided_tail(spec, 0)

    def test_hoeffding_forms_agree(self):
        spec = BinomialSpec(777, 0.3)
        sigma = 2.2
        a = 2 * math.exp(-2 * spec.n * sigma**2 * spec.delta_q**2)
        b = 2 * math.exp(-2 * sigma**2 * spec.p * spec.q)
        assert a == pytest.approx(b, rel=1e-12)
        assert hoeffding_bound(spec, sigma).value == pytest.approx(min(b, 1.0), rel=1e-12)

    def test_chebyshev_clipped(self):
        assert chebyshev_bound(BinomialSpec(100, 0.5), 0.5).is_one()
        assert chebyshev_bound(BinomialSpec(100, 0.5), 4).value == pytest.approx(1 / 16)

    @settings(max_examples=300, deadline=None)
    @given(
        st.integers(min_value=10, max_value=600),
        st.sampled_from([0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]),
        st.floats(min_value=0.05, max_value=1.0),
    )
    def test_bound_dominance(self, n, p, frac):
        spec = BinomialSpec(n, p)
        rep = two_sided_tail(spec, frac * spec.sigma_limit)
        for bound in (rep.hoeffding, rep.chebyshev):
            if not bound.is_one():
                assert rep.exact <= bound

    @settings(max_examples=60, deadline=None)
    @given(st.integers(min_value=5, max_value=60), st.integers(min_value=1, max_value=9), st.data())
    def test_against_rational_oracle(self, n, tenths, data):
        p = Fraction(tenths, 10)
        spec = BinomialSpec(n, float(p))
        eps = Fraction(data.draw(st.integers(min_value=1, max_value=min(tenths, 10 - tenths) * 10)), 100)
        rep = two_sided_tail(spec, float(eps) / spec.delta_q)
        assert rep.exact.value == pytest.approx(float(exact_tail(n, p, eps)), rel=1e-10, abs=1e-300)


class TestWlln:
    def test_table(self):
        rows = wlln_table(0.5, [10, 100, 1000], 0.1)
        tails = [r.exact.value for r in rows]
        assert tails[0] == pytest.approx(float(exact_tail(10, Fraction(1, 2), Fraction(1, 10))), rel=1e-12)
        assert tails[1] == pytest.approx(0.0568879, rel=1e-5)
        assert tails[2] == pytest.approx(float(exact_tail(1000, Fraction(1, 2), Fraction(1, 10))), rel=1e-10)
        assert tails[0] > tails[1] > tails[2]

    @pytest.mark.parametrize("n", [1, 2, 10, 40])
    def test_half_width_extremes(self, n):
        assert wlln_table(0.5, [n], 0.5)[0].exact.value == pytest.approx(2 / 2**n, rel=1e-12)

    def test_three_quarters(self):
        row = wlln_table(0.75, [100], 0.25)[0]
        want = exact_tail(100, Fraction(3, 4), Fraction(1, 4))
        assert row.exact.value == pytest.approx(float(want), rel=1e-10)

    def test_strictly_decreasing(self):
        ns = [20, 50, 100, 200, 500, 1000, 5000, 10**5]
        tails = [r.exact for r in wlln_table(0.3, ns, 0.05)]
        assert all(a > b for a, b in zip(tails, tails[1:]))

    def test_order_independent_of_workers(self):
        ns = [1000, 10, 300, 7]
        assert wlln_table(0.4, ns, 0.1) == wlln_table(0.4, ns, 0.1, workers=4)

    def test_bad_epsilon(self):
        with pytest.raises(DomainError):
            wlln_table(0.5, [10], 0)


class TestHypergeometric:
    def test_exhaustive(self):
        assert hypergeometric_pmf(1, 1, 2, 1).value == pytest.approx(1.0, rel=1e-13)

    def test_sequential_product(self):
        assert hypergeometric_pmf(5, 5, 2, 2).value == pytest.approx(2 / 9, rel=1e-13)

    def test_binomial_limit(self):
        h = hypergeometric_pmf(5 * 10**5, 5 * 10**5, 10, 5).value
        b = binom_log_pmf(BinomialSpec(10, 0.5), 5).value
        assert h == pytest.approx(b, rel=1e-4)

    def test_matches_scipy(self):
        for k in range(0, 8):
            got = hypergeometric_pmf(30, 12, 7, k).value
            assert got == pytest.approx(stats.hypergeom.pmf(k, 42, 30, 7), rel=1e-11)

    def test_budget(self):
        with pytest.raises(BudgetError):
            hypergeometric_pmf(3, 3, 7, 3)

    def test_support(self):
        with pytest.raises(DomainError):
            hypergeometric_pmf(3, 3, 5, 0)


class TestInterval:
    def test_eq14_arithmetic(self):
        ci = confidence_interval(0.5, 10**10, 10)
        assert ci.half_width == pytest.approx(5e-5, rel=1e-12)
        assert ci.center == 0.5

    def test_rigorous_shifted_center(self):
        ci = confidence_interval(0.0, 100, 3, "rigorous")
        assert ci.center == pytest.approx(0.045 / 1.09, rel=1e-12)
        assert ci.center == pytest.approx(0.0413, abs=5e-4)
        assert ci.half_width > 0

    def test_large_n_agreement(self):
        a = confidence_interval(0.5, 10**6, 3)
        r = confidence_interval(0.5, 10**6, 3, "rigorous")
        assert abs(a.center - r.center) < 1e-5
        assert abs(a.half_width - r.half_width) < 1e-5

    def test_rigorous_solves_the_quadratic(self):
        q, n, s = 0.2, 50, 2.0
        r = confidence_interval(q, n, s, "rigorous")
        for end in (r.center - r.half_width, r.center + r.half_width):
            assert abs(q - end) == pytest.approx(s * math.sqrt(end * (1 - end) / n), rel=1e-12)

    def test_clipping(self):
        ci = confidence_interval(0.01, 10, 5)
        assert ci.lower == 0.0 and ci.upper <= 1.0

    def test_unknown_method(self):
        with pytest.raises(DomainError):
            confidence_interval(0.5, 10, 1, "bayes")

    @given(
        st.floats(min_value=0, max_value=1),
        st.integers(min_value=100, max_value=10**9),
        st.floats(min_value=0.1, max_value=30),
    )
    def test_rigorous_contains_observed(self, q, n, sigma):
        r = confidence_interval(q, n, sigma, "rigorous")
        assert r.lower - 1e-15 <= q <= r.upper + 1e-15
        assert 0.0 <= r.lower <= r.upper <= 1.0
