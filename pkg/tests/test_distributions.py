"""Distribution behaviors: closed forms, revenue-curve algebra, sampling.

Oracle formulas are written out independently at the top of each section;
the frozen constants in assertions were produced by those oracles.
"""
import math

import numpy as np
import pytest
import scipy.stats
from hypothesis import given
from hypothesis import strategies as st

from riskauctions import (
    BidProfile,
    NotDifferentiableError,
    SpecParseError,
    exponential,
    gen_regular,
    irregular_example,
    left_triangle,
    make_distribution,
    revenue_curve,
    uniform,
)


# Left-triangle closed forms, derived by hand from the curve through
# (0,0), (eps,1), (1,0): the leading chord is an atom of mass eps at value
# 1/eps; on the continuous part the survival solves q = 1/(1 + (1-eps)v).
def lt_sale(v, eps):
    return 1.0 / (1.0 + (1.0 - eps) * v)


def lt_price(q, eps):
    return (1.0 / q - 1.0) / (1.0 - eps) if q > eps else 1.0 / eps


class TestUniform:
    def test_closed_forms(self):
        d = uniform(0.0, 1.0)
        assert d.cdf(0.5) == pytest.approx(0.5, abs=1e-12)
        assert d.cdf(0.0) == 0.0
        assert d.cdf(1.5) == 1.0
        with pytest.raises(ValueError):
            d.cdf(-0.3)
        assert d.quantile(0.25) == pytest.approx(0.25, abs=1e-12)
        assert d.sale_probability(0.25) == pytest.approx(0.75, abs=1e-12)
        assert d.price(0.4) == pytest.approx(0.6, abs=1e-12)
        assert d.revenue(0.4) == pytest.approx(0.24, abs=1e-12)
        assert d.hazard(0.5) == pytest.approx(2.0, abs=1e-12)
        assert d.inverse_hazard(0.25) == pytest.approx(0.75, abs=1e-12)
        assert d.virtual_value(0.5) == pytest.approx(0.0, abs=1e-12)
        assert d.virtual_value(1.0) == pytest.approx(1.0, abs=1e-12)
        assert d.cumulative_hazard(0.5) == pytest.approx(math.log(2.0), abs=1e-12)
        assert d.support == (0.0, 1.0)
        assert d.top_atom_mass == 0.0

    def test_shifted_interval(self):
        d = uniform(1.0, 3.0)
        assert d.cdf(2.0) == pytest.approx(0.5, abs=1e-12)
        assert d.quantile(0.25) == pytest.approx(1.5, abs=1e-12)
        assert d.virtual_value(2.0) == pytest.approx(1.0, abs=1e-12)
        assert d.monopoly_price() == pytest.approx((1.5, 0.75), abs=1e-9)

    def test_invalid_interval(self):
        with pytest.raises(SpecParseError):
            uniform(2.0, 1.0)
        with pytest.raises(SpecParseError):
            uniform(-1.0, 1.0)


class TestExponential:
    def test_closed_forms(self):
        d = exponential(1.0)
        assert d.cdf(1.0) == pytest.approx(1.0 - math.exp(-1.0), abs=1e-12)
        assert d.quantile(0.5) == pytest.approx(math.log(2.0), abs=1e-12)
        assert d.price(0.25) == pytest.approx(math.log(4.0), abs=1e-12)
        assert d.revenue(0.25) == pytest.approx(0.25 * math.log(4.0), abs=1e-12)
        assert d.hazard(3.7) == pytest.approx(1.0, abs=1e-12)
        assert d.virtual_value(1.0) == pytest.approx(0.0, abs=1e-12)
        assert d.cumulative_hazard(2.5) == pytest.approx(2.5, abs=1e-12)

    def test_rate_scaling(self):
        d = exponential(2.0)
        assert d.quantile(0.5) == pytest.approx(math.log(2.0) / 2.0, abs=1e-12)
        assert d.inverse_hazard(9.0) == pytest.approx(0.5, abs=1e-12)
        assert d.virtual_value(0.5) == pytest.approx(0.0, abs=1e-12)
        assert d.monopoly_price() == pytest.approx((0.5, math.exp(-1.0)), abs=1e-12)

    def test_invalid_rate(self):
        with pytest.raises(SpecParseError):
            exponential(0.0)
        with pytest.raises(SpecParseError):
            exponential(-2.0)


class TestLeftTriangle:
    def test_closed_forms(self):
        eps = 0.01
        d = left_triangle(eps)
        assert d.support == pytest.approx((0.0, 100.0))
        assert d.top_atom_mass == pytest.approx(eps, abs=1e-12)
        assert d.cdf(1.0) == pytest.approx(1.0 - lt_sale(1.0, eps), abs=1e-12)
        assert d.cdf(1.0) == pytest.approx(0.4974874371859297, abs=1e-12)
        assert d.sale_probability(1.0) == pytest.approx(0.5025125628140703, abs=1e-12)
        assert d.quantile(0.5) == pytest.approx(1.0 / 0.99, abs=1e-12)
        assert d.quantile(0.99) == pytest.approx(100.0, rel=1e-9)
        assert d.quantile(0.995) == 100.0
        assert d.price(0.005) == 100.0
        assert d.revenue(eps) == pytest.approx(1.0, abs=1e-12)
        assert d.revenue(0.505) == pytest.approx((1.0 - 0.505) / 0.99, abs=1e-12)

    def test_virtual_value_is_segment_slope(self):
        # the continuous branch of the curve has constant slope -1/(1-eps)
        d = left_triangle(0.01)
        for v in (0.5, 1.0, 40.0):
            assert d.virtual_value(v) == pytest.approx(-1.0 / 0.99, abs=1e-9)

    def test_eps_range(self):
        for bad in (0.0, 0.5, 0.7, -0.1):
            with pytest.raises(SpecParseError):
                left_triangle(bad)


class TestMonopoly:
    def test_builtin_values(self):
        assert uniform(0.0, 1.0).monopoly_price() == (0.5, 0.5)
        assert exponential(1.0).monopoly_price() == (1.0, math.exp(-1.0))
        p, q = left_triangle(0.01).monopoly_price()
        assert (p, q) == pytest.approx((100.0, 0.01), abs=1e-12)
        assert p * q == pytest.approx(1.0, abs=1e-12)

    def test_reserve_clamped_to_support(self):
        # when the unconstrained maximizer b/2 falls below the interval,
        # everyone buys at the lowest value
        assert uniform(2.0, 3.0).monopoly_price() == pytest.approx((2.0, 1.0), abs=1e-9)

    def test_scaled_uniform(self):
        assert uniform(0.0, 4.0).monopoly_price() == pytest.approx((2.0, 0.5), abs=1e-9)


class TestShapeFlags:
    def test_regular_and_mhr_table(self):
        cases = [
            (uniform(0.0, 1.0), True, True),
            (exponential(1.0), True, True),
            (left_triangle(0.01), True, False),
            (irregular_example(0.01), False, False),
        ]
        for d, want_regular, want_mhr in cases:
            assert d.is_regular() is want_regular, d.label
            assert d.is_mhr() is want_mhr, d.label

    def test_gen_regular_is_regular(self):
        for seed in (0, 1, 2):
            assert gen_regular(seed).is_regular()


class TestKinks:
    def test_hazard_raises_at_interior_kink(self):
        d = revenue_curve([(0.0, 0.0), (0.2, 0.5), (0.6, 0.8), (1.0, 0.9)])
        kink = 0.35 / 0.6 + 0.75
        for fn in (d.hazard, d.virtual_value, d.inverse_hazard):
            with pytest.raises(NotDifferentiableError):
                fn(kink)
        # just off the kink both one-sided slopes are recovered
        assert d.virtual_value(kink - 1e-6) == pytest.approx(0.25, abs=1e-5)
        assert d.virtual_value(kink + 1e-6) == pytest.approx(0.75, abs=1e-5)

    def test_hazard_raises_at_top_atom(self):
        d = left_triangle(0.01)
        with pytest.raises(NotDifferentiableError):
            d.hazard(100.0)

    def test_outside_support_rejected(self):
        d = left_triangle(0.01)
        with pytest.raises(ValueError):
            d.hazard(101.0)


class TestVectorization:
    @pytest.mark.parametrize(
        "d",
        [uniform(0.0, 1.0), exponential(1.0), left_triangle(0.01), gen_regular(4)],
        ids=lambda d: d.label,
    )
    def test_arrays_match_scalars(self, d):
        qs = np.linspace(0.05, 1.0, 17)
        vs = np.asarray([d.price(float(q)) for q in qs])
        for fn, xs in ((d.price, qs), (d.revenue, qs), (d.quantile, qs - 0.05),
                       (d.cdf, vs), (d.sale_probability, vs)):
            got = fn(xs)
            want = np.asarray([fn(float(x)) for x in xs])
            assert got.shape == xs.shape
            np.testing.assert_allclose(got, want, rtol=0, atol=1e-12)


class TestInvariants:
    @pytest.mark.parametrize(
        "d",
        [uniform(0.0, 1.0), uniform(1.0, 3.0), exponential(1.0),
         exponential(0.5), left_triangle(0.01), gen_regular(7)],
        ids=lambda d: d.label,
    )
    def test_quantile_cdf_round_trip(self, d):
        # stay on the continuous part: atoms make the round trip overshoot
        hi = 1.0 - d.top_atom_mass
        ps = np.linspace(1e-4, hi - 1e-9 if hi < 1.0 else 1.0 - 1e-4, 400)
        vs = d.quantile(ps)
        np.testing.assert_allclose(d.cdf(vs), ps, rtol=0, atol=1e-8)

    @pytest.mark.parametrize(
        "d",
        [uniform(0.0, 1.0), exponential(2.0), left_triangle(0.05),
         irregular_example(0.01), gen_regular(13)],
        ids=lambda d: d.label,
    )
    def test_revenue_equals_q_times_price(self, d):
        qs = np.linspace(1e-4, 1.0, 10_000)
        np.testing.assert_allclose(d.revenue(qs), qs * d.price(qs), rtol=0, atol=1e-8)

    @given(st.floats(0.01, 0.99), st.floats(0.01, 0.99))
    def test_cdf_monotone_on_gen_regular(self, p1, p2):
        d = gen_regular(21)
        lo, hi = sorted((p1, p2))
        assert d.quantile(lo) <= d.quantile(hi) + 1e-12


class TestSampling:
    def test_deterministic_for_fixed_seed(self):
        d = exponential(1.0)
        a = d.sample(11, 1000).values
        b = d.sample(11, 1000).values
        c = d.sample(12, 1000).values
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, c)

    @pytest.mark.parametrize("d", [uniform(0.0, 1.0), exponential(1.0)],
                             ids=lambda d: d.label)
    def test_ks_distance_small(self, d):
        x = d.sample(5, 1_000_000).values
        stat = scipy.stats.kstest(x, d.cdf).statistic
        assert stat <= 0.002

    def test_left_triangle_atom_fraction(self):
        d = left_triangle(0.01)
        x = d.sample(5, 1_000_000).values
        assert abs(np.mean(x == 100.0) - 0.01) <= 0.001
        assert x.max() <= 100.0 and x.min() >= 0.0


class TestRevenueCurveConstruction:
    def test_rejects_bad_points(self):
        with pytest.raises(SpecParseError):
            revenue_curve([(0.0, 0.0), (0.5, -0.1), (1.0, 0.0)])
        with pytest.raises(SpecParseError):
            revenue_curve([(0.0, 0.0), (0.4, 0.5), (0.4, 0.6), (1.0, 0.0)])
        with pytest.raises(SpecParseError):
            revenue_curve([(0.0, 0.5)])

    def test_concave_flag_enforced(self):
        pts = [(0.0, 0.0), (0.2, 1.0), (0.4, 0.2), (1.0, 0.0)]
        with pytest.raises(SpecParseError):
            revenue_curve(pts, concave=True)
        assert not revenue_curve(pts).is_regular()

    def test_irregular_example_eps_cap(self):
        with pytest.raises(SpecParseError):
            irregular_example(0.4)


class TestParsing:
    def test_known_forms(self):
        assert make_distribution("uniform:0,1").label == "uniform:0,1"
        assert make_distribution("exponential:2").label == "exponential:2"
        assert make_distribution("left-triangle:0.01").label == "left-triangle:0.01"
        assert make_distribution("irregular-example:0.01").label == "irregular-example:0.01"
        d = make_distribution("revenue-curve:0:0;0.5:0.8;1:1")
        assert d.cdf(1.0) == 0.0
        assert d.support == pytest.approx((1.0, 1.6))

    @pytest.mark.parametrize("bad", [
        "uniform", "uniform:1", "uniform:2,1", "uniform:a,b",
        "exponential:-1", "left-triangle:0.9", "gauss:1", "revenue-curve:0;1",
    ])
    def test_malformed_specs(self, bad):
        with pytest.raises(SpecParseError):
            make_distribution(bad)

    @pytest.mark.parametrize(
        "d",
        [uniform(0.0, 1.0), exponential(2.0), left_triangle(0.01)],
        ids=lambda d: d.label,
    )
    def test_spec_string_round_trip_exact(self, d):
        again = make_distribution(d.spec_string)
        vs = d.quantile(np.linspace(0.01, 0.95, 40))
        np.testing.assert_allclose(again.cdf(vs), d.cdf(vs), rtol=0, atol=1e-12)

    @pytest.mark.parametrize(
        "d", [irregular_example(0.01), gen_regular(3)], ids=lambda d: d.label,
    )
    def test_spec_string_round_trip_curve(self, d):
        # breakpoints serialize at 6 significant digits, so compare revenue
        # curves (atom discontinuities make pointwise cdf comparison brittle)
        again = make_distribution(d.spec_string)
        qs = np.linspace(0.001, 1.0, 400)
        np.testing.assert_allclose(again.revenue(qs), d.revenue(qs), rtol=0, atol=1e-5)


class TestBidProfile:
    def test_holds_frozen_values(self):
        p = BidProfile([0.3, 0.1, 0.7])
        assert len(p) == 3
        assert list(p) == [0.3, 0.1, 0.7]
        with pytest.raises(ValueError):
            p.values[0] = 1.0

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            BidProfile([[0.1], [0.2]])
        with pytest.raises(ValueError):
            BidProfile([0.5, -0.1])
        with pytest.raises(ValueError):
            BidProfile([0.5, float("nan")])
