"""Mechanism execution rules, hedged prices, and the truthfulness audit.

The allocation-probability oracle recomputes E[min(k, X)]/n with exact
rational arithmetic; hedged price oracles chain the closed forms by hand.
"""
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from riskauctions import (
    PostedPriceMechanism,
    SpecParseError,
    VcgMechanism,
    allocation_probability,
    batch_outcomes,
    batch_revenue,
    exponential,
    gen_regular,
    hedge_limited_price,
    hedge_unlimited_price,
    irregular_example,
    left_triangle,
    make_mechanism,
    parse_mechanism,
    power,
    run_posted_price,
    run_vcg,
    uniform,
)


def binom_pmf_fractions(n, p):
    """Exact Binomial(n, p) pmf for a rational p."""
    p = Fraction(p)
    return [math.comb(n, x) * p**x * (1 - p) ** (n - x) for x in range(n + 1)]


def allocation_oracle(n, k, q_r):
    pmf = binom_pmf_fractions(n, q_r)
    return sum(min(k, x) * w for x, w in enumerate(pmf)) / n


class TestPostedPrice:
    def test_first_accepters_in_index_order(self):
        o = run_posted_price(0.5, 1, [0.3, 0.6, 0.8])
        assert o.winners == (1,)
        assert o.revenue == pytest.approx(0.5)
        np.testing.assert_allclose(o.payments, [0.0, 0.5, 0.0])

    def test_supply_two(self):
        o = run_posted_price(0.5, 2, [0.3, 0.6, 0.8])
        assert o.winners == (1, 2)
        assert o.revenue == pytest.approx(1.0)

    def test_no_sale(self):
        o = run_posted_price(0.9, 3, [0.3, 0.6, 0.8])
        assert o.winners == ()
        assert o.revenue == 0.0

    def test_acceptance_at_equality(self):
        o = run_posted_price(0.5, 2, [0.5, 0.4])
        assert o.winners == (0,)

    @given(st.lists(st.floats(0.0, 2.0), min_size=1, max_size=7),
           st.floats(0.0, 2.0), st.integers(1, 7))
    def test_revenue_identity(self, bids, p, k):
        o = run_posted_price(p, k, bids)
        y = sum(1 for b in bids if b >= p)
        assert o.revenue == pytest.approx(p * min(y, k), abs=1e-12)
        assert len(o.winners) == min(y, k)


class TestVcg:
    def test_vickrey(self):
        o = run_vcg(1, 0.0, [0.3, 0.8, 0.5])
        assert o.winners == (1,)
        assert o.payments[1] == pytest.approx(0.5)

    def test_two_units(self):
        o = run_vcg(2, 0.0, [0.9, 0.7, 0.4])
        assert o.winners == (0, 1)
        np.testing.assert_allclose(o.payments, [0.4, 0.4, 0.0])
        assert o.revenue == pytest.approx(0.8)

    def test_reserve_binds(self):
        o = run_vcg(1, 0.6, [0.7, 0.5])
        assert o.winners == (0,)
        assert o.payments[0] == pytest.approx(0.6)

    def test_reserve_excludes(self):
        o = run_vcg(2, 0.6, [0.7, 0.5])
        assert o.winners == (0,)
        assert o.revenue == pytest.approx(0.6)

    def test_ties_break_to_lower_index(self):
        o = run_vcg(1, 0.0, [0.5, 0.5, 0.3])
        assert o.winners == (0,)
        assert o.payments[0] == pytest.approx(0.5)

    def test_missing_competitor_bid_is_zero(self):
        # with one bidder the second-highest bid defaults to 0
        o = run_vcg(1, 0.0, [0.7])
        assert o.winners == (0,)
        assert o.payments[0] == 0.0

    @given(st.lists(st.floats(0.0, 1.0), min_size=1, max_size=6),
           st.integers(1, 8), st.floats(0.0, 0.8))
    def test_supply_beyond_bidders_is_posted_at_reserve(self, bids, extra, r):
        n = len(bids)
        o_vcg = run_vcg(n + extra - 1, r, bids)
        o_posted = run_posted_price(r, n + extra - 1, bids)
        assert o_vcg.winners == o_posted.winners
        np.testing.assert_allclose(o_vcg.payments, o_posted.payments, atol=1e-12)


MECHS = [
    PostedPriceMechanism(0.52, 1),
    PostedPriceMechanism(0.37, 2),
    VcgMechanism(1, 0.0),
    VcgMechanism(1, 0.43),
    VcgMechanism(2, 0.31),
    VcgMechanism(3, 0.5),
]


class TestOutcomeInvariants:
    @given(st.lists(st.floats(0.0, 2.0), min_size=1, max_size=8),
           st.integers(0, len(MECHS) - 1))
    def test_core_invariants(self, bids, mi):
        m = MECHS[mi]
        o = m.run(bids)
        assert len(o.winners) <= m.k
        for i, b in enumerate(bids):
            if i in o.winners:
                assert o.payments[i] <= b + 1e-12
            else:
                assert o.payments[i] == 0.0
        assert o.revenue == pytest.approx(float(np.sum(o.payments)), abs=1e-12)

    def test_batch_matches_single_runs(self):
        rng = np.random.default_rng(3)
        vals = rng.random((64, 4)) * 1.5
        for m in MECHS:
            win, pay = batch_outcomes(m, vals)
            rev = batch_revenue(m, vals)
            for j in range(vals.shape[0]):
                o = m.run(vals[j])
                np.testing.assert_array_equal(win[j], [i in o.winners for i in range(4)])
                np.testing.assert_allclose(pay[j], o.payments, atol=1e-12)
                assert rev[j] == pytest.approx(o.revenue, abs=1e-12)


class TestTruthfulness:
    """No bidder can gain by deviating, and winners pay their threshold bid."""

    @pytest.mark.parametrize("m", MECHS, ids=lambda m: m.label)
    def test_no_profitable_deviation(self, m):
        instances, n, grid = 10_000, 3, 100
        rng = np.random.default_rng(17)
        vals = rng.random((instances, n)) * 1.2
        win, pay = batch_outcomes(m, vals)
        truthful = np.where(win, vals - pay, 0.0)
        devs = np.linspace(0.0, 1.2, grid)
        worst = -np.inf
        for i in range(n):
            b = np.broadcast_to(vals, (grid, instances, n)).copy()
            b[:, :, i] = devs[:, None]
            w, p = batch_outcomes(m, b.reshape(-1, n))
            w_i = w[:, i].reshape(grid, instances)
            p_i = p[:, i].reshape(grid, instances)
            dev_u = np.where(w_i, vals[None, :, i] - p_i, 0.0)
            worst = max(worst, float((dev_u - truthful[None, :, i]).max()))
        assert worst <= 1e-9

    @pytest.mark.parametrize("m", MECHS, ids=lambda m: m.label)
    def test_winners_pay_threshold(self, m):
        rng = np.random.default_rng(23)
        vals = rng.random((200, 3)) * 1.2
        for row in vals:
            o = m.run(row)
            for i in o.winners:
                t = o.payments[i]
                above = row.copy()
                above[i] = t + 1e-6
                assert i in m.run(above).winners
                if t > 1e-6:
                    below = row.copy()
                    below[i] = t - 1e-6
                    assert i not in m.run(below).winners


class TestAllocationProbability:
    def test_edges(self):
        assert allocation_probability(5, 5, 0.37) == 0.37
        assert allocation_probability(3, 7, 0.37) == 0.37
        assert allocation_probability(6, 2, 0.0) == 0.0
        assert allocation_probability(5, 2, 1.0) == pytest.approx(0.4, abs=1e-15)

    def test_two_bidders_one_unit(self):
        assert allocation_probability(2, 1, 0.75) == pytest.approx(15 / 32, abs=1e-15)

    @pytest.mark.parametrize("n,k", [(1, 1), (4, 2), (7, 3), (8, 8), (12, 5)])
    def test_matches_exact_rational_oracle(self, n, k):
        for q_r in (Fraction(1, 4), Fraction(1, 2), Fraction(3, 4), Fraction(19, 20)):
            want = float(allocation_oracle(n, k, q_r))
            got = allocation_probability(n, k, float(q_r))
            assert got == pytest.approx(want, abs=1e-13)

    def test_refuses_huge_n(self):
        with pytest.raises(ValueError):
            allocation_probability(10_001, 5, 0.6)

    def test_input_validation(self):
        with pytest.raises(ValueError):
            allocation_probability(5, 0, 0.5)
        with pytest.raises(ValueError):
            allocation_probability(5, 2, 1.2)


class TestHedgePrices:
    def test_unlimited(self):
        assert hedge_unlimited_price(uniform(0.0, 1.0)) == pytest.approx(0.25, abs=1e-12)
        assert hedge_unlimited_price(exponential(1.0)) == pytest.approx(
            math.exp(-1.0), abs=1e-12)
        assert hedge_unlimited_price(left_triangle(0.01)) == pytest.approx(1.0, abs=1e-9)

    def test_unlimited_requires_regular(self):
        with pytest.raises(ValueError):
            hedge_unlimited_price(irregular_example(0.01))

    def test_limited_uniform_closed_form(self):
        # r = 1/4, q_r = 3/4, q = 15/32, price = 1 - q = 17/32
        assert hedge_limited_price(uniform(0.0, 1.0), 2, 1) == pytest.approx(
            17 / 32, abs=1e-12)
        assert hedge_limited_price(uniform(0.0, 1.0), 3, 1) == pytest.approx(
            0.671875, abs=1e-12)

    def test_limited_exponential_closed_form(self):
        # r = 1/e, q_r = e^(-1/e), q = (1 - (1-q_r)^3)/3, price = -ln(q)
        q_r = math.exp(-math.exp(-1.0))
        want = -math.log((1.0 - (1.0 - q_r) ** 3) / 3.0)
        got = hedge_limited_price(exponential(1.0), 3, 1)
        assert got == pytest.approx(want, abs=1e-12)
        assert got == pytest.approx(1.1282069753061033, abs=1e-12)

    def test_full_supply_reduces_to_unlimited(self):
        assert hedge_limited_price(uniform(0.0, 1.0), 3, 3) == pytest.approx(
            0.25, abs=1e-12)

    @pytest.mark.parametrize(
        "d", [uniform(0.0, 1.0), exponential(1.0), left_triangle(0.01), gen_regular(5)],
        ids=lambda d: d.label)
    @pytest.mark.parametrize("n,k", [(2, 1), (5, 2), (9, 4), (6, 6)])
    def test_pipeline_consistency(self, d, n, k):
        p_star, q_star = d.monopoly_price()
        q_r = float(d.sale_probability(p_star * q_star))
        q = allocation_probability(n, k, q_r)
        assert k / (2 * n) - 1e-12 <= q <= k / n + 1e-12
        assert hedge_limited_price(d, n, k) == pytest.approx(
            float(d.quantile(1.0 - q)), abs=1e-12)

    def test_limited_requires_regular(self):
        with pytest.raises(ValueError):
            hedge_limited_price(irregular_example(0.01), 2, 1)


class TestFactories:
    def test_make_mechanism_kinds(self):
        d = uniform(0.0, 1.0)
        m = make_mechanism("myerson", d=d, k=1)
        assert isinstance(m, VcgMechanism)
        assert (m.k, m.reserve) == pytest.approx((1, 0.5), abs=1e-9)
        m = make_mechanism("opt-single", d=d, u=power(0.5))
        assert (m.k, m.reserve) == pytest.approx((1, 1 / 3), abs=1e-9)
        m = make_mechanism("hedge", d=d, n=2, k=2)
        assert isinstance(m, PostedPriceMechanism)
        assert m.price == pytest.approx(0.25, abs=1e-12)
        m = make_mechanism("hedge", d=d, n=2, k=1)
        assert m.price == pytest.approx(17 / 32, abs=1e-12)

    def test_make_mechanism_error_propagation(self):
        with pytest.raises(ValueError):
            make_mechanism("hedge", d=irregular_example(0.01), n=2, k=2)

    def test_parse_forms(self):
        d = uniform(0.0, 1.0)
        m, implied = parse_mechanism("posted:0.5,2", d)
        assert isinstance(m, PostedPriceMechanism)
        assert (m.price, m.k, implied) == (0.5, 2, None)
        m, implied = parse_mechanism("vcg:2,0.3", d)
        assert (m.k, m.reserve, implied) == (2, 0.3, None)
        m, implied = parse_mechanism("hedge:3,1", d)
        assert implied == 3
        assert m.label == "hedge:3,1"
        assert m.price == pytest.approx(0.671875, abs=1e-12)
        m, implied = parse_mechanism("myerson:2", d)
        assert m.label == "myerson:2"
        assert m.reserve == pytest.approx(0.5, abs=1e-9)
        m, implied = parse_mechanism("opt-single:power:0.5", d)
        assert m.label == "opt-single:power:0.5"
        assert m.reserve == pytest.approx(1 / 3, abs=1e-9)

    @pytest.mark.parametrize("bad", [
        "posted:1", "posted:-1,2", "vcg:0,0", "frob:1", "opt-single:capped:0.1",
        "posted:a,b", "hedge:2",
    ])
    def test_parse_rejections(self, bad):
        with pytest.raises(SpecParseError):
            parse_mechanism(bad, uniform(0.0, 1.0))

    def test_constructor_validation(self):
        with pytest.raises(SpecParseError):
            PostedPriceMechanism(-0.1, 1)
        with pytest.raises(SpecParseError):
            PostedPriceMechanism(0.5, 0)
        with pytest.raises(SpecParseError):
            VcgMechanism(1, -0.2)

    def test_labels(self):
        assert PostedPriceMechanism(0.5, 2).label == "posted:0.5,2"
        assert VcgMechanism(2, 0.3).label == "vcg:2,0.3"
        assert VcgMechanism(2, 0.3, name="myerson:2").label == "myerson:2"
