"""Numerical verification of the guarantees the mechanisms advertise.

Each check computes the two sides of one claimed inequality, as exactly as
the instance allows, and returns a LemmaReport whose margin quantifies how
much room the bound had.  Exact checks carry tiny float tolerances; Monte
Carlo checks fold a four-halfwidth confidence allowance into the pass rule.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distributions import (Distribution, RevenueCurveDistribution, exponential,
                            left_triangle, uniform)
from .evaluation import (_chunk_rng, _chunks, _quad, _split_points,
                         check_virtual_utility_identity, eval_posted_exact,
                         eval_second_price_exact, eval_vcg_exact, myerson_revenue)
from .mechanisms import VcgMechanism, allocation_probability, batch_outcomes, \
    hedge_limited_price, hedge_unlimited_price
from .numerics import binom_pmf, order_stat_cdf, order_stat_pdf_coef
from .report import LemmaReport, report_from_margin
from .utilities import (capped, check_virtual_utility_monotone, default_family,
                        linear, optimal_reserve, power)

__all__ = [
    "MHR_BOUND",
    "gen_regular",
    "check_half_bound",
    "check_half_bound_sweep",
    "check_mhr_bound",
    "check_capped_binomial",
    "check_capped_binomial_grid",
    "check_allocation_bound",
    "expected_order_stat_price",
    "check_tail",
    "check_vcg_discount",
    "check_hedge_unlimited",
    "check_hedge_limited",
    "check_vcg_chain",
    "FrontierResult",
    "frontier_search",
    "SELECTIONS",
    "run_selections",
    "default_suite",
]

MHR_BOUND = float(np.exp(-np.exp(-1.0)))  # sale-probability floor for m.h.r. inputs


# -- random regular instances ----------------------------------------------------


def gen_regular(seed: int, breakpoints: int | None = None) -> RevenueCurveDistribution:
    """Random concave piecewise-linear revenue curve through the origin.

    Positive segment lengths and strictly decreasing slopes guarantee
    concavity; any trailing negative-slope run is rescaled so the curve ends
    nonnegative.  Deterministic in (seed, breakpoints).
    """
    rng = np.random.default_rng(seed)
    m = int(rng.integers(2, 65)) if breakpoints is None else int(breakpoints)
    if not 2 <= m <= 64:
        raise ValueError("breakpoints must lie in [2, 64]")
    lengths = rng.uniform(0.2, 1.0, m)
    lengths /= lengths.sum()
    slopes = rng.uniform(0.5, 3.0) - np.concatenate(
        [[0.0], np.cumsum(rng.uniform(0.05, 1.0, m - 1))])
    neg = slopes < 0
    gain = float(np.sum(slopes[~neg] * lengths[~neg]))
    loss = float(-np.sum(slopes[neg] * lengths[neg]))
    if loss > 0.0:
        slopes[neg] *= rng.uniform(0.05, 0.95) * gain / loss
    qs = np.concatenate([[0.0], np.cumsum(lengths)])
    qs[-1] = 1.0
    rs = np.concatenate([[0.0], np.cumsum(slopes * lengths)])
    rs /= rs.max()
    return RevenueCurveDistribution(
        list(zip(qs, rs)), kind="revenue_curve",
        label=f"gen-regular:seed={seed},breakpoints={m}")


# -- sale-probability floors at the hedged price ----------------------------------


def check_half_bound(d: Distribution) -> LemmaReport:
    """A regular distribution sells at the hedged price at least half the time."""
    if not d.is_regular():
        raise ValueError("the half bound applies to regular distributions")
    p_star, q_star = d.monopoly_price()
    s = float(d.sale_probability(p_star * q_star))
    return report_from_margin(f"half-bound[{d.label}]", 0.5, s, 1e-9, 1, d.label)


def check_half_bound_sweep(count: int = 200, seed: int = 0) -> LemmaReport:
    worst = None
    observed = np.inf
    for i in range(count):
        r = check_half_bound(gen_regular(seed + i))
        if r.observed < observed:
            observed, worst = r.observed, r.worst_instance
    return report_from_margin(f"half-bound[gen-regular x{count}]", 0.5,
                              float(observed), 1e-9, count, worst or "")


def check_mhr_bound(d: Distribution) -> LemmaReport:
    """With a nondecreasing hazard the floor rises to exp(-1/e) ~ 0.6922."""
    if not d.is_mhr():
        raise ValueError("the stronger bound needs a nondecreasing hazard")
    p_star, q_star = d.monopoly_price()
    s = float(d.sale_probability(p_star * q_star))
    return report_from_margin(f"mhr-bound[{d.label}]", MHR_BOUND, s, 1e-9, 1, d.label)


# -- combinatorial bounds used by the limited-supply analysis ---------------------


def check_capped_binomial(n: int, q: float, k: int) -> LemmaReport:
    """E[min(Y, qn)] >= 0.25*qn for Y ~ Binomial(n, q) whenever qn >= k/2."""
    if k < 1 or n < 1:
        raise ValueError("need integer n >= 1 and k >= 1")
    if not 0.0 <= q <= 1.0:
        raise ValueError("q must be a probability")
    if q * n < 0.5 * k:
        raise ValueError("precondition qn >= 0.5k violated")
    qn = q * n
    e = float(np.sum(np.minimum(np.arange(n + 1), qn) * binom_pmf(n, q)))
    return report_from_margin(f"capped-binomial[n={n},q={q:g},k={k}]",
                              0.25 * qn, e, 1e-12, 1, f"n={n},q={q:g},k={k}")


def check_capped_binomial_grid(n_max: int = 60, q_step: float = 0.01) -> LemmaReport:
    """Exhaustive sweep of the capped-binomial bound; margin is the worst
    absolute slack E[min(Y, qn)] - 0.25*qn over the admissible grid."""
    steps = round(1.0 / q_step)
    worst_margin = np.inf
    worst = ""
    instances = 0
    for n in range(1, n_max + 1):
        y = np.arange(n + 1)
        for j in range(1, steps + 1):
            q = j / steps
            qn = q * n
            k_max = min(n, int(np.floor(2.0 * qn + 1e-9)))
            if k_max < 1:
                continue
            e = float(np.sum(np.minimum(y, qn) * binom_pmf(n, q)))
            margin = e - 0.25 * qn
            instances += k_max
            if margin < worst_margin:
                worst_margin = margin
                worst = f"n={n},q={q:g}: E={e:.9g} vs {0.25 * qn:.9g}"
    return LemmaReport(name=f"capped-binomial[grid n<={n_max}]",
                       passed=bool(worst_margin >= -1e-12), claimed_bound=0.0,
                       observed=float(worst_margin), margin=float(worst_margin),
                       tolerance=1e-12, instances_checked=instances,
                       worst_instance=worst)


def check_allocation_bound(n_max: int = 60) -> LemmaReport:
    """allocation_probability(n, k, q_r) must land in [k/2n, k/n] whenever
    q_r >= 1/2; margin is the worst distance to either edge of the bracket."""
    worst_margin = np.inf
    worst = ""
    instances = 0
    for n in range(1, n_max + 1):
        for j in range(10, 21):
            q_r = j / 20
            for k in range(1, n + 1):
                a = allocation_probability(n, k, q_r)
                margin = min(a - k / (2 * n), k / n - a)
                instances += 1
                if margin < worst_margin:
                    worst_margin = margin
                    worst = f"n={n},k={k},q_r={q_r:g}: a={a:.9g}"
    return LemmaReport(name=f"allocation-bound[grid n<={n_max}]",
                       passed=bool(worst_margin >= -1e-12), claimed_bound=0.0,
                       observed=float(worst_margin), margin=float(worst_margin),
                       tolerance=1e-12, instances_checked=instances,
                       worst_instance=worst)


# -- the order-statistic tail bound ------------------------------------------------


def expected_order_stat_price(d: Distribution, t: int, n: int) -> float:
    """E of price(Q) where Q is the t-th lowest of n uniform quantiles, i.e.
    the expected t-th highest of n i.i.d. bids."""
    if t <= 1:
        raise ValueError("need t > 1 (the top order statistic may lack a mean)")
    if t > n:
        raise ValueError("need t <= n")
    coef = order_stat_pdf_coef(t, n)

    def integrand(q):
        return coef * q ** (t - 1) * (1.0 - q) ** (n - t) * float(d.price(q))

    return _quad(integrand, 0.0, 1.0, _split_points(d, linear(), 0.0))


def check_tail(d: Distribution, t: int, n: int) -> LemmaReport:
    """The t-th highest bid exceeds its own mean with probability >= 1/4,
    for regular distributions and 1 < t <= n."""
    if not d.is_regular():
        raise ValueError("the tail bound applies to regular distributions")
    ey = expected_order_stat_price(d, t, n)
    z = float(d.sale_probability(ey))
    observed = float(order_stat_cdf(t, n, z))
    return report_from_margin(f"tail[{d.label}|t={t},n={n}]", 0.25, observed,
                              1e-6, 1, f"E[Y]={ey:.9g}, q={z:.9g}")


# -- revenue and utility guarantees of the hedged mechanisms -----------------------


def check_vcg_discount(d: Distribution, n: int, k: int, samples: int = 1_000_000,
                       seed: int = 0) -> LemmaReport:
    """Dropping the reserve from the monopoly price to the hedged price costs
    at most half the expected revenue.  Shared-sample Monte Carlo; the paired
    difference must clear zero within four halfwidths."""
    if not 1 <= k <= n:
        raise ValueError("need 1 <= k <= n")
    if not d.is_regular():
        raise ValueError("the discount bound applies to regular distributions")
    p_star, q_star = d.monopoly_price()
    m_hedged = VcgMechanism(k, p_star * q_star)
    m_monopoly = VcgMechanism(k, p_star)
    s = s2 = 0.0
    s_lhs = s_rhs = 0.0
    count = 0
    for idx, size in _chunks(samples):
        bids = d.draw(_chunk_rng(seed, idx), (size, n))
        rev1 = batch_outcomes(m_hedged, bids)[1].sum(axis=1)
        rev2 = batch_outcomes(m_monopoly, bids)[1].sum(axis=1)
        diff = rev1 - 0.5 * rev2
        s += float(diff.sum())
        s2 += float((diff * diff).sum())
        s_lhs += float(rev1.sum())
        s_rhs += float(rev2.sum())
        count += size
    mean = s / count
    var = max((s2 - count * mean * mean) / (count - 1), 0.0)
    ci = 1.96 * float(np.sqrt(var / count))
    return report_from_margin(
        f"vcg-discount[{d.label}|n={n},k={k}]", 0.0, mean, 4.0 * ci + 1e-12,
        count, f"hedged={s_lhs / count:.9g} monopoly={s_rhs / count:.9g}")


def check_hedge_unlimited(d: Distribution, n: int, fam, seed: int = 0) -> LemmaReport:
    """Unlimited supply: the hedged posted price earns at least half the
    benchmark utility for every concave utility at once, exactly evaluated.
    Nondecreasing-hazard inputs are held to the stronger exp(-1/e) floor."""
    price = hedge_unlimited_price(d)
    bench_rev = n * price  # n times the maximal single-bidder revenue
    claimed = MHR_BOUND if d.is_mhr() else 0.5
    worst_ratio = np.inf
    worst = ""
    members = list(fam)
    for u in members:
        val = eval_posted_exact(d, price, n, n, u).mean_utility
        ratio = val / float(u(bench_rev))
        if ratio < worst_ratio:
            worst_ratio, worst = ratio, u.label
    return report_from_margin(f"hedge-unlimited[{d.label}|n={n}]", claimed,
                              float(worst_ratio), 1e-9, len(members), worst)


def check_hedge_limited(d: Distribution, n: int, k: int, fam, seed: int = 0,
                        samples: int = 1_000_000) -> LemmaReport:
    """Limited supply: the supply-aware hedged price is a 1/8 approximation
    of the benchmark for the whole family.  The mechanism side is exact; when
    the benchmark revenue is Monte Carlo, the pass rule deflates it by four
    halfwidths before applying the utility."""
    if not 1 <= k < n:
        raise ValueError("need 1 <= k < n")
    price = hedge_limited_price(d, n, k)
    rev, ci = myerson_revenue(d, n, k, seed, samples)
    rev_lo = max(rev - 4.0 * ci, 0.0)
    worst_ratio = np.inf
    worst_margin = np.inf
    worst = ""
    members = list(fam)
    for u in members:
        val = eval_posted_exact(d, price, n, k, u).mean_utility
        ratio = val / float(u(rev))
        denom_lo = float(u(rev_lo))
        margin = (val / denom_lo - 0.125) if denom_lo > 0 else np.inf
        if ratio < worst_ratio:
            worst_ratio = ratio
        if margin < worst_margin:
            worst_margin, worst = margin, u.label
    return LemmaReport(name=f"hedge-limited[{d.label}|n={n},k={k}]",
                       passed=bool(worst_margin >= -1e-12), claimed_bound=0.125,
                       observed=float(worst_ratio), margin=float(worst_margin),
                       tolerance=1e-12, instances_checked=len(members),
                       worst_instance=worst)


def check_vcg_chain(d: Distribution, n: int, k: int, fam, seed: int = 0,
                    samples: int = 1_000_000) -> LemmaReport:
    """The chain behind the reserve-free VCG guarantees, as normalized slacks:

    for k = 1, its utility is at least (1 - 1/n) times the utility-optimal
    auction's, exactly, for each smooth family member; for any k < n its
    expected utility is at least a quarter of the utility of its expected
    revenue; and that expected revenue covers the benchmark with k fewer
    bidders (exactly when available, otherwise with a four-halfwidth
    allowance).  The report aggregates the worst slack.
    """
    if not 1 <= k < n:
        raise ValueError("need 1 <= k < n")
    items: list[tuple[float, str]] = []
    members = list(fam)
    if k == 1:
        for u in members:
            if not u.is_smooth:
                continue
            vick = eval_vcg_exact(d, n, 1, u).mean_utility
            opt = eval_second_price_exact(d, optimal_reserve(d, u), n, u).mean_utility
            items.append((vick / opt - (1.0 - 1.0 / n),
                          f"vickrey-vs-optimal[{u.label}]"))
    rev_vcg = k * expected_order_stat_price(d, k + 1, n)
    for u in members:
        lhs = eval_vcg_exact(d, n, k, u).mean_utility
        items.append((lhs / float(u(rev_vcg)) - 0.25,
                      f"utility-of-revenue[{u.label}]"))
    rev_fewer, ci = myerson_revenue(d, n - k, k, seed, samples)
    rev_lo = max(rev_fewer - 4.0 * ci, 0.0)
    if rev_lo > 0:
        items.append((rev_vcg / rev_lo - 1.0, "bidder-augmentation"))
    margins = np.array([m for m, _ in items])
    worst = int(np.argmin(margins))
    return LemmaReport(name=f"vcg-chain[{d.label}|n={n},k={k}]",
                       passed=bool(margins[worst] >= -1e-9), claimed_bound=0.0,
                       observed=float(margins[worst]), margin=float(margins[worst]),
                       tolerance=1e-9, instances_checked=len(items),
                       worst_instance=items[worst][1])


# -- the single-bidder price frontier ----------------------------------------------


@dataclass(frozen=True)
class FrontierResult:
    best_price: float
    best_min_ratio: float
    prices: np.ndarray
    sale_probs: np.ndarray
    ratios: np.ndarray  # shape (len(utilities), len(prices))
    utility_labels: tuple[str, ...]


def frontier_search(d: Distribution, fam, grid: int = 1000) -> FrontierResult:
    """Sweep quantile-spaced posted prices for one bidder and one item, and
    rank them by their worst utility ratio against the benchmark u(max
    revenue).  The quantiles 1/2 and the hedged price's sale probability are
    forced onto the grid so the hedged guarantee is visible at any size."""
    if grid < 1:
        raise ValueError("grid must be positive")
    p_star, q_star = d.monopoly_price()
    bench_rev = p_star * q_star
    qs = np.unique(np.concatenate([
        np.linspace(1.0 / grid, 1.0, grid),
        [0.5, float(d.sale_probability(bench_rev))],
    ]))
    prices = np.unique(np.asarray(d.price(qs), dtype=float))
    sale = np.asarray(d.sale_probability(prices), dtype=float)
    members = list(fam)
    ratios = np.vstack([
        np.asarray(u(prices), dtype=float) * sale / float(u(bench_rev))
        for u in members])
    min_ratio = ratios.min(axis=0)
    best = int(np.argmax(min_ratio))
    return FrontierResult(best_price=float(prices[best]),
                          best_min_ratio=float(min_ratio[best]),
                          prices=prices, sale_probs=sale, ratios=ratios,
                          utility_labels=tuple(u.label for u in members))


# -- the curated suite behind `lemmas` ----------------------------------------------


def _builtin_regulars() -> tuple[Distribution, ...]:
    return uniform(0.0, 1.0), exponential(1.0), left_triangle(0.01)


def _sel_monotone(d, seed, samples):
    dists = (d,) if d is not None else _builtin_regulars()
    fam = (linear(), power(0.5), capped(0.01))
    return [check_virtual_utility_monotone(x, u) for x in dists for u in fam]


def _sel_half_bound(d, seed, samples):
    if d is not None:
        return [check_half_bound(d)]
    reps = [check_half_bound(x) for x in _builtin_regulars()]
    reps.append(check_half_bound_sweep(200, seed))
    return reps


def _sel_mhr_bound(d, seed, samples):
    dists = (d,) if d is not None else (uniform(0.0, 1.0), exponential(1.0),
                                        exponential(2.0))
    return [check_mhr_bound(x) for x in dists]


def _sel_capped_binomial(d, seed, samples):
    return [check_capped_binomial_grid()]


def _sel_allocation(d, seed, samples):
    return [check_allocation_bound()]


def _sel_tail(d, seed, samples):
    if d is not None:
        return [check_tail(d, t, n) for t, n in ((2, 2), (2, 5), (5, 10))]
    cases = [(uniform(0.0, 1.0), 2, 2), (uniform(0.0, 1.0), 3, 5),
             (uniform(0.0, 1.0), 5, 10), (exponential(1.0), 3, 6),
             (left_triangle(1e-4), 2, 2)]
    return [check_tail(x, t, n) for x, t, n in cases]


def _sel_discount(d, seed, samples):
    if d is not None:
        return [check_vcg_discount(d, 3, 1, samples, seed)]
    return [check_vcg_discount(uniform(0.0, 1.0), 3, 1, samples, seed),
            check_vcg_discount(uniform(0.0, 1.0), 2, 2, samples, seed),
            check_vcg_discount(exponential(1.0), 5, 2, samples, seed)]


def _sel_hedge_unlimited(d, seed, samples):
    fam = default_family()
    if d is not None:
        return [check_hedge_unlimited(d, 5, fam, seed)]
    return [check_hedge_unlimited(uniform(0.0, 1.0), 5, fam, seed),
            check_hedge_unlimited(exponential(1.0), 5, fam, seed),
            check_hedge_unlimited(left_triangle(0.001), 1,
                                  (linear(), capped(1e-5)), seed)]


def _sel_hedge_limited(d, seed, samples):
    fam = default_family()
    if d is not None:
        return [check_hedge_limited(d, 5, 2, fam, seed, samples)]
    return [check_hedge_limited(uniform(0.0, 1.0), 2, 1, fam, seed, samples),
            check_hedge_limited(uniform(0.0, 1.0), 10, 3, fam, seed, samples),
            check_hedge_limited(exponential(1.0), 8, 2, fam, seed, samples)]


def _sel_chain(d, seed, samples):
    if d is not None:
        return [check_vcg_chain(d, 4, 1, (linear(), power(0.5)), seed, samples)]
    return [check_vcg_chain(uniform(0.0, 1.0), 2, 1, (linear(), power(0.5)),
                            seed, samples),
            check_vcg_chain(uniform(0.0, 1.0), 6, 2, default_family(), seed, samples)]


def _sel_identity(d, seed, samples):
    x = d if d is not None else uniform(0.0, 1.0)
    m = VcgMechanism(1, x.monopoly_price()[0])
    return [check_virtual_utility_identity(x, m, u, 2, samples, seed)
            for u in (linear(), power(0.5))]


SELECTIONS = {
    "virtual-utility-monotone": _sel_monotone,
    "half-bound": _sel_half_bound,
    "mhr-bound": _sel_mhr_bound,
    "capped-binomial": _sel_capped_binomial,
    "allocation-bound": _sel_allocation,
    "tail": _sel_tail,
    "vcg-discount": _sel_discount,
    "hedge-unlimited": _sel_hedge_unlimited,
    "hedge-limited": _sel_hedge_limited,
    "vcg-chain": _sel_chain,
    "virtual-utility-identity": _sel_identity,
}


def run_selections(names, d: Distribution | None = None, seed: int = 42,
                   samples: int = 1_000_000) -> list[LemmaReport]:
    """Run named checks (or the whole suite for ``all``) in a fixed order."""
    wanted = list(names) or ["all"]
    if "all" in wanted:
        wanted = list(SELECTIONS)
    reports: list[LemmaReport] = []
    for name in wanted:
        if name not in SELECTIONS:
            raise KeyError(f"unknown check selection: {name!r}")
        reports.extend(SELECTIONS[name](d, seed, samples))
    return reports


def default_suite(seed: int = 42, samples: int = 1_000_000) -> list[LemmaReport]:
    return run_selections(["all"], None, seed, samples)
