"""Sale mechanisms: posted prices and VCG with reserves.

Both mechanisms are truthful: fixing everyone else, a winner pays exactly the
lowest bid at which she would still win.  Posted prices serve bidders in index
order while supply lasts; VCG serves the k highest bids that clear the
reserve, all paying max(reserve, (k+1)-st highest bid).  Ties break toward
the lower index, and a bid exactly at the price or reserve is accepted.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distributions import BidProfile, Distribution, SpecParseError
from .numerics import binom_pmf

__all__ = [
    "MechanismOutcome",
    "PostedPriceMechanism",
    "VcgMechanism",
    "run_posted_price",
    "run_vcg",
    "batch_outcomes",
    "batch_revenue",
    "hedge_unlimited_price",
    "allocation_probability",
    "hedge_limited_price",
    "make_mechanism",
    "parse_mechanism",
]


@dataclass(frozen=True)
class MechanismOutcome:
    winners: tuple[int, ...]
    payments: np.ndarray
    revenue: float


def _as_matrix(bids) -> np.ndarray:
    arr = np.asarray(getattr(bids, "values", bids), dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] < 1:
        raise ValueError("bids must form a nonempty profile")
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise ValueError("bids must be finite and nonnegative")
    return arr


@dataclass(frozen=True)
class PostedPriceMechanism:
    price: float
    k: int
    name: str = ""

    def __post_init__(self):
        if self.price < 0 or self.k < 1:
            raise SpecParseError("posted price needs price >= 0 and k >= 1")

    @property
    def label(self) -> str:
        return self.name or f"posted:{self.price:g},{self.k}"

    def run(self, bids) -> MechanismOutcome:
        return _outcome_from_batch(self, bids)


@dataclass(frozen=True)
class VcgMechanism:
    k: int
    reserve: float = 0.0
    name: str = ""

    def __post_init__(self):
        if self.reserve < 0 or self.k < 1:
            raise SpecParseError("vcg needs reserve >= 0 and k >= 1")

    @property
    def label(self) -> str:
        return self.name or f"vcg:{self.k},{self.reserve:g}"

    def run(self, bids) -> MechanismOutcome:
        return _outcome_from_batch(self, bids)


Mechanism = PostedPriceMechanism | VcgMechanism


def batch_outcomes(m: Mechanism, bids) -> tuple[np.ndarray, np.ndarray]:
    """(win mask, payments), vectorized over rows of profiles."""
    b = _as_matrix(bids)
    rows, n = b.shape
    if isinstance(m, PostedPriceMechanism):
        mask = b >= m.price
        win = mask & (np.cumsum(mask, axis=1) <= m.k)
        pay = np.where(win, m.price, 0.0)
        return win, pay
    # stable sort on descending bids realizes lower-index tie-breaking
    order = np.argsort(-b, axis=1, kind="stable")
    ranks = np.empty_like(order)
    np.put_along_axis(ranks, order, np.broadcast_to(np.arange(n), (rows, n)).copy(), axis=1)
    if m.k < n:
        kth1 = np.take_along_axis(b, order[:, m.k:m.k + 1], axis=1)[:, 0]
    else:
        kth1 = np.zeros(rows)
    unit_price = np.maximum(m.reserve, kth1)
    win = (ranks < m.k) & (b >= m.reserve)
    pay = np.where(win, unit_price[:, None], 0.0)
    return win, pay


def batch_revenue(m: Mechanism, bids) -> np.ndarray:
    _, pay = batch_outcomes(m, bids)
    return pay.sum(axis=1)


def _outcome_from_batch(m: Mechanism, bids) -> MechanismOutcome:
    win, pay = batch_outcomes(m, bids)
    win, pay = win[0], pay[0]
    return MechanismOutcome(winners=tuple(int(i) for i in np.nonzero(win)[0]),
                            payments=pay, revenue=float(pay.sum()))


def run_posted_price(price: float, k: int, bids) -> MechanismOutcome:
    """Offer `price` to bidders in index order while at most k units remain."""
    return PostedPriceMechanism(price, k).run(bids)


def run_vcg(k: int, reserve: float, bids) -> MechanismOutcome:
    """k-unit VCG with a reserve; bidders above the reserve among the top k win."""
    return VcgMechanism(k, reserve).run(bids)


# -- hedged posted prices ------------------------------------------------------


def hedge_unlimited_price(d: Distribution) -> float:
    """Monopoly price discounted by the monopoly sale probability.

    Requires a concave revenue curve; the discount is what converts the
    risk-neutral optimum into a price that sells with probability >= 1/2.
    """
    if not d.is_regular():
        raise ValueError("hedged pricing requires a regular (concave revenue) distribution")
    p_star, q_star = d.monopoly_price()
    return p_star * q_star


def allocation_probability(n: int, k: int, q_r: float) -> float:
    """E[min(k, X)] / n for X ~ Binomial(n, q_r): the chance a given bidder is
    served when everyone above the price is served while k units last."""
    if n < 1 or k < 1:
        raise ValueError("n and k must be positive integers")
    if not 0.0 <= q_r <= 1.0:
        raise ValueError("q_r must lie in [0, 1]")
    if k >= n:
        return q_r
    if q_r == 0.0:
        return 0.0
    if q_r == 1.0:
        return k / n
    y = np.arange(n + 1)
    pmf = binom_pmf(n, q_r)
    return float(np.sum(np.minimum(y, k) * pmf) / n)


def hedge_limited_price(d: Distribution, n: int, k: int) -> float:
    """Supply-aware hedged price: discount the hedged unlimited price down to
    the quantile actually served when only k of n bidders can win."""
    if not 1 <= k <= n:
        raise ValueError("need 1 <= k <= n")
    r = hedge_unlimited_price(d)
    q_r = float(d.sale_probability(r))
    q = allocation_probability(n, k, q_r)
    return float(d.price(q))


# -- construction ---------------------------------------------------------------


def make_mechanism(kind: str, *, d: Distribution | None = None, n: int | None = None,
                   k: int = 1, price: float | None = None, reserve: float | None = None,
                   u=None) -> Mechanism:
    """Build a mechanism; derived kinds (hedge/myerson/opt-single) resolve
    their price or reserve from the distribution."""
    if kind == "posted":
        if price is None:
            raise SpecParseError("posted mechanism needs a price")
        return PostedPriceMechanism(float(price), int(k))
    if kind == "vcg":
        return VcgMechanism(int(k), float(reserve or 0.0))
    if kind == "hedge":
        if d is None or n is None:
            raise SpecParseError("hedge mechanism needs a distribution and n")
        n, k = int(n), int(k)
        p = hedge_unlimited_price(d) if k >= n else hedge_limited_price(d, n, k)
        return PostedPriceMechanism(p, k, name=f"hedge:{n},{k}")
    if kind == "myerson":
        if d is None:
            raise SpecParseError("myerson mechanism needs a distribution")
        return VcgMechanism(int(k), d.monopoly_price()[0], name=f"myerson:{k}")
    if kind == "opt-single":
        if d is None or u is None:
            raise SpecParseError("opt-single mechanism needs a distribution and a utility")
        from .utilities import optimal_reserve
        return VcgMechanism(1, optimal_reserve(d, u), name=f"opt-single:{u.label}")
    raise SpecParseError(f"unknown mechanism kind: {kind!r}")


def parse_mechanism(spec: str, d: Distribution | None = None):
    """Parse ``posted:p,k | vcg:k,r | hedge:n,k | myerson:k | opt-single:<utility>``.

    Returns (mechanism, implied_n) where implied_n is the bidder count a
    hedge spec carries, else None.
    """
    spec = spec.strip()
    head, sep, rest = spec.partition(":")
    if not sep:
        raise SpecParseError(f"malformed mechanism spec: {spec!r}")
    try:
        if head == "posted":
            p, k = rest.split(",")
            return make_mechanism("posted", price=float(p), k=int(k)), None
        if head == "vcg":
            k, r = rest.split(",")
            return make_mechanism("vcg", k=int(k), reserve=float(r)), None
        if head == "hedge":
            n, k = (int(x) for x in rest.split(","))
            return make_mechanism("hedge", d=d, n=n, k=k), n
        if head == "myerson":
            return make_mechanism("myerson", d=d, k=int(rest)), None
        if head == "opt-single":
            from .utilities import parse_utility
            return make_mechanism("opt-single", d=d, u=parse_utility(rest)), None
    except SpecParseError:
        raise
    except (ValueError, TypeError) as exc:
        raise SpecParseError(f"malformed mechanism spec: {spec!r} ({exc})") from exc
    raise SpecParseError(f"unknown mechanism kind: {head!r}")
