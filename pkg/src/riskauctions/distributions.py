"""Valuation distributions, viewed through their revenue curves.

A bidder's valuation distribution F is handled in quantile space: selling at
price p reaches the q = Pr[value >= p] highest-value buyers, and the revenue
curve R(q) = q * price(q) (price(q) being the price that sells with
probability q) carries everything the package needs.  Closed-form kinds
(uniform, exponential) implement F directly; curve-defined kinds store a
piecewise-linear R and are evaluated exactly, including the point mass such a
curve places at the top of the support (a linear initial segment through the
origin means a constant price on (0, q1], i.e. an atom of mass q1).

All objects are immutable after construction and safe to share across
threads; sampling takes an explicit seed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .numerics import golden_section_max

__all__ = [
    "SpecParseError",
    "NotDifferentiableError",
    "BidProfile",
    "Distribution",
    "Uniform",
    "Exponential",
    "RevenueCurveDistribution",
    "uniform",
    "exponential",
    "left_triangle",
    "irregular_example",
    "revenue_curve",
    "make_distribution",
]

# Fixed grid sizes / tolerances for the structural checks.
REGULARITY_GRID = 10_000
MHR_GRID = 10_000
MONOPOLY_GRID = 100_000
CONCAVITY_TOL = 1e-9
GOLDEN_REL_TOL = 1e-10


class SpecParseError(ValueError):
    """A textual spec or constructor input does not describe a valid object."""


class NotDifferentiableError(ValueError):
    """A density-based quantity was requested at a kink or atom."""


@dataclass(frozen=True)
class BidProfile:
    """An ordered tuple of bidder valuations (index = bidder identity)."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float)
        if arr.ndim != 1:
            raise ValueError("a bid profile is one-dimensional")
        if not np.all(np.isfinite(arr)) or np.any(arr < 0):
            raise ValueError("bids must be finite and nonnegative")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values)


def _ret(x, scalar):
    return float(x) if scalar else x


class Distribution:
    """Common interface; concrete behavior lives in the subclasses."""

    kind: str = ""

    # -- core queries ------------------------------------------------------

    def cdf(self, v):
        """F(v) = Pr[value <= v], right-continuous; v must be >= 0."""
        raise NotImplementedError

    def sale_probability(self, p):
        """Pr[value >= p]; includes any atom sitting exactly at p."""
        raise NotImplementedError

    def quantile(self, p):
        """Generalized inverse inf{v : F(v) >= p} for p in [0, 1]."""
        raise NotImplementedError

    def price(self, q):
        """Price reaching the q highest-value buyers; equals R(q)/q on (0, 1]."""
        raise NotImplementedError

    def revenue(self, q):
        """R(q) = q * price(q), with R(0) = 0 taken as the limit."""
        q_arr = np.asarray(q, dtype=float)
        if np.any(q_arr < 0) or np.any(q_arr > 1):
            raise ValueError("revenue is defined for q in [0, 1]")
        scalar = np.isscalar(q) or q_arr.ndim == 0
        with np.errstate(invalid="ignore"):
            out = np.where(q_arr > 0, q_arr * self.price(np.maximum(q_arr, 1e-300)), 0.0)
        return _ret(out, scalar)

    def inverse_hazard(self, v):
        """(1 - F(v)) / f(v); finite limits at support edges are honored."""
        raise NotImplementedError

    def hazard(self, v: float) -> float:
        """f(v) / (1 - F(v)) at a point where the density exists."""
        inv = self.inverse_hazard(v)
        if inv <= 0:
            raise ValueError("hazard diverges here")
        return 1.0 / inv

    def virtual_value(self, v):
        """v - (1 - F(v)) / f(v)."""
        return v - self.inverse_hazard(v)

    def cumulative_hazard(self, v: float) -> float:
        """-log(1 - F(v)); undefined once all remaining mass is an atom at v."""
        s = 1.0 - self.cdf(v)
        if s <= 0:
            raise ValueError("cumulative hazard undefined at or above the top of the support")
        return -math.log(s)

    @property
    def support(self) -> tuple[float, float]:
        raise NotImplementedError

    @property
    def top_atom_mass(self) -> float:
        return 0.0

    @property
    def spec_string(self) -> str:
        raise NotImplementedError

    @property
    def label(self) -> str:
        return getattr(self, "_label", None) or self.spec_string

    # -- derived structure -------------------------------------------------

    @cached_property
    def _monopoly(self) -> tuple[float, float]:
        return self._find_monopoly()

    def monopoly_price(self) -> tuple[float, float]:
        """(p_star, q_star): the revenue-maximizing price and its sale probability.

        Ties on a flat-topped curve resolve to the smallest maximizing q.
        """
        return self._monopoly

    def _find_monopoly(self) -> tuple[float, float]:
        # Concave curves are unimodal in q, so a golden-section search is
        # reliable; anything else gets a dense grid plus local refinement.
        if self.is_regular():
            q, _ = golden_section_max(self.revenue, 0.0, 1.0, rel_tol=GOLDEN_REL_TOL)
        else:
            grid = np.linspace(0.0, 1.0, MONOPOLY_GRID + 1)[1:]
            vals = self.revenue(grid)
            i = int(np.argmax(vals))
            lo = grid[max(i - 1, 0)]
            hi = grid[min(i + 1, len(grid) - 1)]
            q, _ = golden_section_max(self.revenue, lo, hi, rel_tol=GOLDEN_REL_TOL)
            if self.revenue(grid[i]) > self.revenue(q):
                q = grid[i]
        return float(self.price(q)), float(q)

    @cached_property
    def _regular(self) -> bool:
        return self._check_regular()

    def is_regular(self) -> bool:
        """True when the revenue curve is concave (nonstrictly, at kinks too)."""
        return self._regular

    def _check_regular(self) -> bool:
        qs = np.linspace(0.0, 1.0, REGULARITY_GRID + 1)
        r = self.revenue(qs)
        second = r[2:] - 2.0 * r[1:-1] + r[:-2]
        return bool(np.all(second <= CONCAVITY_TOL))

    @cached_property
    def _mhr(self) -> bool:
        return self._check_mhr()

    def is_mhr(self) -> bool:
        """True when the hazard rate is nondecreasing where it is defined."""
        return self._mhr

    def _check_mhr(self) -> bool:
        # Quantile-spaced v grid; ascending q means descending v, so the
        # hazard must be nonincreasing along it.
        ps = np.linspace(1e-6, 1.0 - 1e-6, MHR_GRID)
        vs = self.quantile(ps)
        h = 1.0 / self.inverse_hazard(vs)
        tol = CONCAVITY_TOL * np.maximum(1.0, np.abs(h[1:]))
        return bool(np.all(h[1:] >= h[:-1] - tol))

    # -- sampling ----------------------------------------------------------

    def draw(self, rng: np.random.Generator, shape) -> np.ndarray:
        """Inverse-transform draws; rng.random() lands in [0, 1) so this is safe
        even for unbounded supports."""
        return self.quantile(rng.random(shape))

    def sample(self, seed: int, n: int) -> BidProfile:
        """n independent valuations, deterministic for a fixed seed."""
        if n < 0:
            raise ValueError("n must be nonnegative")
        rng = np.random.default_rng(seed)
        return BidProfile(self.draw(rng, n))

    def __repr__(self):
        return f"<{type(self).__name__} {self.label}>"


class Uniform(Distribution):
    kind = "uniform"

    def __init__(self, a: float, b: float):
        if not (0 <= a < b) or not math.isfinite(a) or not math.isfinite(b):
            raise SpecParseError("uniform needs 0 <= a < b, both finite")
        self.a = float(a)
        self.b = float(b)

    @property
    def support(self):
        return (self.a, self.b)

    @property
    def spec_string(self):
        return f"uniform:{self.a:g},{self.b:g}"

    def cdf(self, v):
        v_arr = np.asarray(v, dtype=float)
        if np.any(v_arr < 0):
            raise ValueError("values are nonnegative")
        scalar = np.isscalar(v) or v_arr.ndim == 0
        out = np.clip((v_arr - self.a) / (self.b - self.a), 0.0, 1.0)
        return _ret(out, scalar)

    def sale_probability(self, p):
        p_arr = np.asarray(p, dtype=float)
        scalar = np.isscalar(p) or p_arr.ndim == 0
        out = 1.0 - np.clip((p_arr - self.a) / (self.b - self.a), 0.0, 1.0)
        return _ret(out, scalar)

    def quantile(self, p):
        p_arr = np.asarray(p, dtype=float)
        if np.any(p_arr < 0) or np.any(p_arr > 1):
            raise ValueError("quantile needs p in [0, 1]")
        scalar = np.isscalar(p) or p_arr.ndim == 0
        return _ret(self.a + p_arr * (self.b - self.a), scalar)

    def price(self, q):
        q_arr = np.asarray(q, dtype=float)
        scalar = np.isscalar(q) or q_arr.ndim == 0
        return _ret(self.a + (1.0 - q_arr) * (self.b - self.a), scalar)

    def inverse_hazard(self, v):
        v_arr = np.asarray(v, dtype=float)
        if np.any(v_arr < self.a) or np.any(v_arr > self.b):
            raise ValueError("hazard is defined on the support only")
        scalar = np.isscalar(v) or v_arr.ndim == 0
        return _ret(self.b - v_arr, scalar)

    def _find_monopoly(self):
        # closed form: p(b - p)/(b - a) peaks at b/2, clipped to the support
        p = max(self.b / 2.0, self.a)
        return p, float(self.sale_probability(p))


class Exponential(Distribution):
    kind = "exponential"

    def __init__(self, rate: float):
        if not (rate > 0) or not math.isfinite(rate):
            raise SpecParseError("exponential needs a positive finite rate")
        self.rate = float(rate)

    @property
    def support(self):
        return (0.0, math.inf)

    @property
    def spec_string(self):
        return f"exponential:{self.rate:g}"

    def cdf(self, v):
        v_arr = np.asarray(v, dtype=float)
        if np.any(v_arr < 0):
            raise ValueError("values are nonnegative")
        scalar = np.isscalar(v) or v_arr.ndim == 0
        return _ret(-np.expm1(-self.rate * v_arr), scalar)

    def sale_probability(self, p):
        p_arr = np.asarray(p, dtype=float)
        scalar = np.isscalar(p) or p_arr.ndim == 0
        return _ret(np.exp(-self.rate * np.maximum(p_arr, 0.0)), scalar)

    def quantile(self, p):
        p_arr = np.asarray(p, dtype=float)
        if np.any(p_arr < 0) or np.any(p_arr > 1):
            raise ValueError("quantile needs p in [0, 1]")
        if np.any(p_arr >= 1):
            raise ValueError("p >= 1 has no finite quantile for an unbounded support")
        scalar = np.isscalar(p) or p_arr.ndim == 0
        return _ret(-np.log1p(-p_arr) / self.rate, scalar)

    def price(self, q):
        q_arr = np.asarray(q, dtype=float)
        scalar = np.isscalar(q) or q_arr.ndim == 0
        with np.errstate(divide="ignore"):
            out = -np.log(q_arr) / self.rate
        return _ret(out, scalar)

    def inverse_hazard(self, v):
        v_arr = np.asarray(v, dtype=float)
        if np.any(v_arr < 0):
            raise ValueError("hazard is defined on the support only")
        scalar = np.isscalar(v) or v_arr.ndim == 0
        return _ret(np.full_like(v_arr, 1.0 / self.rate), scalar)

    def cumulative_hazard(self, v):
        if v < 0:
            raise ValueError("values are nonnegative")
        return self.rate * v

    def _find_monopoly(self):
        # closed form: p*exp(-rate*p) peaks at 1/rate with sale probability 1/e
        return 1.0 / self.rate, float(np.exp(-1.0))


class RevenueCurveDistribution(Distribution):
    """Distribution defined by a piecewise-linear revenue curve.

    Within a linear segment R = a + b*q the price is a/q + b, the survival
    at price v inverts to q = a/(v - b), the hazard is 1/(v - b), and the
    slope b is the classical marginal-revenue value of every price in the
    segment.  A segment through the origin has constant price, i.e. an atom.
    """

    def __init__(self, points, kind: str = "revenue_curve", label: str | None = None,
                 concave: bool | None = None):
        pts = [(float(q), float(r)) for q, r in points]
        if pts and pts[0][0] > 0:
            pts.insert(0, (0.0, 0.0))
        qs = np.array([p[0] for p in pts], dtype=float)
        rs = np.array([p[1] for p in pts], dtype=float)
        if len(qs) < 2:
            raise SpecParseError("a revenue curve needs at least two points")
        if qs[0] != 0.0 or rs[0] != 0.0:
            raise SpecParseError("a revenue curve starts at (0, 0)")
        if qs[-1] != 1.0:
            raise SpecParseError("a revenue curve ends at q = 1")
        if np.any(np.diff(qs) <= 0):
            raise SpecParseError("q coordinates must be strictly increasing")
        if np.any(rs < 0) or not np.all(np.isfinite(rs)):
            raise SpecParseError("revenue values must be finite and nonnegative")
        if rs.max() <= 0:
            raise SpecParseError("the revenue curve must be positive somewhere")

        self._qs = qs
        self._rs = rs
        self._slopes = np.diff(rs) / np.diff(qs)
        self._intercepts = rs[:-1] - self._slopes * qs[:-1]
        # Breakpoint prices; entry 0 is the limit price at q -> 0+ (the atom).
        bp = rs[1:] / qs[1:]
        self._prices = np.concatenate(([bp[0]], bp))
        if np.any(np.diff(self._prices) > 1e-12 * np.maximum(1.0, np.abs(self._prices[:-1]))):
            raise SpecParseError("not a valid distribution: price must be nonincreasing in q")
        if concave:
            mid = rs[1:-1]
            chord = rs[:-2] + (rs[2:] - rs[:-2]) * (qs[1:-1] - qs[:-2]) / (qs[2:] - qs[:-2])
            if np.any(mid < chord - 1e-12 * np.maximum(1.0, np.abs(chord))):
                raise SpecParseError("curve flagged concave fails the chord test")

        self.kind = kind
        self._label = label
        # Collinear leading segments extend the constant-price stretch.
        i = 1
        while i + 1 < len(self._prices) and self._prices[i + 1] == self._prices[0]:
            i += 1
        self._atom = float(qs[i])

    @property
    def points(self) -> tuple[tuple[float, float], ...]:
        return tuple(zip(self._qs.tolist(), self._rs.tolist()))

    @property
    def support(self):
        return (float(self._prices[-1]), float(self._prices[0]))

    @property
    def top_atom_mass(self):
        return self._atom

    @property
    def spec_string(self):
        body = ";".join(f"{q:g}:{r:g}" for q, r in zip(self._qs, self._rs))
        return f"revenue-curve:{body}"

    # -- quantile-space primitives ------------------------------------------

    def _segment_of_q(self, q_arr):
        idx = np.searchsorted(self._qs, q_arr, side="left") - 1
        return np.clip(idx, 0, len(self._slopes) - 1)

    def price(self, q):
        q_arr = np.asarray(q, dtype=float)
        scalar = np.isscalar(q) or q_arr.ndim == 0
        idx = self._segment_of_q(q_arr)
        with np.errstate(divide="ignore", invalid="ignore"):
            v = self._intercepts[idx] / q_arr + self._slopes[idx]
        out = np.where(q_arr <= self._qs[1], self._prices[0], v)
        return _ret(out, scalar)

    def revenue(self, q):
        q_arr = np.asarray(q, dtype=float)
        if np.any(q_arr < 0) or np.any(q_arr > 1):
            raise ValueError("revenue is defined for q in [0, 1]")
        scalar = np.isscalar(q) or q_arr.ndim == 0
        return _ret(np.interp(q_arr, self._qs, self._rs), scalar)

    def _q_at_price(self, v_arr, strict: bool):
        """Largest q whose price exceeds (strict) or reaches (non-strict) v."""
        side = "left" if strict else "right"
        j = np.searchsorted(-self._prices, -v_arr, side=side) - 1
        j = np.asarray(j)
        m = len(self._prices) - 1
        out = np.empty(np.shape(v_arr), dtype=float)
        none = j < 0          # v above every price
        allq = j >= m         # v at/below the bottom price
        mid = ~(none | allq)
        out[none] = 0.0
        out[allq] = 1.0
        if np.any(mid):
            jm = j[mid]
            a = self._intercepts[jm]
            b = self._slopes[jm]
            vm = np.asarray(v_arr)[mid]
            with np.errstate(divide="ignore", invalid="ignore"):
                q = a / (vm - b)
            flat = a == 0.0  # constant-price segment: the whole stretch counts
            q = np.where(flat, self._qs[jm + 1], q)
            out[mid] = q
        return out

    def cdf(self, v):
        v_arr = np.asarray(v, dtype=float)
        if np.any(v_arr < 0):
            raise ValueError("values are nonnegative")
        scalar = np.isscalar(v) or v_arr.ndim == 0
        out = 1.0 - self._q_at_price(np.atleast_1d(v_arr), strict=True)
        out = out.reshape(np.shape(v_arr))
        return _ret(out, scalar)

    def sale_probability(self, p):
        p_arr = np.asarray(p, dtype=float)
        scalar = np.isscalar(p) or p_arr.ndim == 0
        out = self._q_at_price(np.atleast_1d(p_arr), strict=False)
        out = out.reshape(np.shape(p_arr))
        return _ret(out, scalar)

    def quantile(self, p):
        p_arr = np.asarray(p, dtype=float)
        if np.any(p_arr < 0) or np.any(p_arr > 1):
            raise ValueError("quantile needs p in [0, 1]")
        scalar = np.isscalar(p) or p_arr.ndim == 0
        q = 1.0 - p_arr
        out = np.where(q <= 0, self._prices[0], self.price(np.maximum(q, 1e-300)))
        return _ret(out, scalar)

    # -- density-based quantities -------------------------------------------

    def _segment_of_price(self, v: float) -> int:
        if not (self.support[0] <= v <= self.support[1]):
            raise ValueError("hazard is defined on the support only")
        if v == self._prices[0]:
            raise NotDifferentiableError("no density at the atom at the top of the support")
        interior = self._prices[1:-1]
        if np.any(v == interior):
            raise NotDifferentiableError("not differentiable at a kink of the revenue curve")
        j = int(np.searchsorted(-self._prices, -v, side="left")) - 1
        j = min(max(j, 0), len(self._slopes) - 1)
        if self._intercepts[j] == 0.0:
            raise NotDifferentiableError("no density inside a constant-price stretch")
        return j

    def inverse_hazard(self, v):
        v_arr = np.asarray(v, dtype=float)
        scalar = np.isscalar(v) or v_arr.ndim == 0
        if scalar:
            j = self._segment_of_price(float(v_arr))
            return float(v_arr) - self._slopes[j]
        j = np.searchsorted(-self._prices, -v_arr, side="left") - 1
        j = np.clip(j, 0, len(self._slopes) - 1)
        return v_arr - self._slopes[j]

    def virtual_value(self, v):
        # Marginal revenue: the slope of the segment the price falls in.
        j = self._segment_of_price(float(v))
        return float(self._slopes[j])

    # -- structure ------------------------------------------------------------

    def _check_regular(self):
        tol = CONCAVITY_TOL * max(1.0, float(np.abs(self._slopes).max()))
        return bool(np.all(np.diff(self._slopes) <= tol))

    def _check_mhr(self):
        qs = np.linspace(1e-6, 1.0 - 1e-6, MHR_GRID)
        v = np.asarray(self.price(qs))
        keep = ~np.isin(v, self._prices)
        idx = self._segment_of_q(qs[keep])
        good = self._intercepts[idx] > 0
        v = v[keep][good]
        h = 1.0 / (v - self._slopes[idx][good])
        # ascending q = descending v: hazard must be nonincreasing here
        tol = CONCAVITY_TOL * np.maximum(1.0, np.abs(h[1:]))
        return bool(np.all(h[1:] <= h[:-1] + tol))

    def _find_monopoly(self):
        # The maximum of a piecewise-linear curve sits on a breakpoint, so
        # this is exact; argmax picks the smallest q on a flat top.
        i = int(np.argmax(self._rs))
        q = float(self._qs[i])
        return float(self._rs[i] / q), q


# -- constructors -------------------------------------------------------------


def uniform(a: float, b: float) -> Uniform:
    return Uniform(a, b)


def exponential(rate: float) -> Exponential:
    return Exponential(rate)


def _check_eps(eps: float) -> float:
    eps = float(eps)
    if not (0 < eps < 0.5):
        raise SpecParseError("eps must lie strictly between 0 and 1/2")
    return eps


def left_triangle(eps: float) -> RevenueCurveDistribution:
    """Triangle revenue curve peaking at (eps, 1): an atom of mass eps at value
    1/eps plus a heavy tail; the canonical worst case for a risk-neutral seller."""
    eps = _check_eps(eps)
    return RevenueCurveDistribution(
        [(0.0, 0.0), (eps, 1.0), (1.0, 0.0)],
        kind="left_triangle",
        label=f"left-triangle:{eps:g}",
    )


def irregular_example(eps: float) -> RevenueCurveDistribution:
    """A non-concave revenue curve whose peak collapses immediately; posted
    prices extract almost nothing from it under any utility."""
    eps = _check_eps(eps)
    if 2 * eps >= 1 - eps:
        raise SpecParseError("eps too large for the irregular example (needs eps < 1/3)")
    return RevenueCurveDistribution(
        [(0.0, 0.0), (eps, 1.0), (2 * eps, eps), (1 - eps, eps), (1.0, 0.0)],
        kind="irregular_example",
        label=f"irregular-example:{eps:g}",
    )


def revenue_curve(points, concave: bool | None = None,
                  label: str | None = None) -> RevenueCurveDistribution:
    return RevenueCurveDistribution(points, kind="revenue_curve", label=label,
                                    concave=concave)


def make_distribution(spec: str) -> Distribution:
    """Parse a textual distribution spec.

    Forms: ``uniform:a,b`` | ``exponential:rate`` | ``left-triangle:eps`` |
    ``irregular-example:eps`` | ``revenue-curve:q1:R1;q2:R2;...``
    """
    spec = spec.strip()
    head, sep, rest = spec.partition(":")
    if not sep:
        raise SpecParseError(f"malformed distribution spec: {spec!r}")
    try:
        if head == "uniform":
            a, b = (float(x) for x in rest.split(","))
            return uniform(a, b)
        if head == "exponential":
            return exponential(float(rest))
        if head == "left-triangle":
            return left_triangle(float(rest))
        if head == "irregular-example":
            return irregular_example(float(rest))
        if head == "revenue-curve":
            pts = []
            for piece in rest.split(";"):
                qs, rs = piece.split(":")
                pts.append((float(qs), float(rs)))
            return revenue_curve(pts)
    except SpecParseError:
        raise
    except (ValueError, TypeError) as exc:
        raise SpecParseError(f"malformed distribution spec: {spec!r} ({exc})") from exc
    raise SpecParseError(f"unknown distribution kind: {head!r}")
