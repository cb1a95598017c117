"""Plackett-Luce primitives: parameter space, sampling, exact likelihoods.

Utilities live on a zero-sum, box-bounded feasible set (the model is
invariant under shifting all utilities, so the centering pins a unique
representative; the box bounds the dynamic range).  Rankings are drawn by
the exponential-race construction: each item gets an independent
exponential draw with rate ``exp(utility)`` and items are sorted by
ascending draw.
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

ZERO_SUM_TOL = 1e-9
BOX_SLACK = 1e-12

_PROJECTION_TOL = 1e-12
_PROJECTION_ROUNDS = 100


@dataclass(frozen=True, eq=False)
class Offering:
    """The set of alternatives shown to one agent, in a fixed id order."""

    items: tuple

    def __post_init__(self):
        items = tuple(self.items)
        if len(items) < 2:
            raise ValidationError("an offering needs at least 2 items")
        if len(set(items)) != len(items):
            raise ValidationError("offering items must be distinct")
        object.__setattr__(self, "items", items)

    @property
    def kappa(self) -> int:
        return len(self.items)


@dataclass(frozen=True, eq=False)
class Ranking:
    """A total order over an offering; ``order[0]`` is the most preferred."""

    offering: Offering
    order: tuple

    def __post_init__(self):
        order = tuple(self.order)
        if len(order) != self.offering.kappa or set(order) != set(self.offering.items):
            raise ValidationError("order must be a permutation of the offering")
        object.__setattr__(self, "order", order)

    @property
    def kappa(self) -> int:
        return self.offering.kappa

    def position(self, item) -> int:
        """1-based rank of ``item`` (1 = best)."""
        try:
            return self.order.index(item) + 1
        except ValueError:
            raise ValidationError(f"item {item!r} not in ranking") from None


@dataclass(frozen=True, eq=False)
class UtilityVector:
    """Item utilities on the zero-sum box: sum = 0, every |value| <= b."""

    values: np.ndarray
    b: float
    items: tuple = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or values.size == 0:
            raise ValidationError("utilities must form a nonempty 1-d vector")
        if not self.b > 0:
            raise ValidationError("dynamic-range bound b must be positive")
        items = self.items
        if items is None:
            items = tuple(range(values.size))
        else:
            items = tuple(items)
            if len(items) != values.size:
                raise ValidationError("items and values must have equal length")
            if len(set(items)) != len(items):
                raise ValidationError("item ids must be distinct")
        if abs(float(values.sum())) > ZERO_SUM_TOL:
            raise ValidationError("utilities must sum to zero (within 1e-9)")
        if float(np.max(np.abs(values))) > self.b + BOX_SLACK:
            raise ValidationError(f"utilities must lie within [-b, b], b={self.b}")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "items", items)
        object.__setattr__(self, "_index", {item: k for k, item in enumerate(items)})

    @property
    def d(self) -> int:
        return self.values.size

    def utility(self, item) -> float:
        try:
            return float(self.values[self._index[item]])
        except KeyError:
            raise ValidationError(f"item {item!r} has no utility") from None

    def as_dict(self) -> dict:
        return {item: float(v) for item, v in zip(self.items, self.values)}


def _as_lookup(theta):
    """Coerce a UtilityVector or mapping into an item -> utility callable."""
    if isinstance(theta, UtilityVector):
        return theta.utility
    if isinstance(theta, Mapping):
        def lookup(item):
            try:
                return float(theta[item])
            except KeyError:
                raise ValidationError(f"item {item!r} has no utility") from None
        return lookup
    raise ValidationError("utilities must be a UtilityVector or a mapping")


def alternating_projection(raw: np.ndarray, b: float, labels: np.ndarray = None,
                           tol: float = _PROJECTION_TOL,
                           max_rounds: int = _PROJECTION_ROUNDS) -> np.ndarray:
    """Alternate mean-subtraction and box-clamping to a feasible point.

    ``labels`` optionally assigns each coordinate to a group; centering is
    then per group (used when a fit decomposes into connected components).
    This finds some feasible point, not the nearest one.
    """
    x = np.asarray(raw, dtype=float).copy()
    if labels is None:
        labels = np.zeros(x.size, dtype=int)
    counts = np.bincount(labels).astype(float)
    for _ in range(max_rounds):
        prev = x.copy()
        x -= (np.bincount(labels, weights=x) / counts)[labels]
        np.clip(x, -b, b, out=x)
        if float(np.max(np.abs(x - prev))) < tol:
            break
    # final centering pass: exact zero sums at the cost of <= tol box slack
    x -= (np.bincount(labels, weights=x) / counts)[labels]
    return x


def _clip_shift(x: np.ndarray, b: float) -> float:
    """Shift mu with sum(clip(x - mu, -b, b)) = 0, solved exactly.

    The sum is a decreasing piecewise-linear function of mu with
    breakpoints at x_i -+ b; evaluate it at every breakpoint via prefix
    sums and interpolate on the crossing segment.
    """
    xs = np.sort(x)
    d = xs.size
    prefix = np.concatenate([[0.0], np.cumsum(xs)])
    breaks = np.concatenate([xs - b, xs + b])
    breaks.sort(kind="stable")
    n_low = np.searchsorted(xs + b, breaks, side="right")
    n_high = d - np.searchsorted(xs - b, breaks, side="left")
    interior = d - n_high - n_low
    interior_sum = prefix[d - n_high] - prefix[n_low]
    sums = b * n_high - b * n_low + interior_sum - breaks * interior
    k = int(np.searchsorted(-sums, 0.0, side="left"))
    if k == 0:
        return float(breaks[0])
    if k == breaks.size:
        return float(breaks[-1])
    s_lo, s_hi = sums[k - 1], sums[k]
    if s_lo == s_hi:
        return float(breaks[k - 1])
    frac = s_lo / (s_lo - s_hi)
    return float(breaks[k - 1] + frac * (breaks[k] - breaks[k - 1]))


def box_hyperplane_projection(raw: np.ndarray, b: float, labels: np.ndarray = None,
                              n_groups: int = None) -> np.ndarray:
    """Euclidean projection onto the zero-sum box: clip(x - mu, -b, b).

    The shift mu makes each group's sum zero.  Unlike the alternating
    feasibility map, this is the nearest-point projection, so projected
    gradient steps cannot stall at non-stationary feasible points.
    """
    x = np.asarray(raw, dtype=float)
    if labels is None or n_groups == 1:
        out = np.clip(x - _clip_shift(x, b), -b, b)
        out -= out.mean()
        return np.clip(out, -b, b)
    out = np.empty_like(x, dtype=float)
    for g in range(n_groups):
        members = labels == g
        part = np.clip(x[members] - _clip_shift(x[members], b), -b, b)
        part -= part.mean()
        out[members] = np.clip(part, -b, b)
    return out


def project_feasible(raw, b: float, items=None) -> UtilityVector:
    """Project raw utilities onto the zero-sum box by alternating center/clamp."""
    arr = np.asarray(raw, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ValidationError("raw utilities must form a nonempty 1-d vector")
    if not b > 0:
        raise ValidationError("dynamic-range bound b must be positive")
    return UtilityVector(values=alternating_projection(arr, b), b=b, items=items)


def _ordered_values(theta, order) -> np.ndarray:
    lookup = _as_lookup(theta)
    return np.array([lookup(item) for item in order], dtype=float)


def _suffix_logsumexp(values: np.ndarray) -> np.ndarray:
    """lse[k] = log sum_{m >= k} exp(values[m]), computed stably."""
    return np.logaddexp.accumulate(values[::-1])[::-1]


def pl_log_ranking_probability(theta, ranking: Ranking) -> float:
    """Log-probability of a full ranking under sequential choice."""
    vals = _ordered_values(theta, ranking.order)
    lse = _suffix_logsumexp(vals)
    return float(np.sum(vals[:-1] - lse[:-1]))


def pl_ranking_probability(theta, ranking: Ranking) -> float:
    """Probability of observing ``ranking``: the product over rank positions
    of the chosen item's utility share among the items still available."""
    return float(np.exp(pl_log_ranking_probability(theta, ranking)))


def sample_ranking(theta, offering: Offering, rng_seed) -> Ranking:
    """Draw one ranking via the exponential race.

    Each item receives an independent exponential draw with rate
    ``exp(utility)``; sorting the draws ascending yields a ranking with the
    sequential-choice distribution.  Deterministic given the seed.
    """
    rng = np.random.default_rng(rng_seed)
    lookup = _as_lookup(theta)
    vals = np.array([lookup(item) for item in offering.items], dtype=float)
    draws = rng.exponential(size=vals.size) * np.exp(-vals)
    order = tuple(offering.items[k] for k in np.argsort(draws, kind="stable"))
    return Ranking(offering=offering, order=order)


def pl_topl_log_likelihood(theta, data) -> float:
    """Log-likelihood of observing the top-``ell`` prefix of each ranking.

    ``data`` is an iterable of ``(ranking, ell)`` pairs with
    ``1 <= ell <= kappa - 1``.  With ``ell = kappa - 1`` the prefix pins the
    whole ranking and the term equals the full log ranking probability.
    """
    total = 0.0
    for ranking, ell in data:
        kappa = ranking.kappa
        if not 1 <= ell <= kappa - 1:
            raise ValidationError(f"ell={ell} out of range for kappa={kappa}")
        vals = _ordered_values(theta, ranking.order)
        lse = _suffix_logsumexp(vals)
        total += float(np.sum(vals[:ell] - lse[:ell]))
    return total
