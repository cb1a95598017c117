"""Fitting procedures for utilities from broken comparisons.

Four routes share one ascent core:

* consistent rank-breaking (weighted separator pairs, any weight scheme),
* full breaking (every readable pair, unweighted; biased in general),
* the exact top-prefix maximum likelihood,
* a restricted fit over the weakest items only (for bottom-heavy data).

The default optimizer is projected gradient ascent with Armijo backtracking
(halving, first trial step 1.0), restoring feasibility after each step by
Euclidean projection onto the zero-sum box.  Minorization-maximization is
available as an alternative with the identical stopping rule; each MM
iteration keeps whichever of the surrogate step and the gradient step
improves the objective more, so the trace is nondecreasing either way.
Iteration stops when the gradient projected onto the feasible cone has
infinity-norm at most the tolerance, or when no strictly improving step
exists at working precision (the result is then flagged not converged
unless the tolerance was already met).

Items that appear in no comparison are excluded from the fit and reported.
If the retained comparisons split into disconnected groups, each group is
centered separately and the result is flagged.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from sklearn.base import BaseEstimator

from .breaking import PartialOrder, readable_pairs
from .dataset import BrokenDataset, WeightScheme
from .errors import EstimationInfeasibleError, ValidationError
from .model import Offering, Ranking, UtilityVector, box_hyperplane_projection
from .objective import ToplGroups, aggregate_pairs, pairwise_gradient, pairwise_log_likelihood
from .validation import check_partial_orders, check_topl_orders

_MIN_STEP = 1e-14
_ARMIJO = 1e-4


@dataclass(frozen=True)
class FitConfig:
    """Optimizer settings; ``b`` is the utility box half-width."""

    b: float = 10.0
    tolerance: float = 1e-8
    max_iterations: int = 10_000
    method: str = "projected-gradient"

    def __post_init__(self):
        if not self.b > 0:
            raise ValidationError("b must be positive")
        if not self.tolerance > 0:
            raise ValidationError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ValidationError("max_iterations must be at least 1")
        if self.method not in ("projected-gradient", "minorization-maximization"):
            raise ValidationError(f"unknown method {self.method!r}")


@dataclass(frozen=True, eq=False)
class FitResult:
    """Fitted utilities plus convergence and connectivity metadata."""

    utilities: UtilityVector
    iterations: int
    converged: bool
    grad_norm: float
    objective_trace: tuple
    components: tuple
    dropped_items: tuple

    @property
    def connected(self) -> bool:
        return len(self.components) <= 1

    def to_dict(self) -> dict:
        return {
            "utilities": {str(k): v for k, v in self.utilities.as_dict().items()},
            "b": self.utilities.b,
            "iterations": self.iterations,
            "converged": self.converged,
            "grad_norm": self.grad_norm,
            "final_objective": self.objective_trace[-1],
            "connected": self.connected,
            "components": [[str(i) for i in comp] for comp in self.components],
            "dropped_items": [str(i) for i in self.dropped_items],
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def _tangent_projected_gradient(theta, grad, box, labels, n_comp, active_tol=1e-9):
    """Project the gradient onto feasible ascent directions.

    Feasible directions keep each component zero-sum and do not push
    box-active coordinates further out.  The infinity-norm of the result is
    the stationarity measure: it vanishes exactly at constrained optima.
    """
    upper = theta >= box - active_tol
    lower = theta <= -box + active_tol

    if n_comp == 1:
        lo = grad.min() - 1.0
        hi = grad.max() + 1.0
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            d = grad - mid
            d[upper & (d > 0.0)] = 0.0
            d[lower & (d < 0.0)] = 0.0
            if d.sum() <= 0.0:
                hi = mid
            else:
                lo = mid
        d = grad - 0.5 * (lo + hi)
        d[upper & (d > 0.0)] = 0.0
        d[lower & (d < 0.0)] = 0.0
        return d

    lo = np.full(n_comp, grad.min() - 1.0)
    hi = np.full(n_comp, grad.max() + 1.0)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        d = grad - mid[labels]
        d = np.where(upper, np.minimum(d, 0.0), d)
        d = np.where(lower, np.maximum(d, 0.0), d)
        sums = np.bincount(labels, weights=d, minlength=n_comp)
        shrink_hi = sums <= 0
        hi = np.where(shrink_hi, mid, hi)
        lo = np.where(shrink_hi, lo, mid)
    mid = 0.5 * (lo + hi)
    d = grad - mid[labels]
    d = np.where(upper, np.minimum(d, 0.0), d)
    d = np.where(lower, np.maximum(d, 0.0), d)
    return d


def _ascend(value_fn, grad_fn, n_items, box, labels, config, mm_step=None):
    """Monotone ascent to a stationary point of a concave objective."""
    n_comp = int(labels.max()) + 1 if n_items else 0
    theta = np.zeros(n_items)
    value = value_fn(theta)
    trace = [value]
    trial = 1.0
    converged = False
    grad_norm = np.inf
    iterations = 0
    for iterations in range(1, config.max_iterations + 1):
        grad = grad_fn(theta)
        pg = _tangent_projected_gradient(theta, grad, box, labels, n_comp)
        grad_norm = float(np.max(np.abs(pg))) if pg.size else 0.0
        if grad_norm <= config.tolerance:
            converged = True
            iterations -= 1
            break
        mm_cand = mm_value = None
        if mm_step is not None:
            mm_cand = mm_step(theta)
            mm_value = value_fn(mm_cand)
        moved = False
        step = trial
        while step >= _MIN_STEP:
            cand = box_hyperplane_projection(theta + step * grad, box, labels, n_comp)
            cand_value = value_fn(cand)
            gain = float(np.dot(grad, cand - theta))
            if cand_value > value + _ARMIJO * max(gain, 0.0):
                moved = True
                trial = min(step * 2.0, 1e6)
                break
            step *= 0.5
        # the surrogate step often leaps ahead early on but stalls against the
        # box, where the gradient step keeps making progress
        if mm_value is not None and mm_value > value and (not moved or mm_value > cand_value):
            cand, cand_value, moved = mm_cand, mm_value, True
        if not moved:
            break  # no strictly improving step at working precision
        theta, value = cand, cand_value
        trace.append(value)
    return theta, trace, iterations, converged, grad_norm


def _pair_components(n_items, winners, losers):
    adjacency = coo_matrix(
        (np.ones(winners.size), (winners, losers)), shape=(n_items, n_items))
    n_comp, labels = connected_components(adjacency, directed=False)
    return n_comp, labels


def _mm_pairwise_step(winners, losers, weights, box, labels):
    win_mass = np.bincount(winners, weights=weights, minlength=labels.size)
    floor = np.exp(-3.0 * box)

    def step(theta):
        strength = np.exp(theta)
        shared = weights / (strength[winners] + strength[losers])
        denom = np.bincount(winners, weights=shared, minlength=labels.size)
        denom += np.bincount(losers, weights=shared, minlength=labels.size)
        new = np.maximum(win_mass / np.maximum(denom, 1e-300), floor)
        return box_hyperplane_projection(np.log(new), box, labels, int(labels.max()) + 1)

    return step


def fit_pairwise(items, winners, losers, weights, config: FitConfig, box=None) -> FitResult:
    """Maximize the weighted paired log-likelihood over the feasible box.

    ``winners``/``losers`` index into ``items``.  Items without any
    comparison are dropped and reported; disconnected comparison structure
    is fitted per connected component with per-component centering.
    """
    box = config.b if box is None else box
    items = tuple(items)
    winners = np.asarray(winners, dtype=np.int64)
    losers = np.asarray(losers, dtype=np.int64)
    weights = np.asarray(weights, dtype=float)
    keep = weights > 0
    winners, losers, weights = winners[keep], losers[keep], weights[keep]
    if winners.size == 0:
        raise EstimationInfeasibleError("no comparisons available to fit")

    appears = np.zeros(len(items), dtype=bool)
    appears[winners] = True
    appears[losers] = True
    dropped = tuple(item for item, used in zip(items, appears) if not used)
    fitted_items = tuple(item for item, used in zip(items, appears) if used)
    remap = np.cumsum(appears) - 1
    winners, losers, weights = aggregate_pairs(
        remap[winners], remap[losers], weights, len(fitted_items))

    n_comp, labels = _pair_components(len(fitted_items), winners, losers)
    mm = None
    if config.method == "minorization-maximization":
        mm = _mm_pairwise_step(winners, losers, weights, box, labels)
    theta, trace, iterations, converged, grad_norm = _ascend(
        lambda t: pairwise_log_likelihood(t, winners, losers, weights),
        lambda t: pairwise_gradient(t, winners, losers, weights),
        len(fitted_items), box, labels, config, mm_step=mm)

    components = tuple(
        tuple(item for item, lab in zip(fitted_items, labels) if lab == c)
        for c in range(n_comp))
    return FitResult(
        utilities=UtilityVector(values=theta, b=box, items=fitted_items),
        iterations=iterations, converged=converged, grad_norm=grad_norm,
        objective_trace=tuple(trace), components=components, dropped_items=dropped)


def fit_rank_breaking(dataset: BrokenDataset, config: FitConfig = None) -> FitResult:
    """Consistent rank-breaking fit with the dataset's separator weights."""
    config = config or FitConfig()
    winners, losers, weights = dataset.pair_arrays()
    return fit_pairwise(dataset.items, winners, losers, weights, config)


def fit_full_breaking(observations, config: FitConfig = None) -> FitResult:
    """Fit on every readable pairwise relation, all weighted equally.

    On genuinely pairwise data this coincides with rank breaking under
    uniform weights; on richer partial orders it is generally biased and
    its error does not vanish with more samples.
    """
    config = config or FitConfig()
    pairs = []
    item_set = set()
    for obs in observations:
        obs_pairs = readable_pairs(obs)
        pairs.extend(obs_pairs)
        for w, l in obs_pairs:
            item_set.add(w)
            item_set.add(l)
    if not pairs:
        raise EstimationInfeasibleError("no readable pairwise relations in the data")
    items = tuple(sorted(item_set, key=lambda x: (str(type(x)), x)))
    index = {item: k for k, item in enumerate(items)}
    winners = np.array([index[w] for w, _ in pairs], dtype=np.int64)
    losers = np.array([index[l] for _, l in pairs], dtype=np.int64)
    return fit_pairwise(items, winners, losers, np.ones(len(pairs)), config)


def fit_mle_topl(partial_orders, config: FitConfig = None) -> FitResult:
    """Exact top-prefix maximum likelihood over the feasible box.

    Input partial orders must reveal a ranked prefix: separator positions
    (1, 2, ..., ell).  All offered items enter the likelihood, so nothing is
    dropped; connectivity follows co-offering.
    """
    config = config or FitConfig()
    orders = check_topl_orders(partial_orders)
    item_set = {item for po in orders for item in po.offering.items}
    items = tuple(sorted(item_set, key=lambda x: (str(type(x)), x)))
    index = {item: k for k, item in enumerate(items)}

    rows, ells = [], []
    edges_u, edges_v = [], []
    for po in orders:
        ell = po.num_separators
        prefix = list(po.separator_items)
        tail = [item for item in po.blocks[-1]]
        row = [index[item] for item in prefix + tail]
        rows.append(row)
        ells.append(ell)
        edges_u.extend(row[:-1])
        edges_v.extend(row[1:])
    groups = ToplGroups.from_rank_lists(rows, ells, len(items))

    n_comp, labels = _pair_components(
        len(items), np.asarray(edges_u, dtype=np.int64), np.asarray(edges_v, dtype=np.int64))
    mm = _mm_topl_step(groups, config.b, labels) \
        if config.method == "minorization-maximization" else None
    theta, trace, iterations, converged, grad_norm = _ascend(
        groups.log_likelihood, groups.gradient,
        len(items), config.b, labels, config, mm_step=mm)
    components = tuple(
        tuple(item for item, lab in zip(items, labels) if lab == c)
        for c in range(n_comp))
    return FitResult(
        utilities=UtilityVector(values=theta, b=config.b, items=items),
        iterations=iterations, converged=converged, grad_norm=grad_norm,
        objective_trace=tuple(trace), components=components, dropped_items=())


def _mm_topl_step(groups: ToplGroups, box, labels):
    wins = np.zeros(groups.n_items)
    for mat, ells in groups.groups:
        mask = np.arange(mat.shape[1])[None, :] < ells[:, None]
        wins += np.bincount(mat[mask].ravel(), minlength=groups.n_items)
    floor = np.exp(-3.0 * box)

    def step(theta):
        denom = np.zeros(groups.n_items)
        for mat, ells in groups.groups:
            vals = theta[mat]
            lse = groups._suffix_lse(vals)
            mask = np.arange(mat.shape[1])[None, :] < ells[:, None]
            inv_z = np.where(mask, np.exp(-lse), 0.0)
            prefix = np.cumsum(inv_z, axis=1)
            denom += np.bincount(mat.ravel(), weights=prefix.ravel(),
                                 minlength=groups.n_items)
        new = np.maximum(wins / np.maximum(denom, 1e-300), floor)
        return box_hyperplane_projection(np.log(new), box, labels, int(labels.max()) + 1)

    return step


def default_restricted_count(ell: int, kappa: int, d: int) -> int:
    """Default size of the weakest-items restriction: floor(ell * d / (2 kappa))."""
    return int(ell * d // (2 * kappa))


def fit_restricted_bottoml(dataset: BrokenDataset, d_tilde: int, reference_order,
                           config: FitConfig = None) -> FitResult:
    """Fit utilities for the ``d_tilde`` weakest items only.

    ``reference_order`` lists items weakest first (the caller supplies it;
    simulation harnesses pass the ground-truth order).  Only comparisons
    with both endpoints inside the restriction contribute, each with unit
    weight, and the feasible box widens to ``2b`` because restricted
    utilities are re-centered within the subset.
    """
    config = config or FitConfig()
    if d_tilde < 2:
        raise ValidationError("the restriction needs at least 2 items")
    reference = list(reference_order)
    if len(set(reference)) != len(reference):
        raise ValidationError("reference ordering must not repeat items")
    if len(reference) < d_tilde:
        raise ValidationError("reference ordering is shorter than the restriction")
    kept = set(reference[:d_tilde])  # items never observed simply cannot be fitted
    winners, losers, _ = dataset.pair_arrays()
    items = dataset.items
    kept_dense = np.array([items[k] in kept for k in range(dataset.d)])
    mask = kept_dense[winners] & kept_dense[losers]
    if not mask.any():
        raise EstimationInfeasibleError(
            "no comparisons with both endpoints among the restricted items")
    restricted_items = tuple(item for item in items if item in kept)
    remap = np.cumsum(kept_dense) - 1
    return fit_pairwise(
        restricted_items, remap[winners[mask]], remap[losers[mask]],
        np.ones(int(mask.sum())), config, box=2.0 * config.b)


class _FittedRankingMixin:
    """Shared post-fit surface: fitted attributes, predict, score."""

    def _config(self) -> FitConfig:
        return FitConfig(b=self.b, tolerance=self.tol,
                         max_iterations=self.max_iter, method=self.method)

    def _store(self, result: FitResult):
        self.result_ = result
        self.utilities_ = result.utilities.as_dict()
        self.items_ = result.utilities.items
        self.theta_ = result.utilities.values.copy()
        self.n_iter_ = result.iterations
        self.converged_ = result.converged
        self.dropped_items_ = result.dropped_items
        return self

    def _check_fitted(self):
        if not hasattr(self, "result_"):
            raise ValidationError("estimator is not fitted yet; call fit first")

    def predict(self, offerings):
        """Most probable ranking of each offering under the fitted utilities."""
        self._check_fitted()
        rankings = []
        for offering in offerings:
            if isinstance(offering, PartialOrder):
                offering = offering.offering
            if not isinstance(offering, Offering):
                offering = Offering(items=tuple(offering))
            missing = [i for i in offering.items if i not in self.utilities_]
            if missing:
                raise ValidationError(f"no fitted utility for items: {missing}")
            order = tuple(sorted(
                offering.items,
                key=lambda i: (-self.utilities_[i], str(type(i)), i)))
            rankings.append(Ranking(offering=offering, order=order))
        return rankings


class RankBreakingEstimator(BaseEstimator, _FittedRankingMixin):
    """Consistent rank-breaking estimator with configurable separator weights.

    Parameters
    ----------
    scheme : {"optimal", "uniform", "inverse-kappa", "custom"}
        Separator weight rule; "optimal" is the data-driven 1/(kappa - p).
    custom_weights : dict, optional
        ``(sample_index, separator_index) -> weight``, for scheme="custom".
    b : float
        Half-width of the utility box.
    tol : float
        Projected-gradient infinity-norm stopping threshold.
    max_iter : int
        Iteration cap; hitting it flags the result as not converged.
    method : {"projected-gradient", "minorization-maximization"}
    """

    def __init__(self, scheme="optimal", custom_weights=None, b=10.0, tol=1e-8,
                 max_iter=10_000, method="projected-gradient"):
        self.scheme = scheme
        self.custom_weights = custom_weights
        self.b = b
        self.tol = tol
        self.max_iter = max_iter
        self.method = method

    def _scheme(self) -> WeightScheme:
        return WeightScheme(kind=self.scheme, table=self.custom_weights)

    def fit(self, X, y=None):
        orders = check_partial_orders(X)
        dataset = BrokenDataset.from_partial_orders(orders, self._scheme())
        return self._store(fit_rank_breaking(dataset, self._config()))

    def score(self, X) -> float:
        """Mean weighted paired log-likelihood per sample under the fit."""
        self._check_fitted()
        orders = check_partial_orders(X)
        dataset = BrokenDataset.from_partial_orders(orders, self._scheme())
        from .objective import rb_log_likelihood
        return rb_log_likelihood(self.utilities_, dataset) / len(orders)


class FullBreakingEstimator(BaseEstimator, _FittedRankingMixin):
    """Full rank-breaking: every readable pair, equal weights (biased in general)."""

    def __init__(self, b=10.0, tol=1e-8, max_iter=10_000, method="projected-gradient"):
        self.b = b
        self.tol = tol
        self.max_iter = max_iter
        self.method = method

    def fit(self, X, y=None):
        return self._store(fit_full_breaking(list(X), self._config()))

    def score(self, X) -> float:
        self._check_fitted()
        observations = list(X)
        total = 0.0
        for obs in observations:
            for w, l in readable_pairs(obs):
                dw, dl = self.utilities_[w], self.utilities_[l]
                total += dw - np.logaddexp(dw, dl)
        return total / len(observations)


class TopLMLEstimator(BaseEstimator, _FittedRankingMixin):
    """Exact maximum likelihood for ranked-prefix (top-ell) observations."""

    def __init__(self, b=10.0, tol=1e-8, max_iter=10_000, method="projected-gradient"):
        self.b = b
        self.tol = tol
        self.max_iter = max_iter
        self.method = method

    def fit(self, X, y=None):
        return self._store(fit_mle_topl(X, self._config()))

    def score(self, X) -> float:
        self._check_fitted()
        from .model import pl_topl_log_likelihood
        orders = check_topl_orders(X)
        data = []
        for po in orders:
            prefix = list(po.separator_items)
            tail = list(po.blocks[-1])
            ranking = Ranking(offering=po.offering, order=tuple(prefix + tail))
            data.append((ranking, po.num_separators))
        return pl_topl_log_likelihood(self.utilities_, data) / len(orders)


class RestrictedBottomEstimator(BaseEstimator, _FittedRankingMixin):
    """Rank-breaking fit restricted to the weakest items of a reference order."""

    def __init__(self, reference_order=None, d_tilde=None, b=10.0, tol=1e-8,
                 max_iter=10_000, method="projected-gradient"):
        self.reference_order = reference_order
        self.d_tilde = d_tilde
        self.b = b
        self.tol = tol
        self.max_iter = max_iter
        self.method = method

    def fit(self, X, y=None):
        if self.reference_order is None:
            raise ValidationError("reference_order (weakest items first) is required")
        orders = check_partial_orders(X)
        dataset = BrokenDataset.from_partial_orders(orders, WeightScheme("uniform"))
        d_tilde = self.d_tilde
        if d_tilde is None:
            kappas, ells, _, _ = dataset.sample_stats()
            d_tilde = max(2, default_restricted_count(
                int(ells.max()), int(kappas.max()), dataset.d))
        return self._store(fit_restricted_bottoml(
            dataset, d_tilde, self.reference_order, self._config()))
