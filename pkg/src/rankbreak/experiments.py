"""Scenario generation, Monte Carlo trials, error metrics, and baselines.

Scenarios draw offerings uniformly (or from a named survey topology), draw
rankings from the choice model, and cut them into partial orders at the
configured separator placement.  Trials are independent: per-trial seeds
come from a counter-based split of the master seed, so aggregates are
reproducible and order-independent.
"""

from __future__ import annotations

import dataclasses
import time
from dataclasses import dataclass

import numpy as np

from .breaking import partial_order_from_ranking, readable_pairs
from .dataset import BrokenDataset, WeightScheme
from .errors import EstimationInfeasibleError, ValidationError
from .estimators import (FitConfig, FitResult, default_restricted_count, fit_full_breaking,
                         fit_mle_topl, fit_pairwise, fit_rank_breaking,
                         fit_restricted_bottoml)
from .graphs import Diagnostics, compute_diagnostics, generate_topology
from .model import Offering, Ranking, UtilityVector

PLACEMENTS = ("top-ell", "random-ell", "random-ell-top-half", "bottom-ell",
              "position-p", "custom")
ESTIMATORS = ("rank-breaking", "full-breaking", "mle-topl", "restricted-bottom",
              "naive-breaking")

CSV_COLUMNS = ("scenario_id", "axis", "axis_value", "estimator", "scheme", "trials",
               "mean_mse", "ci_low", "ci_high", "alpha", "beta", "gamma", "eta",
               "runtime_ms")


@dataclass(frozen=True, eq=False)
class ScenarioSpec:
    """One synthetic-data configuration: sizes, placement, truth source."""

    d: int
    n: int
    kappa: object  # int, or a per-sample sequence of lengths
    ell: int
    placement: str = "random-ell"
    position: int = None
    positions: tuple = None
    theta_source: str = "uniform"  # uniform | worst-case | explicit
    theta_star: tuple = None
    topology: str = None
    b: float = 2.0
    trials: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.placement not in PLACEMENTS:
            raise ValidationError(f"unknown placement {self.placement!r}")
        if self.trials < 1:
            raise ValidationError("trials must be at least 1")
        if self.n < 1 or self.d < 2:
            raise ValidationError("need n >= 1 and d >= 2")
        kappas = self.kappa_list()
        if max(kappas) > self.d:
            raise ValidationError("kappa cannot exceed d")
        if min(kappas) < 2:
            raise ValidationError("kappa must be at least 2")
        for kappa in set(kappas):
            self.positions_for(kappa_check=kappa)
        if self.theta_source == "explicit" and self.theta_star is None:
            raise ValidationError("explicit truth requires theta_star")
        if self.theta_source == "worst-case" and self.topology not in ("chain", "barbell"):
            raise ValidationError("worst-case truth requires a chain or barbell topology")
        if self.theta_source not in ("uniform", "worst-case", "explicit"):
            raise ValidationError(f"unknown theta source {self.theta_source!r}")
        if self.topology is not None and not isinstance(self.kappa, int):
            raise ValidationError("topologies require one offering size")

    def kappa_list(self):
        if isinstance(self.kappa, int):
            return [self.kappa] * self.n
        kappas = [int(k) for k in self.kappa]
        if len(kappas) != self.n:
            raise ValidationError("per-sample kappa list must have length n")
        return kappas

    def positions_for(self, kappa_check: int, rng=None):
        """Separator positions for one sample of size ``kappa_check``."""
        kappa, ell = kappa_check, self.ell
        if self.placement == "top-ell":
            if not 1 <= ell <= kappa - 1:
                raise ValidationError("need 1 <= ell <= kappa - 1")
            return tuple(range(1, ell + 1))
        if self.placement == "bottom-ell":
            if not 1 <= ell <= kappa - 1:
                raise ValidationError("need 1 <= ell <= kappa - 1")
            return tuple(range(kappa - ell, kappa))
        if self.placement == "random-ell":
            if not 1 <= ell <= kappa - 1:
                raise ValidationError("need 1 <= ell <= kappa - 1")
            if rng is None:
                return tuple(range(1, ell + 1))  # validation probe only
            return tuple(sorted(rng.choice(np.arange(1, kappa), size=ell,
                                           replace=False).tolist()))
        if self.placement == "random-ell-top-half":
            top = kappa // 2
            if not 1 <= ell <= top:
                raise ValidationError("need 1 <= ell <= kappa // 2 for top-half placement")
            if rng is None:
                return tuple(range(1, ell + 1))
            return tuple(sorted(rng.choice(np.arange(1, top + 1), size=ell,
                                           replace=False).tolist()))
        if self.placement == "position-p":
            if self.position is None or not 1 <= self.position <= kappa - 1:
                raise ValidationError("position-p placement needs 1 <= position <= kappa - 1")
            return (int(self.position),)
        # custom
        if not self.positions:
            raise ValidationError("custom placement needs explicit positions")
        positions = tuple(int(p) for p in self.positions)
        if positions[0] < 1 or positions[-1] > kappa - 1:
            raise ValidationError("custom positions out of range")
        return positions


def _draw_theta(spec: ScenarioSpec, rng, topology_theta):
    if spec.theta_source == "uniform":
        theta = rng.uniform(-spec.b, spec.b, size=spec.d)
        return theta - theta.mean()
    if spec.theta_source == "explicit":
        theta = np.asarray(spec.theta_star, dtype=float)
        if theta.shape != (spec.d,):
            raise ValidationError("theta_star must have length d")
        return theta
    if topology_theta is None:
        raise ValidationError("topology did not produce a worst-case truth")
    return topology_theta


def generate_scenario_data(spec: ScenarioSpec, seed=None):
    """Draw the truth and one dataset of partial orders; deterministic per seed."""
    rng = np.random.default_rng(spec.seed if seed is None else seed)
    topology_theta = None
    if spec.topology is not None:
        offerings, topology_theta = generate_topology(
            spec.topology, spec.d, spec.kappa, spec.n, rng,
            worst_case_b=spec.b if spec.theta_source == "worst-case" else None)
        offer_rows = [np.fromiter(off.items, count=off.kappa, dtype=np.int64)
                      for off in offerings]
    else:
        offer_rows = None
    theta = _draw_theta(spec, rng, topology_theta)

    kappas = spec.kappa_list()
    if offer_rows is None:
        offer_rows = []
        if isinstance(spec.kappa, int):
            keys = rng.random((spec.n, spec.d))
            chosen = np.argpartition(keys, spec.kappa - 1, axis=1)[:, :spec.kappa]
            chosen.sort(axis=1)
            offer_rows = list(chosen)
        else:
            for kappa in kappas:
                row = rng.choice(spec.d, size=kappa, replace=False)
                row.sort()
                offer_rows.append(row)

    orders = []
    for row, kappa in zip(offer_rows, kappas):
        draws = rng.exponential(size=kappa) * np.exp(-theta[row])
        ranked = row[np.argsort(draws, kind="stable")]
        offering = Offering(items=tuple(int(i) for i in row))
        ranking = Ranking(offering=offering, order=tuple(int(i) for i in ranked))
        orders.append(partial_order_from_ranking(
            ranking, spec.positions_for(kappa, rng=rng)))
    return theta, orders


def _aligned(theta_hat, theta_star):
    if isinstance(theta_hat, UtilityVector):
        theta_hat = theta_hat.as_dict()
    if isinstance(theta_star, UtilityVector):
        theta_star = theta_star.as_dict()
    if isinstance(theta_hat, np.ndarray) or isinstance(theta_star, np.ndarray):
        a = np.asarray(theta_hat, dtype=float)
        b = np.asarray(theta_star, dtype=float)
        if a.shape != b.shape:
            raise ValidationError("estimate and truth must share an index set")
        return a, b
    if set(theta_hat) != set(theta_star):
        raise ValidationError("estimate and truth must share an index set")
    keys = sorted(theta_hat, key=lambda x: (str(type(x)), x))
    return (np.array([theta_hat[k] for k in keys], dtype=float),
            np.array([theta_star[k] for k in keys], dtype=float))


def mse(theta_hat, theta_star, normalization=None) -> float:
    """Squared L2 error, divided by the item count unless a constant is given."""
    a, b = _aligned(theta_hat, theta_star)
    total = float(np.sum((a - b) ** 2))
    if normalization is None:
        return total / a.size
    return normalization * total


def per_item_abs_error(theta_hat, theta_star):
    """Componentwise absolute error, aligned like :func:`mse`."""
    a, b = _aligned(theta_hat, theta_star)
    return np.abs(a - b)


def align_to_truth(utilities: dict, theta_star: np.ndarray):
    """Restrict the truth to fitted items and re-center both sides.

    Restricted and per-component fits only identify utilities up to a shift
    within the compared set, so both vectors are centered over it.
    """
    items = sorted(utilities)
    est = np.array([utilities[i] for i in items], dtype=float)
    truth = np.asarray(theta_star, dtype=float)[np.asarray(items, dtype=np.int64)]
    return est - est.mean(), truth - truth.mean(), items


def fit_naive_breaking(orders, config: FitConfig, rng) -> FitResult:
    """Baseline: same pairwise budget, pairs drawn at random from all readable ones.

    Matches the consistent extraction pair-for-pair in count, weighs them
    uniformly, and is in general biased no matter the sample size.
    """
    items = sorted({i for po in orders for i in po.offering.items},
                   key=lambda x: (str(type(x)), x))
    index = {item: k for k, item in enumerate(items)}
    winners, losers = [], []
    for po in orders:
        budget = sum(po.kappa - p for p in po.positions)
        pool = readable_pairs(po)
        chosen = rng.choice(len(pool), size=budget, replace=False)
        for c in chosen:
            w, l = pool[int(c)]
            winners.append(index[w])
            losers.append(index[l])
    return fit_pairwise(tuple(items), np.array(winners), np.array(losers),
                        np.ones(len(winners)), config)


@dataclass(frozen=True, eq=False)
class TrialResult:
    """One Monte Carlo trial: the fit, its error, and a diagnostics snapshot."""

    utilities: dict
    mse: float
    abs_errors: dict
    runtime_ms: float
    diagnostics: Diagnostics = None


@dataclass(frozen=True, eq=False)
class TrialsAggregate:
    results: tuple
    mean_mse: float
    ci_low: float
    ci_high: float
    excluded: int
    mean_runtime_ms: float
    mean_diagnostics: dict = None


def bootstrap_ci(values, rng, n_boot: int = 1000, level: float = 0.95):
    """Percentile bootstrap confidence interval for the mean."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValidationError("cannot bootstrap an empty sample")
    picks = rng.integers(0, values.size, size=(n_boot, values.size))
    means = values[picks].mean(axis=1)
    tail = 100.0 * (1.0 - level) / 2.0
    return float(np.percentile(means, tail)), float(np.percentile(means, 100.0 - tail))


def _fit_for(estimator, scheme, orders, config, rng, theta_star, d_tilde):
    if estimator == "rank-breaking":
        dataset = BrokenDataset.from_partial_orders(orders, WeightScheme(scheme))
        return fit_rank_breaking(dataset, config), dataset
    if estimator == "full-breaking":
        dataset = BrokenDataset.from_partial_orders(orders, WeightScheme(scheme))
        return fit_full_breaking(orders, config), dataset
    if estimator == "mle-topl":
        dataset = BrokenDataset.from_partial_orders(orders, WeightScheme(scheme))
        return fit_mle_topl(orders, config), dataset
    if estimator == "naive-breaking":
        dataset = BrokenDataset.from_partial_orders(orders, WeightScheme(scheme))
        return fit_naive_breaking(orders, config, rng), dataset
    if estimator == "restricted-bottom":
        dataset = BrokenDataset.from_partial_orders(orders, WeightScheme("uniform"))
        kappas, ells, _, _ = dataset.sample_stats()
        count = d_tilde or max(2, default_restricted_count(
            int(ells.max()), int(kappas.max()), dataset.d))
        reference = np.argsort(theta_star, kind="stable")  # weakest first
        return fit_restricted_bottoml(dataset, count, [int(i) for i in reference],
                                      config), dataset
    raise ValidationError(f"unknown estimator {estimator!r}; expected one of {ESTIMATORS}")


def run_trials(spec: ScenarioSpec, estimator: str = "rank-breaking",
               scheme: str = "optimal", config: FitConfig = None,
               normalization=None, d_tilde: int = None,
               with_diagnostics: bool = True) -> TrialsAggregate:
    """Independent trials of (generate, fit, score); errors per trial excluded with a count.

    Unless a config is given, fits use minorization-maximization at a
    Monte-Carlo-appropriate tolerance: the optimizer residual is then orders
    of magnitude below the statistical noise being measured.
    """
    config = config or FitConfig(b=spec.b, tolerance=1e-6,
                                 method="minorization-maximization")
    children = np.random.SeedSequence(spec.seed).spawn(spec.trials + 1)
    results = []
    excluded = 0
    for t in range(spec.trials):
        rng = np.random.default_rng(children[t])
        theta_star, orders = generate_scenario_data(spec, seed=rng)
        start = time.perf_counter()
        try:
            result, dataset = _fit_for(estimator, scheme, orders, config, rng,
                                       theta_star, d_tilde)
        except EstimationInfeasibleError:
            excluded += 1
            continue
        runtime_ms = (time.perf_counter() - start) * 1e3
        est, truth, items = align_to_truth(result.utilities.as_dict(), theta_star)
        trial_mse = mse(est, truth, normalization)
        diag = compute_diagnostics(dataset, spec.b) if with_diagnostics else None
        results.append(TrialResult(
            utilities=dict(zip(items, est)),
            mse=trial_mse,
            abs_errors=dict(zip(items, np.abs(est - truth))),
            runtime_ms=runtime_ms,
            diagnostics=diag))
    if not results:
        raise EstimationInfeasibleError("every trial failed")
    values = np.array([r.mse for r in results])
    boot_rng = np.random.default_rng(children[-1])
    if values.size > 1:
        ci_low, ci_high = bootstrap_ci(values, boot_rng)
    else:
        ci_low = ci_high = float(values[0])
    mean_diag = None
    if with_diagnostics:
        mean_diag = {
            key: float(np.mean([getattr(r.diagnostics, key) for r in results]))
            for key in ("alpha", "beta", "gamma", "eta")}
    return TrialsAggregate(
        results=tuple(results),
        mean_mse=float(values.mean()),
        ci_low=ci_low, ci_high=ci_high,
        excluded=excluded,
        mean_runtime_ms=float(np.mean([r.runtime_ms for r in results])),
        mean_diagnostics=mean_diag)


def kendall_distance(sigma1: Ranking, sigma2: Ranking) -> int:
    """Number of item pairs the two rankings order oppositely."""
    if set(sigma1.order) != set(sigma2.order):
        raise ValidationError("rankings must cover the same items")
    pos2 = {item: k for k, item in enumerate(sigma2.order)}
    seq = [pos2[item] for item in sigma1.order]
    return sum(1 for i in range(len(seq)) for j in range(i + 1, len(seq))
               if seq[i] > seq[j])


def kendall_sample_correlation(sigma_hat: Ranking, samples) -> float:
    """Mean over samples of 1 - 4 K / (kappa (kappa - 1)); lies in [-1, 1]."""
    samples = list(samples)
    if not samples:
        raise ValidationError("need at least one sample ranking")
    total = 0.0
    for sigma in samples:
        kappa = sigma.kappa
        total += 1.0 - 4.0 * kendall_distance(sigma_hat, sigma) / (kappa * (kappa - 1))
    return total / len(samples)


def borda_count(rankings):
    """Positional scores (kappa minus rank) summed per item, plus the induced order.

    Partial coverage is scored over the items each ranking observes; ties
    break by item id.
    """
    scores = {}
    for ranking in rankings:
        kappa = ranking.kappa
        for pos, item in enumerate(ranking.order, start=1):
            scores[item] = scores.get(item, 0.0) + (kappa - pos)
    induced = tuple(sorted(scores, key=lambda i: (-scores[i], str(type(i)), i)))
    return scores, induced


def scaling_table(axis: str, base_spec: ScenarioSpec, values,
                  estimators=(("rank-breaking", "optimal"),),
                  config: FitConfig = None, normalization=None) -> list:
    """One row per (axis value, estimator, scheme); CSV-ready dicts."""
    if axis not in ("n", "ell", "d"):
        raise ValidationError("axis must be one of n, ell, d")
    values = list(values)
    if not values:
        raise ValidationError("axis grid must be nonempty")
    rows = []
    for value in values:
        spec = dataclasses.replace(base_spec, **{axis: int(value)})
        for estimator, scheme in estimators:
            aggregate = run_trials(spec, estimator=estimator, scheme=scheme,
                                   config=config, normalization=normalization)
            diag = aggregate.mean_diagnostics or {}
            rows.append({
                "scenario_id": f"{axis}={value}:{estimator}:{scheme}",
                "axis": axis,
                "axis_value": int(value),
                "estimator": estimator,
                "scheme": scheme,
                "trials": len(aggregate.results),
                "mean_mse": aggregate.mean_mse,
                "ci_low": aggregate.ci_low,
                "ci_high": aggregate.ci_high,
                "alpha": diag.get("alpha", float("nan")),
                "beta": diag.get("beta", float("nan")),
                "gamma": diag.get("gamma", float("nan")),
                "eta": diag.get("eta", float("nan")),
                "runtime_ms": aggregate.mean_runtime_ms,
            })
    return rows
