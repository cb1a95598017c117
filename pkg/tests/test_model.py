"""Core model: feasible set, ranking probabilities, samplers."""

import itertools
import math

import numpy as np
import pytest
from scipy.stats import chisquare

from rankbreak import (Offering, Ranking, UtilityVector, ValidationError,
                       pl_ranking_probability, pl_topl_log_likelihood, project_feasible,
                       sample_ranking)


def brute_force_probability(theta, order):
    """Independent oracle: direct sequential-choice product in plain floats."""
    values = [theta[item] for item in order]
    prob = 1.0
    for k in range(len(values) - 1):
        prob *= math.exp(values[k]) / sum(math.exp(v) for v in values[k:])
    return prob


class TestUtilityVector:
    def test_accepts_feasible(self):
        uv = UtilityVector(values=np.array([0.5, -0.25, -0.25]), b=1.0)
        assert uv.d == 3
        assert uv.utility(0) == 0.5

    def test_rejects_nonzero_sum(self):
        with pytest.raises(ValidationError):
            UtilityVector(values=np.array([0.5, 0.5]), b=1.0)

    def test_rejects_box_violation(self):
        with pytest.raises(ValidationError):
            UtilityVector(values=np.array([1.5, -1.5]), b=1.0)

    def test_rejects_bad_b(self):
        with pytest.raises(ValidationError):
            UtilityVector(values=np.array([0.0]), b=0.0)

    def test_named_items(self):
        uv = UtilityVector(values=np.array([0.5, -0.5]), b=1.0, items=("a", "b"))
        assert uv.as_dict() == {"a": 0.5, "b": -0.5}
        with pytest.raises(ValidationError):
            uv.utility("c")


class TestProjectFeasible:
    def test_already_feasible(self):
        uv = project_feasible([0.0, 0.0, 0.0], b=1.0)
        assert np.allclose(uv.values, 0.0)

    def test_clamp_preserves_zero_sum(self):
        uv = project_feasible([2.0, -2.0], b=1.0)
        assert np.allclose(uv.values, [1.0, -1.0])

    def test_alternating_fixed_point_is_feasible(self):
        uv = project_feasible([3.0, 0.0, 0.0], b=2.0)
        assert abs(uv.values.sum()) <= 1e-9
        assert np.max(np.abs(uv.values)) <= 2.0 + 1e-12

    def test_random_inputs_land_feasible(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            d = int(rng.integers(1, 40))
            raw = rng.normal(scale=rng.uniform(0.1, 50.0), size=d)
            b = float(rng.uniform(0.01, 10.0))
            uv = project_feasible(raw, b)
            assert abs(uv.values.sum()) <= 1e-9
            assert np.max(np.abs(uv.values)) <= b + 1e-12

    def test_empty_rejected(self):
        with pytest.raises(ValidationError):
            project_feasible([], b=1.0)


class TestRankingProbability:
    def test_uniform_four_items(self):
        off = Offering(items=("a", "b", "c", "d"))
        theta = {i: 0.0 for i in off.items}
        sigma = Ranking(offering=off, order=("b", "d", "a", "c"))
        assert pl_ranking_probability(theta, sigma) == pytest.approx(1.0 / 24.0)

    def test_sequential_choice_product(self):
        off = Offering(items=("a", "b", "c", "d"))
        theta = {"a": math.log(2.0), "b": 0.0, "c": 0.0, "d": 0.0}
        sigma = Ranking(offering=off, order=("a", "b", "c", "d"))
        assert pl_ranking_probability(theta, sigma) == pytest.approx(1.0 / 15.0)

    @pytest.mark.parametrize("kappa", [2, 3, 4, 5, 6])
    def test_normalization_over_all_rankings(self, kappa):
        rng = np.random.default_rng(kappa)
        items = tuple(range(kappa))
        off = Offering(items=items)
        theta = {i: float(v) for i, v in zip(items, rng.uniform(-1, 1, kappa))}
        total = sum(
            pl_ranking_probability(theta, Ranking(offering=off, order=perm))
            for perm in itertools.permutations(items))
        assert total == pytest.approx(1.0, abs=1e-10)

    def test_matches_independent_product(self):
        rng = np.random.default_rng(3)
        items = tuple("abcde")
        off = Offering(items=items)
        for _ in range(20):
            theta = {i: float(v) for i, v in zip(items, rng.uniform(-2, 2, 5))}
            perm = tuple(rng.permutation(list(items)))
            sigma = Ranking(offering=off, order=perm)
            assert pl_ranking_probability(theta, sigma) == pytest.approx(
                brute_force_probability(theta, perm), rel=1e-12)

    def test_shift_invariance_before_projection(self):
        off = Offering(items=("a", "b", "c"))
        sigma = Ranking(offering=off, order=("c", "a", "b"))
        theta = {"a": 0.3, "b": -1.2, "c": 0.8}
        base = pl_ranking_probability(theta, sigma)
        for shift in (-5.0, 1.7, 42.0):
            shifted = {k: v + shift for k, v in theta.items()}
            assert pl_ranking_probability(shifted, sigma) == pytest.approx(base, rel=1e-12)

    def test_missing_item_rejected(self):
        off = Offering(items=("a", "b"))
        sigma = Ranking(offering=off, order=("a", "b"))
        with pytest.raises(ValidationError):
            pl_ranking_probability({"a": 0.0}, sigma)


class TestSampler:
    def test_uniform_symmetry(self):
        off = Offering(items=(0, 1, 2))
        theta = {i: 0.0 for i in off.items}
        rng = np.random.default_rng(123)
        counts = {}
        for _ in range(60_000):
            order = sample_ranking(theta, off, rng).order
            counts[order] = counts.get(order, 0) + 1
        for order, count in counts.items():
            assert count / 60_000 == pytest.approx(1.0 / 6.0, abs=0.01)

    def test_first_choice_frequency(self):
        off = Offering(items=("a", "b", "c", "d"))
        theta = {"a": math.log(2.0), "b": 0.0, "c": 0.0, "d": 0.0}
        rng = np.random.default_rng(7)
        hits = sum(sample_ranking(theta, off, rng).order[0] == "a"
                   for _ in range(100_000))
        assert hits / 100_000 == pytest.approx(2.0 / 5.0, abs=0.01)

    def test_seed_determinism(self):
        off = Offering(items=tuple(range(8)))
        theta = {i: 0.1 * i - 0.35 for i in off.items}
        assert sample_ranking(theta, off, 99).order == sample_ranking(theta, off, 99).order

    def test_gumbel_construction_matches(self):
        """Sorting utilities plus Gumbel noise descending is the same law."""
        items = ("a", "b", "c")
        off = Offering(items=items)
        theta = {"a": 0.6, "b": 0.0, "c": -0.6}
        perms = list(itertools.permutations(items))
        exact = np.array([
            pl_ranking_probability(theta, Ranking(offering=off, order=perm))
            for perm in perms])
        n = 60_000
        rng = np.random.default_rng(2024)

        race_counts = np.zeros(len(perms))
        for _ in range(n):
            order = sample_ranking(theta, off, rng).order
            race_counts[perms.index(order)] += 1

        vals = np.array([theta[i] for i in items])
        gumbel_counts = np.zeros(len(perms))
        noisy = vals[None, :] + rng.gumbel(size=(n, len(items)))
        orders = np.argsort(-noisy, axis=1, kind="stable")
        for row in orders:
            gumbel_counts[perms.index(tuple(items[k] for k in row))] += 1

        for counts in (race_counts, gumbel_counts):
            stat = chisquare(counts, exact * n)
            assert stat.pvalue > 0.001


class TestToplLogLikelihood:
    def _sigma(self, order):
        return Ranking(offering=Offering(items=tuple(sorted(order))), order=order)

    def test_top1_uniform(self):
        theta = {i: 0.0 for i in "abcd"}
        sigma = self._sigma(("a", "b", "c", "d"))
        assert pl_topl_log_likelihood(theta, [(sigma, 1)]) == pytest.approx(math.log(0.25))

    def test_full_prefix_equals_full_ranking(self):
        theta = {i: 0.0 for i in "abcd"}
        sigma = self._sigma(("b", "a", "d", "c"))
        assert pl_topl_log_likelihood(theta, [(sigma, 3)]) == pytest.approx(math.log(1 / 24))

    def test_top1_first_choice_share(self):
        theta = {"a": math.log(2.0), "b": 0.0, "c": 0.0, "d": 0.0}
        sigma = self._sigma(("a", "b", "c", "d"))
        assert pl_topl_log_likelihood(theta, [(sigma, 1)]) == pytest.approx(math.log(0.4))

    def test_out_of_range_ell(self):
        theta = {i: 0.0 for i in "abc"}
        sigma = self._sigma(("a", "b", "c"))
        with pytest.raises(ValidationError):
            pl_topl_log_likelihood(theta, [(sigma, 3)])
        with pytest.raises(ValidationError):
            pl_topl_log_likelihood(theta, [(sigma, 0)])

    def test_sums_over_samples(self):
        theta = {"a": 0.4, "b": -0.1, "c": -0.3}
        s1 = self._sigma(("a", "b", "c"))
        s2 = self._sigma(("c", "b", "a"))
        joint = pl_topl_log_likelihood(theta, [(s1, 1), (s2, 2)])
        split = (pl_topl_log_likelihood(theta, [(s1, 1)])
                 + pl_topl_log_likelihood(theta, [(s2, 2)]))
        assert joint == pytest.approx(split)
