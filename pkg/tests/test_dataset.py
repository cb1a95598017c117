"""Weight schemes and the broken-dataset container."""

import numpy as np
import pytest

from rankbreak import (BrokenDataset, Offering, Ranking, ValidationError, WeightScheme,
                       partial_order_from_ranking, weights_for)


def _po(order, positions):
    sigma = Ranking(offering=Offering(items=tuple(sorted(order))), order=order)
    return partial_order_from_ranking(sigma, positions)


class TestWeightScheme:
    def test_table_only_for_custom(self):
        with pytest.raises(ValidationError):
            WeightScheme(kind="optimal", table={(0, 0): 1.0})
        with pytest.raises(ValidationError):
            WeightScheme(kind="custom")

    def test_unknown_kind(self):
        with pytest.raises(ValidationError):
            WeightScheme(kind="magic")


class TestWeightsFor:
    def test_optimal_large_offering(self):
        order = tuple(range(128))
        po = _po(order, (1,))
        weights = weights_for(WeightScheme("optimal"), [po])
        assert weights == ((1.0 / 127.0,),)

    def test_optimal_deep_separator(self):
        po = _po(tuple(range(6)), (5,))
        assert weights_for(WeightScheme("optimal"), [po]) == ((1.0,),)

    def test_inverse_kappa(self):
        po = _po(tuple(range(128)), (3, 70))
        assert weights_for(WeightScheme("inverse-kappa"), [po]) == ((1 / 128, 1 / 128),)

    def test_uniform(self):
        po = _po(tuple(range(5)), (1, 3))
        assert weights_for(WeightScheme("uniform"), [po]) == ((1.0, 1.0),)

    def test_custom_passthrough_and_missing(self):
        po = _po(tuple(range(4)), (1, 2))
        scheme = WeightScheme("custom", table={(0, 0): 0.5, (0, 1): 2.0})
        assert weights_for(scheme, [po]) == ((0.5, 2.0),)
        with pytest.raises(ValidationError):
            weights_for(WeightScheme("custom", table={(0, 0): 0.5}), [po])

    def test_negative_custom_rejected(self):
        po = _po(tuple(range(3)), (1,))
        with pytest.raises(ValidationError):
            weights_for(WeightScheme("custom", table={(0, 0): -1.0}), [po])


class TestBrokenDataset:
    def test_index_is_sorted_and_contiguous(self):
        ds = BrokenDataset.from_partial_orders([
            _po(("c", "a"), (1,)), _po(("b", "d", "a"), (1, 2))])
        assert ds.items == ("a", "b", "c", "d")
        assert sorted(ds.index.values()) == [0, 1, 2, 3]

    def test_pair_arrays_deterministic(self):
        orders = [_po(("b", "a", "c"), (1,)), _po(("c", "b", "a"), (2,))]
        ds = BrokenDataset.from_partial_orders(orders)
        first = ds.pair_arrays()
        second = BrokenDataset.from_partial_orders(orders).pair_arrays()
        for x, y in zip(first, second):
            assert np.array_equal(x, y)

    def test_effective_sample_size(self):
        ds = BrokenDataset.from_partial_orders([
            _po(tuple("abcd"), (1, 3)), _po(tuple("cdef"), (2,))])
        assert ds.effective_sample_size() == 3

    def test_reweighted(self):
        ds = BrokenDataset.from_partial_orders([_po(tuple("abcd"), (1,))])
        assert ds.weights == ((1.0 / 3.0,),)
        uniform = ds.reweighted(WeightScheme("uniform"))
        assert uniform.weights == ((1.0,),)

    def test_empty_rejected(self):
        with pytest.raises(ValidationError):
            BrokenDataset.from_partial_orders([])
