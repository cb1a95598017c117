"""Partial orders, DAG separators, and consistent breaking extraction."""

import itertools

import numpy as np
import pytest

from rankbreak import (Offering, PartialOrder, PosetDag, RankBreakingGraph, Ranking,
                       ValidationError, break_into_graphs, partial_order_from_dag,
                       partial_order_from_ranking, readable_pairs, separators_from_dag,
                       validate_consistent_breaking)

HASSE_SIX = PosetDag(
    nodes=("a", "b", "c", "d", "e", "f"),
    edges=(("a", "b"), ("a", "d"), ("b", "c"), ("c", "e"), ("d", "e"), ("e", "f")))


class TestPosetDag:
    def test_cycle_rejected(self):
        with pytest.raises(ValidationError):
            PosetDag(nodes=("a", "b"), edges=(("a", "b"), ("b", "a")))

    def test_unknown_node_rejected(self):
        with pytest.raises(ValidationError):
            PosetDag(nodes=("a",), edges=(("a", "b"),))


class TestSeparators:
    def test_six_item_hasse(self):
        assert separators_from_dag(HASSE_SIX) == [("a", 1), ("e", 5)]

    def test_total_order_chain(self):
        dag = PosetDag(nodes=("a", "b", "c"), edges=(("a", "b"), ("b", "c")))
        assert separators_from_dag(dag) == [("a", 1), ("b", 2)]

    def test_incomparable_roots_have_none(self):
        dag = PosetDag(nodes=("x", "y", "z"), edges=(("x", "z"), ("y", "z")))
        assert separators_from_dag(dag) == []

    def test_matches_exhaustive_partition_check(self):
        rng = np.random.default_rng(11)
        for _ in range(30):
            d = int(rng.integers(3, 7))
            nodes = tuple(range(d))
            edges = []
            for i in range(d):
                for j in range(i + 1, d):
                    if rng.random() < 0.4:
                        edges.append((i, j))  # i preferred; acyclic by index order
            dag = PosetDag(nodes=nodes, edges=tuple(edges))
            below = {v: dag.reachable_from(v) for v in nodes}
            expected = []
            for v in nodes:
                above = {u for u in nodes if v in below[u]}
                if below[v] and above | below[v] == set(nodes) - {v}:
                    expected.append((v, len(above) + 1))
            expected.sort(key=lambda t: t[1])
            assert separators_from_dag(dag) == expected


class TestPartialOrderFromDag:
    def test_hasse_conversion_drops_gap_relations(self):
        po = partial_order_from_dag(HASSE_SIX)
        assert po.positions == (1, 5)
        assert po.blocks == ((), ("a",), ("b", "c", "d"), ("e",), ("f",))

    def test_no_separator_reports_nodes(self):
        dag = PosetDag(nodes=("x", "y", "z"), edges=(("x", "z"), ("y", "z")))
        with pytest.raises(ValidationError, match="non-conforming"):
            partial_order_from_dag(dag)


class TestPartialOrderFromRanking:
    def _ranking(self, order):
        return Ranking(offering=Offering(items=tuple(sorted(order))), order=order)

    def test_two_separators(self):
        sigma = self._ranking(("a", "b", "c", "d", "e", "f"))
        po = partial_order_from_ranking(sigma, (1, 5))
        assert po.blocks == ((), ("a",), ("b", "c", "d"), ("e",), ("f",))

    def test_all_positions_preserve_ranking(self):
        sigma = self._ranking(("d", "a", "c", "b"))
        po = partial_order_from_ranking(sigma, (1, 2, 3))
        separated = tuple(item for block in po.blocks for item in block)
        assert separated == ("d", "a", "c", "b")

    def test_bottom_one_observation(self):
        sigma = self._ranking(("d", "a", "c", "b"))
        po = partial_order_from_ranking(sigma, (3,))
        assert [len(block) for block in po.blocks] == [2, 1, 1]
        assert po.blocks[1] == ("c",)

    def test_bad_positions(self):
        sigma = self._ranking(("a", "b", "c"))
        with pytest.raises(ValidationError):
            partial_order_from_ranking(sigma, (3,))
        with pytest.raises(ValidationError):
            partial_order_from_ranking(sigma, (2, 1))


class TestPartialOrderInvariants:
    def test_block_sizes_must_match(self):
        off = Offering(items=("a", "b", "c", "d"))
        with pytest.raises(ValidationError):
            PartialOrder(offering=off, positions=(2,),
                         blocks=(("a",), ("b",), ("c", "d"), ()))

    def test_blocks_must_partition(self):
        off = Offering(items=("a", "b", "c"))
        with pytest.raises(ValidationError):
            PartialOrder(offering=off, positions=(1,), blocks=((), ("a",), ("b", "b")))

    def test_gap_blocks_sorted(self):
        off = Offering(items=("a", "b", "c", "d"))
        po = PartialOrder(offering=off, positions=(1,),
                          blocks=((), ("d",), ("c", "a", "b")))
        assert po.blocks[2] == ("a", "b", "c")


class TestBreaking:
    def test_hasse_graphs(self):
        po = partial_order_from_dag(HASSE_SIX)
        graphs = break_into_graphs(po)
        assert [(g.separator_item, g.position, g.bottom_set) for g in graphs] == [
            ("a", 1, ("b", "c", "d", "e", "f")),
            ("e", 5, ("f",)),
        ]

    def test_single_pair_extraction(self):
        sigma = Ranking(offering=Offering(items=("a", "b")), order=("b", "a"))
        po = partial_order_from_ranking(sigma, (1,))
        graphs = break_into_graphs(po)
        assert len(graphs) == 1 and graphs[0].num_pairs == 1

    def test_pair_count_formula(self):
        rng = np.random.default_rng(5)
        items = tuple(range(9))
        off = Offering(items=items)
        for _ in range(25):
            order = tuple(int(i) for i in rng.permutation(9))
            ell = int(rng.integers(1, 5))
            positions = tuple(sorted(rng.choice(np.arange(1, 9), ell, replace=False).tolist()))
            po = partial_order_from_ranking(Ranking(offering=off, order=order), positions)
            graphs = break_into_graphs(po)
            assert sum(g.num_pairs for g in graphs) == sum(9 - p for p in positions)

    def test_round_trip_directions_agree(self):
        rng = np.random.default_rng(6)
        items = tuple(range(7))
        off = Offering(items=items)
        for _ in range(25):
            order = tuple(int(i) for i in rng.permutation(7))
            rank_of = {item: k for k, item in enumerate(order)}
            ell = int(rng.integers(1, 4))
            positions = tuple(sorted(rng.choice(np.arange(1, 7), ell, replace=False).tolist()))
            po = partial_order_from_ranking(Ranking(offering=off, order=order), positions)
            for g in break_into_graphs(po):
                for loser in g.bottom_set:
                    assert rank_of[g.separator_item] < rank_of[loser]


class TestConsistencyValidation:
    def test_constructed_breaking_is_consistent(self):
        po = partial_order_from_dag(HASSE_SIX)
        assert validate_consistent_breaking(break_into_graphs(po), po)

    def test_pair_among_non_separators_rejected(self):
        po = partial_order_from_dag(HASSE_SIX)
        graphs = break_into_graphs(po) + [
            RankBreakingGraph(separator_item="b", position=2, bottom_set=("c",))]
        assert not validate_consistent_breaking(graphs, po)

    def test_separator_pair_accepted(self):
        po = partial_order_from_dag(HASSE_SIX)
        graphs = [RankBreakingGraph(separator_item="e", position=5, bottom_set=("f",))]
        assert validate_consistent_breaking(graphs, po)

    def test_reach_above_separator_rejected(self):
        po = partial_order_from_dag(HASSE_SIX)
        graphs = [RankBreakingGraph(separator_item="e", position=5, bottom_set=("b",))]
        assert not validate_consistent_breaking(graphs, po)


class TestReadablePairs:
    def test_dag_reachability_pairs(self):
        assert len(readable_pairs(HASSE_SIX)) == 13

    def test_partial_order_cross_block_pairs(self):
        po = partial_order_from_dag(HASSE_SIX)
        # the unordered middle block hides its internal relation
        assert len(readable_pairs(po)) == 12

    def test_full_ranking_pairs(self):
        sigma = Ranking(offering=Offering(items=("a", "b", "c")), order=("c", "a", "b"))
        assert set(readable_pairs(sigma)) == {("c", "a"), ("c", "b"), ("a", "b")}


class TestConditionalWinOracle:
    def test_position_break_is_unbiased(self):
        """Enumerating all rankings: within a position-p extraction, the
        chance the higher-utility item wins is its pairwise logistic share."""
        rng = np.random.default_rng(17)
        items = tuple(range(4))
        off = Offering(items=items)
        theta = {i: float(v) for i, v in zip(items, rng.uniform(-1, 1, 4))}
        from tests.test_model import brute_force_probability
        for p in (1, 2, 3):
            for i, j in itertools.combinations(items, 2):
                joint = cond = 0.0
                for perm in itertools.permutations(items):
                    prob = brute_force_probability(theta, perm)
                    ranks = {item: k + 1 for k, item in enumerate(perm)}
                    in_break = (min(ranks[i], ranks[j]) == p and max(ranks[i], ranks[j]) > p)
                    if in_break:
                        joint += prob
                        if ranks[i] < ranks[j]:
                            cond += prob
                expected = np.exp(theta[i]) / (np.exp(theta[i]) + np.exp(theta[j]))
                assert cond / joint == pytest.approx(expected, abs=1e-10)
