"""Partial orders, separator identification, and consistent rank-breaking.

A partial order fixes a set of separator positions ahead of time: the
observed data names which item fell at each separator rank and which items
fell in the unordered gaps between them.  Consistent breaking extracts, per
separator, the pairwise outcomes between the separator item and everything
ranked below it; pairwise outcomes between non-separator items are exactly
the ones that bias downstream estimation and are never extracted here.
"""

from __future__ import annotations

from dataclasses import dataclass
from graphlib import CycleError, TopologicalSorter

from .errors import ValidationError
from .model import Offering, Ranking


def _sorted_ids(items):
    try:
        return tuple(sorted(items))
    except TypeError:  # mixed id types: order by type name first
        return tuple(sorted(items, key=lambda x: (str(type(x)), x)))


@dataclass(frozen=True, eq=False)
class PosetDag:
    """A consistent set of ordered relations, edges preferred -> less-preferred."""

    nodes: tuple
    edges: tuple

    def __post_init__(self):
        nodes = tuple(self.nodes)
        if len(set(nodes)) != len(nodes):
            raise ValidationError("DAG nodes must be distinct")
        node_set = set(nodes)
        edges = tuple((u, v) for u, v in self.edges)
        for u, v in edges:
            if u not in node_set or v not in node_set:
                raise ValidationError(f"edge ({u!r}, {v!r}) references unknown node")
        graph = {node: set() for node in nodes}
        for u, v in edges:
            graph[v].add(u)  # predecessors, as TopologicalSorter expects
        try:
            TopologicalSorter(graph).prepare()
        except CycleError as exc:
            raise ValidationError(f"ordered relations contain a cycle: {exc.args[1]}") from None
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "edges", edges)

    def successors(self, node) -> set:
        return {v for u, v in self.edges if u == node}

    def reachable_from(self, node) -> set:
        """All nodes strictly less preferred than ``node``."""
        seen = set()
        stack = [node]
        while stack:
            u = stack.pop()
            for v in self.successors(u):
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        return seen


@dataclass(frozen=True, eq=False)
class PartialOrder:
    """One agent's observation: separator items plus unordered gap blocks.

    ``blocks`` alternates gap / separator / gap / ... with sizes
    ``(p1-1, 1, p2-p1-1, 1, ..., kappa-p_ell)``; gap blocks carry no
    internal order and are stored sorted by id.
    """

    offering: Offering
    positions: tuple
    blocks: tuple

    def __post_init__(self):
        kappa = self.offering.kappa
        positions = tuple(int(p) for p in self.positions)
        if len(positions) < 1:
            raise ValidationError("a partial order needs at least one separator")
        if any(p2 <= p1 for p1, p2 in zip(positions, positions[1:])):
            raise ValidationError("separator positions must be strictly increasing")
        if positions[0] < 1 or positions[-1] > kappa - 1:
            raise ValidationError(
                f"separator positions must lie in [1, {kappa - 1}] (every separator "
                "needs a nonempty set of items below it)")
        expected_sizes = [positions[0] - 1]
        for p1, p2 in zip(positions, positions[1:]):
            expected_sizes.extend([1, p2 - p1 - 1])
        expected_sizes.extend([1, kappa - positions[-1]])
        blocks = [tuple(block) for block in self.blocks]
        if [len(block) for block in blocks] != expected_sizes:
            raise ValidationError(
                f"block sizes {[len(b) for b in blocks]} do not match the "
                f"sizes {expected_sizes} implied by positions {positions}")
        flat = [item for block in blocks for item in block]
        if len(set(flat)) != len(flat) or set(flat) != set(self.offering.items):
            raise ValidationError("blocks must partition the offering")
        # gap blocks (even indices) are unordered; store sorted for determinism
        blocks = tuple(
            block if k % 2 == 1 else _sorted_ids(block)
            for k, block in enumerate(blocks))
        object.__setattr__(self, "positions", positions)
        object.__setattr__(self, "blocks", blocks)

    @property
    def kappa(self) -> int:
        return self.offering.kappa

    @property
    def num_separators(self) -> int:
        return len(self.positions)

    @property
    def separator_items(self) -> tuple:
        return tuple(self.blocks[2 * a + 1][0] for a in range(len(self.positions)))

    def items_below(self, separator_index: int) -> tuple:
        """All items in blocks after the given separator, sorted by id."""
        tail = self.blocks[2 * separator_index + 2:]
        return _sorted_ids(item for block in tail for item in block)


@dataclass(frozen=True, eq=False)
class RankBreakingGraph:
    """One separator's extracted outcomes: the separator beats its bottom set."""

    separator_item: object
    position: int
    bottom_set: tuple

    def __post_init__(self):
        bottom = _sorted_ids(self.bottom_set)
        if len(bottom) == 0:
            raise ValidationError("a separator must have a nonempty bottom set")
        if len(set(bottom)) != len(bottom):
            raise ValidationError("bottom set items must be distinct")
        if self.separator_item in bottom:
            raise ValidationError("the separator cannot appear in its own bottom set")
        object.__setattr__(self, "bottom_set", bottom)
        object.__setattr__(self, "position", int(self.position))

    @property
    def num_pairs(self) -> int:
        return len(self.bottom_set)


def separators_from_dag(dag: PosetDag) -> list:
    """Identify separator nodes and their rank positions.

    A node separates the poset when every other node is comparable to it:
    the remainder splits into the strictly-above and strictly-below sets,
    with the below set nonempty (the above set may be empty).  The position
    is one plus the number of items above.
    """
    nodes = dag.nodes
    below = {node: dag.reachable_from(node) for node in nodes}
    above = {node: set() for node in nodes}
    for u in nodes:
        for v in below[u]:
            above[v].add(u)
    found = []
    for node in nodes:
        if len(above[node]) + len(below[node]) == len(nodes) - 1 and below[node]:
            found.append((node, len(above[node]) + 1))
    found.sort(key=lambda pair: pair[1])
    return found


def partial_order_from_dag(dag: PosetDag) -> PartialOrder:
    """Convert a poset DAG to separator form, dropping intra-gap relations.

    Rejects DAGs with no separator, reporting the non-conforming nodes (the
    estimator is undefined for posets that no separator sequence expresses).
    """
    separators = separators_from_dag(dag)
    if not separators:
        raise ValidationError(
            "poset has no separators; non-conforming nodes: "
            f"{list(_sorted_ids(dag.nodes))}")
    below = {node: dag.reachable_from(node) for node in dag.nodes}
    sep_items = [item for item, _ in separators]
    sep_set = set(sep_items)
    # each non-separator is comparable to every separator, so the count of
    # separators above it names its gap
    gaps = [[] for _ in range(len(separators) + 1)]
    for node in dag.nodes:
        if node in sep_set:
            continue
        n_above = sum(1 for s in sep_items if node in below[s])
        gaps[n_above].append(node)
    blocks = [tuple(gaps[0])]
    for a, item in enumerate(sep_items):
        blocks.append((item,))
        blocks.append(tuple(gaps[a + 1]))
    offering = Offering(items=_sorted_ids(dag.nodes))
    return PartialOrder(offering=offering,
                        positions=tuple(p for _, p in separators),
                        blocks=tuple(blocks))


def partial_order_from_ranking(ranking: Ranking, positions) -> PartialOrder:
    """Cut a total order at the given separator positions."""
    kappa = ranking.kappa
    positions = tuple(int(p) for p in positions)
    if any(p2 <= p1 for p1, p2 in zip(positions, positions[1:])):
        raise ValidationError("separator positions must be strictly increasing")
    if not positions or positions[0] < 1 or positions[-1] >= kappa:
        raise ValidationError(f"separator positions must lie in [1, {kappa - 1}]")
    order = ranking.order
    blocks = [tuple(order[: positions[0] - 1])]
    for p1, p2 in zip(positions, positions[1:]):
        blocks.append((order[p1 - 1],))
        blocks.append(tuple(order[p1:p2 - 1]))
    blocks.append((order[positions[-1] - 1],))
    blocks.append(tuple(order[positions[-1]:]))
    return PartialOrder(offering=ranking.offering, positions=positions,
                        blocks=tuple(blocks))


def break_into_graphs(po: PartialOrder) -> list:
    """Extract one breaking graph per separator: separator vs. its bottom set."""
    graphs = []
    for a, position in enumerate(po.positions):
        graphs.append(RankBreakingGraph(
            separator_item=po.blocks[2 * a + 1][0],
            position=position,
            bottom_set=po.items_below(a)))
    return graphs


def validate_consistent_breaking(graphs, po: PartialOrder) -> bool:
    """Check every extracted pair joins a true separator to an item below it.

    Rejects ad-hoc breakings: any pair among non-separator items, or any
    comparison reaching above a separator, makes the extraction biased.
    """
    sep_positions = dict(zip(po.separator_items, po.positions))
    index = {a: set(po.items_below(a)) for a in range(po.num_separators)}
    by_position = {p: index[a] for a, p in enumerate(po.positions)}
    for graph in graphs:
        position = sep_positions.get(graph.separator_item)
        if position is None or position != graph.position:
            return False
        if not set(graph.bottom_set) <= by_position[position]:
            return False
    return True


def readable_pairs(observation) -> list:
    """All (winner, loser) relations one can read off an observation.

    Supports full rankings (every ordered pair), partial orders (cross-block
    pairs), and poset DAGs (reachability pairs).  This is the raw material
    of full rank-breaking, which weighs all of them equally and is in
    general biased; consistent breaking keeps only separator pairs.
    """
    if isinstance(observation, Ranking):
        order = observation.order
        return [(order[i], order[j])
                for i in range(len(order)) for j in range(i + 1, len(order))]
    if isinstance(observation, PartialOrder):
        blocks = observation.blocks
        pairs = []
        for bi in range(len(blocks)):
            for bj in range(bi + 1, len(blocks)):
                pairs.extend((w, l) for w in blocks[bi] for l in blocks[bj])
        return pairs
    if isinstance(observation, PosetDag):
        pairs = []
        for node in observation.nodes:
            pairs.extend((node, v) for v in _sorted_ids(observation.reachable_from(node)))
        return pairs
    raise ValidationError(
        f"cannot read pairwise relations from {type(observation).__name__}")
