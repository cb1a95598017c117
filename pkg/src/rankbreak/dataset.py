"""Broken datasets: extracted comparisons plus per-separator weights.

The estimator consumes a bag of weighted pairwise outcomes.  How much each
separator's comparisons count is the one free choice; the data-driven
("optimal") scheme weighs a separator at position p in an offering of size
kappa by 1 / (kappa - p), which equalizes the information contributed per
extracted pair across heterogeneous offerings.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .breaking import PartialOrder, _sorted_ids, break_into_graphs
from .errors import ValidationError

WEIGHT_KINDS = ("optimal", "uniform", "inverse-kappa", "custom")


@dataclass(frozen=True, eq=False)
class WeightScheme:
    """Per-(sample, separator) weight rule.

    ``table`` maps ``(sample_index, separator_index)`` to a weight and is
    present exactly when ``kind == "custom"``.
    """

    kind: str = "optimal"
    table: dict = None

    def __post_init__(self):
        if self.kind not in WEIGHT_KINDS:
            raise ValidationError(f"unknown weight scheme {self.kind!r}")
        if (self.table is not None) != (self.kind == "custom"):
            raise ValidationError("a weight table is required for (and only for) custom schemes")


def weights_for(scheme: WeightScheme, samples) -> tuple:
    """Weight per (sample, separator): optimal 1/(kappa-p), uniform 1, inverse-kappa 1/kappa."""
    if isinstance(samples, BrokenDataset):
        samples = samples.samples
    weights = []
    for j, (offering, graphs) in enumerate(_normalize_samples(samples)):
        kappa = offering.kappa
        row = []
        for a, graph in enumerate(graphs):
            if scheme.kind == "optimal":
                lam = 1.0 / (kappa - graph.position)
            elif scheme.kind == "uniform":
                lam = 1.0
            elif scheme.kind == "inverse-kappa":
                lam = 1.0 / kappa
            else:
                try:
                    lam = float(scheme.table[(j, a)])
                except KeyError:
                    raise ValidationError(
                        f"custom weight table is missing entry for sample {j}, separator {a}") from None
            if lam < 0:
                raise ValidationError("weights must be nonnegative")
            row.append(lam)
        weights.append(tuple(row))
    return tuple(weights)


def _normalize_samples(samples):
    out = []
    for sample in samples:
        if isinstance(sample, PartialOrder):
            out.append((sample.offering, tuple(break_into_graphs(sample))))
        else:
            offering, graphs = sample
            out.append((offering, tuple(graphs)))
    return out


@dataclass(frozen=True, eq=False)
class BrokenDataset:
    """Extracted breaking graphs, their weights, and the dense item index."""

    samples: tuple            # ((Offering, (RankBreakingGraph, ...)), ...)
    weights: tuple            # ((lambda per separator, ...), ...)
    index: dict               # item id -> dense index
    d: int

    def __post_init__(self):
        if len(self.weights) != len(self.samples):
            raise ValidationError("need one weight row per sample")
        for (offering, graphs), row in zip(self.samples, self.weights):
            if len(row) != len(graphs):
                raise ValidationError("need one weight per separator")
            if any(lam < 0 for lam in row):
                raise ValidationError("weights must be nonnegative")
            members = set(offering.items)
            for graph in graphs:
                if graph.separator_item not in members or not set(graph.bottom_set) <= members:
                    raise ValidationError("breaking graph references items outside its offering")
        if sorted(self.index.values()) != list(range(self.d)):
            raise ValidationError("dense indices must be contiguous 0..d-1")

    @classmethod
    def from_partial_orders(cls, partial_orders, scheme: WeightScheme = None) -> "BrokenDataset":
        scheme = scheme or WeightScheme("optimal")
        samples = tuple(_normalize_samples(partial_orders))
        if not samples:
            raise ValidationError("dataset needs at least one sample")
        items = _sorted_ids({item for offering, _ in samples for item in offering.items})
        index = {item: k for k, item in enumerate(items)}
        weights = weights_for(scheme, samples)
        return cls(samples=samples, weights=weights, index=index, d=len(items))

    def reweighted(self, scheme: WeightScheme) -> "BrokenDataset":
        return BrokenDataset(samples=self.samples,
                             weights=weights_for(scheme, self.samples),
                             index=self.index, d=self.d)

    @property
    def items(self) -> tuple:
        ordered = [None] * self.d
        for item, k in self.index.items():
            ordered[k] = item
        return tuple(ordered)

    @property
    def n_samples(self) -> int:
        return len(self.samples)

    def effective_sample_size(self) -> int:
        """Total number of separators across samples."""
        return sum(len(graphs) for _, graphs in self.samples)

    def pair_arrays(self):
        """Directed comparisons as dense-index arrays (winner, loser, weight).

        Accumulation order is fixed (samples in order, separators ascending,
        bottom items sorted) so downstream sums are bit-reproducible.
        """
        winners, losers, lams = [], [], []
        for (offering, graphs), row in zip(self.samples, self.weights):
            for graph, lam in zip(graphs, row):
                w = self.index[graph.separator_item]
                for item in graph.bottom_set:
                    winners.append(w)
                    losers.append(self.index[item])
                    lams.append(lam)
        return (np.asarray(winners, dtype=np.int64),
                np.asarray(losers, dtype=np.int64),
                np.asarray(lams, dtype=float))

    def sample_stats(self):
        """Per-sample (kappa, num separators, positions, weights) views."""
        kappas = np.array([offering.kappa for offering, _ in self.samples], dtype=np.int64)
        ells = np.array([len(graphs) for _, graphs in self.samples], dtype=np.int64)
        positions = [np.array([g.position for g in graphs], dtype=np.int64)
                     for _, graphs in self.samples]
        lams = [np.asarray(row, dtype=float) for row in self.weights]
        return kappas, ells, positions, lams
