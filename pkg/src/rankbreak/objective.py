"""Objective, gradient, and Hessian for weighted pairwise log-likelihoods.

Every extracted comparison (winner i', loser i) with weight lam contributes
``lam * (theta_i' - log(exp(theta_i) + exp(theta_i')))``.  Duplicated pairs
aggregate by summing weights, which leaves all three quantities unchanged
and keeps evaluation linear in the number of distinct pairs.
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit

from .dataset import BrokenDataset
from .errors import ValidationError
from .model import _as_lookup


def aggregate_pairs(winners, losers, weights, n_items):
    """Sum weights over identical directed pairs; output sorted by (winner, loser)."""
    winners = np.asarray(winners, dtype=np.int64)
    losers = np.asarray(losers, dtype=np.int64)
    weights = np.asarray(weights, dtype=float)
    if winners.size == 0:
        return winners, losers, weights
    keys = winners * np.int64(n_items) + losers
    uniq, inverse = np.unique(keys, return_inverse=True)
    summed = np.bincount(inverse, weights=weights, minlength=uniq.size)
    return uniq // n_items, uniq % n_items, summed


def pairwise_log_likelihood(theta: np.ndarray, winners, losers, weights) -> float:
    margins = theta[winners] - theta[losers]
    return float(np.sum(weights * -np.logaddexp(0.0, -margins)))


def pairwise_gradient(theta: np.ndarray, winners, losers, weights) -> np.ndarray:
    margins = theta[winners] - theta[losers]
    pull = weights * expit(-margins)  # lam * (1 - P[winner beats loser])
    grad = np.bincount(winners, weights=pull, minlength=theta.size)
    grad -= np.bincount(losers, weights=pull, minlength=theta.size)
    return grad

def pairwise_hessian(theta: np.ndarray, winners, losers, weights) -> np.ndarray:
    margins = theta[winners] - theta[losers]
    curve = weights * expit(margins) * expit(-margins)
    d = theta.size
    hess = np.zeros((d, d))
    np.add.at(hess, (winners, losers), curve)
    np.add.at(hess, (losers, winners), curve)
    diag = np.bincount(winners, weights=curve, minlength=d)
    diag += np.bincount(losers, weights=curve, minlength=d)
    hess[np.diag_indices(d)] -= diag
    return hess


def _dense_theta(theta, dataset: BrokenDataset) -> np.ndarray:
    if isinstance(theta, np.ndarray):
        if theta.shape != (dataset.d,):
            raise ValidationError(f"theta must have shape ({dataset.d},)")
        return theta.astype(float)
    lookup = _as_lookup(theta)
    return np.array([lookup(item) for item in dataset.items], dtype=float)


def rb_log_likelihood(theta, dataset: BrokenDataset) -> float:
    """Weighted sum of paired log-likelihoods over all extracted comparisons."""
    arr = _dense_theta(theta, dataset)
    return pairwise_log_likelihood(arr, *dataset.pair_arrays())


def rb_gradient(theta, dataset: BrokenDataset) -> np.ndarray:
    """Gradient over the dataset's dense index; components sum to zero."""
    arr = _dense_theta(theta, dataset)
    return pairwise_gradient(arr, *dataset.pair_arrays())


def rb_hessian(theta, dataset: BrokenDataset) -> np.ndarray:
    """Hessian over the dense index: negated weighted-Laplacian structure.

    Row sums are zero and the negated matrix is positive semi-definite.
    """
    arr = _dense_theta(theta, dataset)
    return pairwise_hessian(arr, *dataset.pair_arrays())


class ToplGroups:
    """Top-prefix ranking data grouped by offering size for vector evaluation.

    Each group holds an (m, kappa) matrix of dense item indices in rank
    order and the per-row number of revealed positions.
    """

    def __init__(self, groups, n_items):
        # groups: list of (rank_matrix, ells) with homogeneous kappa per entry
        self.groups = [(np.asarray(mat, dtype=np.int64), np.asarray(ells, dtype=np.int64))
                       for mat, ells in groups]
        self.n_items = int(n_items)
        for mat, ells in self.groups:
            if np.any(ells < 1) or np.any(ells > mat.shape[1] - 1):
                raise ValidationError("each row must reveal between 1 and kappa-1 positions")

    @classmethod
    def from_rank_lists(cls, rank_rows, ells, n_items):
        by_kappa = {}
        for row, ell in zip(rank_rows, ells):
            by_kappa.setdefault(len(row), ([], []))
            by_kappa[len(row)][0].append(row)
            by_kappa[len(row)][1].append(ell)
        groups = [by_kappa[k] for k in sorted(by_kappa)]
        return cls(groups, n_items)

    def _suffix_lse(self, values):
        return np.logaddexp.accumulate(values[:, ::-1], axis=1)[:, ::-1]

    def log_likelihood(self, theta: np.ndarray) -> float:
        total = 0.0
        for mat, ells in self.groups:
            vals = theta[mat]
            lse = self._suffix_lse(vals)
            mask = np.arange(mat.shape[1])[None, :] < ells[:, None]
            total += float(np.sum((vals - lse)[mask]))
        return total

    def gradient(self, theta: np.ndarray) -> np.ndarray:
        grad = np.zeros(self.n_items)
        for mat, ells in self.groups:
            vals = theta[mat]
            lse = self._suffix_lse(vals)
            mask = np.arange(mat.shape[1])[None, :] < ells[:, None]
            # prefix sums of 1/Z_m over revealed positions m; the column-c item
            # appears in the denominators of every revealed position m <= c
            inv_z = np.where(mask, np.exp(-lse), 0.0)
            prefix = np.cumsum(inv_z, axis=1)
            contrib = mask.astype(float) - np.exp(vals) * prefix
            grad += np.bincount(mat.ravel(), weights=contrib.ravel(),
                                minlength=self.n_items)
        return grad
