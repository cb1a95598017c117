"""Input validation helpers for the estimator API."""

from __future__ import annotations

from .breaking import PartialOrder, partial_order_from_ranking
from .errors import ValidationError
from .model import Ranking


def check_partial_orders(X) -> list:
    """Coerce estimator input into a list of partial orders.

    Full rankings are accepted and treated as fully separated partial
    orders (every position a separator).
    """
    orders = []
    for k, obs in enumerate(X):
        if isinstance(obs, PartialOrder):
            orders.append(obs)
        elif isinstance(obs, Ranking):
            orders.append(partial_order_from_ranking(obs, tuple(range(1, obs.kappa))))
        else:
            raise ValidationError(
                f"sample {k}: expected PartialOrder or Ranking, got {type(obs).__name__}")
    if not orders:
        raise ValidationError("need at least one sample")
    return orders


def check_topl_orders(X) -> list:
    """Validate that every sample reveals a ranked prefix (positions 1..ell)."""
    orders = check_partial_orders(X)
    for k, po in enumerate(orders):
        ell = po.num_separators
        if po.positions != tuple(range(1, ell + 1)):
            raise ValidationError(
                f"sample {k}: separator positions {po.positions} are not a "
                "top prefix (1, ..., ell)")
    return orders
