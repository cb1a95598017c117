"""Dataset ingestion and results emission.

Wire formats:

* partial orders: JSON lines ``{"offering": [...], "positions": [...],
  "blocks": [[...], ...]}`` with block sizes validated against positions;
* strict-order-complete text: a header line of comma-separated item ids,
  then ``count: id,id,...`` lines of complete rankings;
* ratings: CSV ``user,item,rating`` triples, turned into partial orders by
  grouping each user's items into descending-rating blocks (ties share a
  block; ratings are bucketed only by exact value).
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass

from .breaking import PartialOrder
from .errors import ParseError, ValidationError
from .model import Offering, Ranking

logger = logging.getLogger(__name__)


def parse_partial_orders_jsonl(path) -> list:
    orders = []
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from None
            try:
                offering = Offering(items=tuple(record["offering"]))
                orders.append(PartialOrder(
                    offering=offering,
                    positions=tuple(record["positions"]),
                    blocks=tuple(tuple(block) for block in record["blocks"])))
            except KeyError as exc:
                raise ParseError(f"{path}:{lineno}: missing field {exc.args[0]!r}") from None
            except ValidationError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from None
    return orders


def write_partial_orders_jsonl(orders, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for po in orders:
            handle.write(json.dumps({
                "offering": list(po.offering.items),
                "positions": list(po.positions),
                "blocks": [list(block) for block in po.blocks],
            }) + "\n")


def parse_soc(path) -> list:
    """Parse strict-order-complete text into count-expanded complete rankings."""
    rankings = []
    with open(path, "r", encoding="utf-8") as handle:
        header = None
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            if header is None:
                header = tuple(token.strip() for token in line.split(","))
                if len(set(header)) != len(header) or len(header) < 2:
                    raise ParseError(f"{path}:{lineno}: header must list distinct item ids")
                offering = Offering(items=header)
                continue
            if ":" not in line:
                raise ParseError(f"{path}:{lineno}: expected 'count: id,id,...'")
            count_text, _, order_text = line.partition(":")
            try:
                count = int(count_text.strip())
            except ValueError:
                raise ParseError(f"{path}:{lineno}: count {count_text.strip()!r} "
                                 "is not an integer") from None
            if count < 1:
                raise ParseError(f"{path}:{lineno}: count must be at least 1")
            order = tuple(token.strip() for token in order_text.split(","))
            unknown = [item for item in order if item not in set(header)]
            if unknown:
                raise ParseError(f"{path}:{lineno}: unknown item ids {unknown}")
            try:
                ranking = Ranking(offering=offering, order=order)
            except ValidationError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from None
            rankings.extend([ranking] * count)
        if header is None:
            raise ParseError(f"{path}: empty file has no header")
    return rankings


@dataclass(frozen=True, eq=False)
class RatingsTable:
    """Deduplicated (user, item, rating) triples; the last rating wins."""

    triples: tuple

    @classmethod
    def from_rows(cls, rows) -> "RatingsTable":
        seen = {}
        duplicates = 0
        for user, item, rating in rows:
            if (user, item) in seen:
                duplicates += 1
            seen[(user, item)] = float(rating)
        if duplicates:
            logger.info("ratings: %d duplicate (user, item) pairs; kept the last rating",
                        duplicates)
        triples = tuple((user, item, rating) for (user, item), rating in seen.items())
        return cls(triples=triples)


def parse_ratings_csv(path) -> RatingsTable:
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        for lineno, row in enumerate(reader, start=1):
            if not row or (lineno == 1 and [c.strip().lower() for c in row] ==
                           ["user", "item", "rating"]):
                continue
            if len(row) != 3:
                raise ParseError(f"{path}:{lineno}: expected user,item,rating")
            user, item, rating_text = (c.strip() for c in row)
            try:
                rating = float(rating_text)
            except ValueError:
                raise ParseError(f"{path}:{lineno}: rating {rating_text!r} "
                                 "is not numeric") from None
            rows.append((user, item, rating))
    return RatingsTable.from_rows(rows)


def ratings_to_partial_orders(table: RatingsTable, tie_policy: str = "block"):
    """Group each user's items by descending rating; singleton levels separate.

    Returns ``(orders, dropped)`` where ``dropped`` counts users whose
    grouping yields no separator (e.g. all items tied).  Tied items always
    share an unordered block; that is the only supported tie policy, since
    random tie-breaking would bias the extracted comparisons.
    """
    if tie_policy != "block":
        raise ValidationError(f"unknown tie policy {tie_policy!r}; only 'block' is supported")
    by_user = {}
    for user, item, rating in table.triples:
        by_user.setdefault(user, []).append((item, rating))
    orders = []
    dropped = 0
    for user in sorted(by_user, key=str):
        pairs = by_user[user]
        if len(pairs) < 2:
            dropped += 1
            continue
        levels = {}
        for item, rating in pairs:
            levels.setdefault(rating, []).append(item)
        ordered_levels = [sorted(levels[r], key=str) for r in sorted(levels, reverse=True)]
        kappa = len(pairs)
        blocks = []
        positions = []
        gap = []
        rank = 0
        for level in ordered_levels:
            if len(level) == 1 and rank + 1 <= kappa - 1:
                blocks.append(tuple(gap))
                gap = []
                blocks.append((level[0],))
                positions.append(rank + 1)
            else:
                gap.extend(level)
            rank += len(level)
        blocks.append(tuple(gap))
        if not positions:
            dropped += 1
            continue
        items = tuple(sorted((item for item, _ in pairs), key=str))
        orders.append(PartialOrder(offering=Offering(items=items),
                                   positions=tuple(positions), blocks=tuple(blocks)))
    if dropped:
        logger.info("ratings: dropped %d users with no separator", dropped)
    return orders, dropped


def _format_cell(value) -> str:
    if isinstance(value, bool):
        return str(value)
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def emit_csv(rows, path, columns) -> None:
    """Write rows (dicts keyed by column) with stable numeric formatting.

    UTF-8, header row, RFC-4180 quoting and line endings; identical rows
    produce identical bytes (floats carry 17 significant digits).
    """
    try:
        with open(path, "w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle, quoting=csv.QUOTE_MINIMAL)
            writer.writerow(columns)
            for row in rows:
                writer.writerow([_format_cell(row[col]) for col in columns])
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path}: {exc}") from exc


def read_csv_rows(path) -> list:
    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        rows = list(reader)
    if not rows:
        raise ParseError(f"{path}: empty CSV")
    header = rows[0]
    return [dict(zip(header, row)) for row in rows[1:]]
