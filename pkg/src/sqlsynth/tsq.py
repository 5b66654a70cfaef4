"""Table sketch queries: typed example tuples plus sort/limit metadata.

A sketch constrains the desired query's output.  `satisfies` is the full
(oracle) check against an executed result set: type annotations must match the
projection, each example tuple needs its own distinct witness row (injective
assignment), an asserted sort requires witnesses in tuple order, and a limit
bounds the result size.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field


class TsqError(Exception):
    """Malformed sketch serialization or inconsistent sketch structure."""


@dataclass(frozen=True)
class ExampleCell:
    kind: str               # "exact" | "empty" | "range"
    value: object = None    # exact value, or (low, high) for ranges

    def __post_init__(self):
        if self.kind not in ("exact", "empty", "range"):
            raise TsqError(f"unknown cell kind {self.kind!r}")
        if self.kind == "exact" and (self.value is None or self.value == ""):
            raise TsqError("exact cell needs a nonempty value")
        if self.kind == "range":
            lo, hi = self.value
            if not all(isinstance(v, (int, float)) for v in (lo, hi)):
                raise TsqError("range bounds must be numeric")
            if lo > hi:
                raise TsqError(f"malformed range [{lo}, {hi}]")


EMPTY_CELL = ExampleCell("empty")


@dataclass(frozen=True)
class ExampleTuple:
    cells: tuple[ExampleCell, ...]

    def __len__(self):
        return len(self.cells)


@dataclass(frozen=True)
class TableSketchQuery:
    types: tuple[str, ...] | None = None        # alpha; None = unconstrained
    tuples: tuple[ExampleTuple, ...] = ()       # chi
    sorted: bool = False                        # tau
    limit: int = 0                              # k; 0 = none

    def __post_init__(self):
        if self.types is not None:
            for t in self.types:
                if t not in ("text", "number"):
                    raise TsqError(f"unknown type annotation {t!r}")
            for tup in self.tuples:
                if len(tup) != len(self.types):
                    raise TsqError(
                        f"tuple arity {len(tup)} != annotation arity {len(self.types)}")
            for tup in self.tuples:
                for cell, ann in zip(tup.cells, self.types):
                    if cell.kind == "range" and ann == "text":
                        raise TsqError("range cell on a text column")
        else:
            arities = {len(t) for t in self.tuples}
            if len(arities) > 1:
                raise TsqError("example tuples have inconsistent arity")
        if self.limit < 0:
            raise TsqError("limit must be >= 0")

    def is_empty(self) -> bool:
        return (self.types is None and not self.tuples
                and not self.sorted and self.limit == 0)


EMPTY_TSQ = TableSketchQuery()


# ---------------------------------------------------------------------------
# serialization


def _cell_from_json(obj) -> ExampleCell:
    if obj is None:
        return EMPTY_CELL
    if isinstance(obj, dict):
        if "exact" in obj:
            return ExampleCell("exact", obj["exact"])
        if "range" in obj:
            lo, hi = obj["range"]
            return ExampleCell("range", (lo, hi))
    raise TsqError(f"malformed cell {obj!r}")


def parse_tsq(source) -> TableSketchQuery:
    """Parse the JSON serialization (text, parsed dict, or file content)."""
    if isinstance(source, (str, bytes)):
        try:
            data = json.loads(source)
        except ValueError as exc:
            raise TsqError(f"invalid sketch JSON: {exc}") from exc
    else:
        data = source
    if not isinstance(data, dict):
        raise TsqError("sketch serialization must be a JSON object")
    types = data.get("types")
    tuples = tuple(
        ExampleTuple(tuple(_cell_from_json(c) for c in row))
        for row in data.get("tuples") or ())
    return TableSketchQuery(
        types=tuple(types) if types else None,
        tuples=tuples,
        sorted=bool(data.get("sorted", False)),
        limit=int(data.get("limit", 0)),
    )


def tsq_to_json(tsq: TableSketchQuery) -> dict:
    def cell(c: ExampleCell):
        if c.kind == "empty":
            return None
        if c.kind == "exact":
            return {"exact": c.value}
        return {"range": list(c.value)}

    return {
        "types": list(tsq.types) if tsq.types is not None else [],
        "tuples": [[cell(c) for c in t.cells] for t in tsq.tuples],
        "sorted": tsq.sorted,
        "limit": tsq.limit,
    }


# ---------------------------------------------------------------------------
# matching


def _is_number(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def cell_matches(cell: ExampleCell, value) -> bool:
    """Whether a database value satisfies one example cell.

    NULL matches nothing: an empty cell means "any value", and NULL is the
    absence of a value.  Text comparison is case-sensitive and exact; numeric
    cells only match numeric storage (mirroring typed SQL comparison).
    """
    if value is None:
        return False
    if cell.kind == "empty":
        return True
    if cell.kind == "exact":
        if _is_number(cell.value):
            return _is_number(value) and float(cell.value) == float(value)
        return isinstance(value, str) and value == cell.value
    lo, hi = cell.value
    return _is_number(value) and lo <= value <= hi


def tuple_matches(example: ExampleTuple, row) -> bool:
    if len(example.cells) != len(row):
        return False
    return all(cell_matches(c, v) for c, v in zip(example.cells, row))


def _injective_assignment(tuples, rows) -> bool:
    """Maximum bipartite matching: every example tuple gets a distinct row."""
    match_of_row: dict[int, int] = {}
    candidates = [
        [j for j, row in enumerate(rows) if tuple_matches(t, row)]
        for t in tuples
    ]

    def augment(i: int, visited: set[int]) -> bool:
        for j in candidates[i]:
            if j in visited:
                continue
            visited.add(j)
            if j not in match_of_row or augment(match_of_row[j], visited):
                match_of_row[j] = i
                return True
        return False

    for i in range(len(tuples)):
        if not augment(i, set()):
            return False
    return True


def _ordered_assignment(tuples, rows) -> bool:
    """Greedy leftmost matching with strictly increasing row positions."""
    position = -1
    for example in tuples:
        found = False
        for j in range(position + 1, len(rows)):
            if tuple_matches(example, rows[j]):
                position = j
                found = True
                break
        if not found:
            return False
    return True


def satisfies(tsq: TableSketchQuery, result: list[tuple], meta: dict) -> bool:
    """Full satisfaction check of a sketch against an executed result.

    `meta` carries {"has_order_by": bool, "limit": int, "projected_types":
    [..]} for the executed query.  The sort condition requires the query to
    have a sort operator and SOME injective assignment in tuple order; with
    fewer than two example tuples only the sort operator is required.
    """
    if tsq.types is not None:
        if tuple(meta.get("projected_types") or ()) != tuple(tsq.types):
            return False
    if tsq.tuples:
        if tsq.sorted and len(tsq.tuples) >= 2:
            if not meta.get("has_order_by"):
                return False
            if not _ordered_assignment(tsq.tuples, result):
                return False
        elif not _injective_assignment(tsq.tuples, result):
            return False
    if tsq.sorted and not meta.get("has_order_by"):
        return False
    if tsq.limit > 0 and len(result) > tsq.limit:
        return False
    return True
