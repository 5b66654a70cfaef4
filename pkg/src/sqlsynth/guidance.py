"""Enumeration guidance: legal choices per decision point, with scores.

The scoring interface deliberately mirrors what a learned ranking model would
provide (a normalized score per candidate output class at each decision), so
the lexical heuristic here can be swapped for any model that emits per-choice
confidences.  Scores at one point always sum to 1, and smoothing keeps every
legal choice strictly positive so guided search stays complete.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from itertools import combinations, combinations_with_replacement, permutations

from . import ast
from .ast import (
    DecisionPoint, HOLE, KW_GROUP, KW_ORDER, KW_WHERE, KEYWORDS,
    PartialQuery, STAR, legal_aggregates, legal_operators,
)
from .catalog import ColumnRef, SchemaCatalog, ValueIndex


@dataclass(frozen=True)
class Literal:
    """A tagged literal from the natural-language query."""
    type: str     # "text" | "number"
    value: object

    def matches(self, kind: str, value) -> bool:
        if self.type != kind:
            return False
        if self.type == "number":
            try:
                return float(self.value) == float(value)
            except (TypeError, ValueError):
                return False
        return str(self.value) == str(value)


@dataclass(frozen=True)
class ScoredChoice:
    choice: object
    score: float


@dataclass(frozen=True)
class ChoiceConfig:
    max_set_size: int = 3


def next_decision(pq: PartialQuery):
    """Next open decision point per the fixed schedule (None iff complete)."""
    return ast.next_decision(pq)


def available_literals(pq: PartialQuery, literals) -> list[Literal]:
    """Literals not yet consumed by the query's resolved constants."""
    remaining = list(literals)
    for kind, value in pq.literal_uses():
        for i, lit in enumerate(remaining):
            if lit.matches(kind, value):
                del remaining[i]
                break
    return remaining


# ---------------------------------------------------------------------------
# legal choice enumeration


def _path_columns(pq: PartialQuery, catalog: SchemaCatalog) -> list[ColumnRef]:
    tables = sorted(pq.join_path.tables)
    return sorted(catalog.columns_of(tables))


def _bare_select_columns(pq: PartialQuery) -> list[ColumnRef]:
    return [item.column for item in pq.select
            if item.aggregate is None and item.column is not STAR]


def _value_choices(column_type: str, op: str, pool: list[Literal]) -> list:
    if op == "BETWEEN":
        values = sorted(_as_number(l.value) for l in pool if l.type == "number")
        pairs = []
        for i in range(len(values)):
            for j in range(i + 1, len(values)):
                pair = (values[i], values[j])
                if pair not in pairs:
                    pairs.append(pair)
        return pairs
    if op == "LIKE":
        return [f"%{l.value}%" for l in pool if l.type == "text"]
    wanted = "number" if column_type == "number" else "text"
    out = []
    for lit in pool:
        if lit.type != wanted:
            continue
        value = _as_number(lit.value) if wanted == "number" else str(lit.value)
        if value not in out:
            out.append(value)
    return out


def _as_number(value):
    num = float(value)
    return int(num) if num.is_integer() else num


def legal_choices(pq: PartialQuery, point: DecisionPoint,
                  catalog: SchemaCatalog, literals,
                  config: ChoiceConfig) -> list:
    """Every legal output class for a decision point, in a deterministic order.

    Type-illegal options (aggregates over text, order comparisons on text,
    LIKE on numbers) are never offered.  Predicate values come exclusively
    from the not-yet-consumed tagged literals.
    """
    area = point.context[0]
    max_k = config.max_set_size

    if point.module == "COL" and area == "select":
        items = sorted(catalog.all_columns()) + [STAR]
        out = []
        for k in range(1, max_k + 1):
            out.extend(permutations(items, k))
        return out

    if point.module == "AGG" and area == "select":
        item = pq.select[point.context[1]]
        return list(legal_aggregates(item.column, catalog))

    if point.module == "KW":
        subsets = []
        for k in range(len(KEYWORDS) + 1):
            for combo in combinations(KEYWORDS, k):
                subsets.append(frozenset(combo))
        return subsets

    if point.module == "COL" and area == "where":
        # Sorted multisets (repetition allowed: the same column may carry two
        # predicates, e.g. a range split across < and >).  Slot order carries
        # no meaning of its own here; disjunctive grouping falls out of the
        # per-gap connective decisions over the sorted slots.
        columns = _path_columns(pq, catalog)
        pool = available_literals(pq, literals)
        budget = {
            "text": sum(1 for l in pool if l.type == "text"),
            "number": sum(1 for l in pool if l.type == "number"),
        }
        out = []
        for k in range(1, max_k + 1):
            for combo in combinations_with_replacement(columns, k):
                need = {"text": 0, "number": 0}
                for col in combo:
                    need[catalog.column_type(col)] += 1
                # every predicate must eventually consume a literal of its type
                if need["text"] <= budget["text"] and \
                        need["number"] <= budget["number"]:
                    out.append(combo)
        return out

    if point.module == "OP" and area == "where":
        pred = pq.where.predicates[point.context[1]]
        return list(legal_operators(pred.column, catalog))

    if point.module == "VALUE" and area == "where":
        pred = pq.where.predicates[point.context[1]]
        pool = available_literals(pq, literals)
        return _value_choices(catalog.column_type(pred.column), pred.op, pool)

    if point.module == "AND/OR":
        return ["AND", "OR"]

    if point.module == "COL" and area == "group":
        columns = _path_columns(pq, catalog)
        required = set(_bare_select_columns(pq))
        out = []
        for k in range(1, max_k + 1):
            for combo in combinations(columns, k):
                if required <= set(combo):
                    out.append(tuple(combo))
        return out

    if point.module == "HAVING":
        return [False, True]

    if point.module == "AGG" and area == "having":
        columns = _path_columns(pq, catalog)
        out = [("COUNT", STAR)]
        for agg in sorted(ast.AGGREGATES):
            for col in columns:
                if catalog.column_type(col) == "number":
                    out.append((agg, col))
        return out

    if point.module == "OP" and area == "having":
        return list(ast.NUMBER_OPS)

    if point.module == "VALUE" and area == "having":
        pool = available_literals(pq, literals)
        return _value_choices("number", pq.having.op, pool)

    if point.module == "COL" and area == "order":
        out: list = list(_path_columns(pq, catalog))
        if isinstance(pq.group_by, tuple):
            out.append(STAR)  # ORDER BY COUNT(*) needs grouping
        return out

    if point.module == "AGG" and area == "order":
        term = pq.order_by.term
        grouped = isinstance(pq.group_by, tuple)
        options = legal_aggregates(term.column, catalog)
        if not grouped:
            return [None] if None in options else []
        if term.column is STAR:
            return ["COUNT"]
        if term.column in (pq.group_by or ()):
            return list(options)
        return [a for a in options if a is not None]

    if point.module == "DESC/ASC":
        pool = available_literals(pq, literals)
        limits = [0]
        for lit in pool:
            if lit.type != "number":
                continue
            value = _as_number(lit.value)
            if isinstance(value, int) and value > 0 and value not in limits:
                limits.append(value)
        return [(direction, k) for direction in ("ASC", "DESC") for k in limits]

    raise ValueError(f"no choice enumeration for {point}")


# ---------------------------------------------------------------------------
# models


class GuidanceModel:
    """Deterministic scorer over (nlq, partial query, catalog, decision point).

    `weigh` returns a raw relevance signal; `sharpness` > 0 turns the signals
    into softmax-style weights (exp of the gap to the best signal), which is
    what concentrates the search on promising branches.
    """

    epsilon = 0.01
    sharpness = 0.0

    def weigh(self, nlq: str, pq: PartialQuery, catalog: SchemaCatalog,
              point: DecisionPoint, choice, literals) -> float:
        raise NotImplementedError


class UniformModel(GuidanceModel):
    def weigh(self, nlq, pq, catalog, point, choice, literals) -> float:
        return 1.0


def uniform_model() -> GuidanceModel:
    return UniformModel()


_AGG_KEYWORDS = {
    "COUNT": ("number of", "how many", "count"),
    "MAX": ("most", "highest", "largest", "maximum", "latest"),
    "MIN": ("least", "lowest", "smallest", "minimum", "fewest"),
    "AVG": ("average", "mean"),
    "SUM": ("total", "sum"),
}
_OP_KEYWORDS = {
    "<": ("before", "less than", "fewer than", "under", "earlier than", "below"),
    ">": ("after", "more than", "greater", "over", "later than", "above",
          "exceed"),
    "<=": ("at most", "no more than", "up to"),
    ">=": ("at least", "no less than", "or more"),
    "!=": ("not ", "except", "excluding", "other than"),
    "BETWEEN": ("between",),
    "LIKE": ("like", "contain", "containing", "includes"),
}
_DESC_KEYWORDS = ("most", "highest", "descending", "latest", "newest", "top")
_ASC_KEYWORDS = ("least", "lowest", "ascending", "earliest", "oldest")
_ORDER_KEYWORDS = ("order", "ordered", "sorted", "sort", "ranked",
                   "earliest", "latest", "recent", "oldest", "newest", "top")
_GROUP_KEYWORDS = ("each", "per", "every", "number of", "how many")
_HAVING_KEYWORDS = ("more than", "less than", "at least", "at most",
                    "over", "under", "fewer than")


def tokenize(text: str) -> list[str]:
    return [t for t in re.split(r"[^a-z0-9]+", text.lower()) if t]


def _query_tokens(text: str) -> set[str]:
    """NLQ tokens plus naive singular forms, so "years" matches "year"."""
    tokens = set(tokenize(text))
    for t in list(tokens):
        if len(t) > 3 and t.endswith("s"):
            tokens.add(t[:-1])
    return tokens


@dataclass(frozen=True)
class LexicalConfig:
    w_lit: float = 2.0
    w_agg: float = 1.5
    w_bare: float = 1.0        # baseline for projecting a column unaggregated
    epsilon: float = 0.01
    sharpness: float = 6.0     # softmax temperature over raw signals
    value_index: ValueIndex | None = None


class LexicalModel(GuidanceModel):
    """Token-overlap scoring with literal and aggregate keyword boosts."""

    def __init__(self, config: LexicalConfig):
        self.config = config
        self.epsilon = config.epsilon
        self.sharpness = config.sharpness
        self._token_cache: dict[str, tuple[str, set[str]]] = {}

    def _nlq_forms(self, nlq: str) -> tuple[str, set[str]]:
        cached = self._token_cache.get(nlq)
        if cached is None:
            cached = (nlq.lower(), _query_tokens(nlq))
            if len(self._token_cache) > 64:
                self._token_cache.clear()
            self._token_cache[nlq] = cached
        return cached

    # -- helpers ------------------------------------------------------------

    def _column_overlap(self, column, nlq_tokens: set[str]) -> float:
        if column is STAR:
            return 0.0
        col_tokens = set(tokenize(column.column))
        table_tokens = set(tokenize(column.table))
        score = 0.0
        if col_tokens:
            score += len(col_tokens & nlq_tokens) / len(col_tokens)
        if table_tokens:
            score += 0.3 * len(table_tokens & nlq_tokens) / len(table_tokens)
        return score

    def _literal_columns(self, literals) -> set[ColumnRef]:
        index = self.config.value_index
        if index is None:
            return set()
        out: set[ColumnRef] = set()
        for lit in literals:
            if lit.type == "text":
                out |= index.occurrences(str(lit.value))
        return out

    def _aggregate_bonus(self, agg, nlq: str) -> float:
        # a keyword hit makes the aggregate as plausible as a plain projection,
        # not more: phrases like "most recent" routinely describe ordering
        if not agg:
            return self.config.w_bare
        hits = _AGG_KEYWORDS.get(agg, ())
        return self.config.w_bare if any(k in nlq for k in hits) else 0.0

    # -- scoring ------------------------------------------------------------

    def weigh(self, nlq, pq, catalog, point, choice, literals) -> float:
        lowered, nlq_tokens = self._nlq_forms(nlq)
        cfg = self.config
        area = point.context[0]

        if point.module == "COL" and area in ("select", "where", "group"):
            columns = [c for c in choice if c is not STAR] \
                if isinstance(choice, tuple) else [choice]
            if not columns:
                return 0.0
            score = sum(self._column_overlap(c, nlq_tokens) for c in columns)
            score /= len(columns)
            if area == "where":
                boosted = self._literal_columns(available_literals(pq, literals))
                score += cfg.w_lit * sum(1 for c in columns if c in boosted)
            return score

        if point.module == "COL" and area == "order":
            return self._column_overlap(choice, nlq_tokens)

        if point.module == "AGG":
            if isinstance(choice, tuple):  # having: (aggregate, column)
                agg, column = choice
                return (self._aggregate_bonus(agg, lowered)
                        + self._column_overlap(column, nlq_tokens))
            return self._aggregate_bonus(choice, lowered)

        if point.module == "KW":
            score = 0.0
            if KW_WHERE in choice and available_literals(pq, literals):
                score += cfg.w_lit
            if KW_GROUP in choice and any(k in lowered for k in _GROUP_KEYWORDS):
                score += cfg.w_agg
            if KW_ORDER in choice and any(k in lowered for k in _ORDER_KEYWORDS):
                score += cfg.w_agg
            return score

        if point.module == "OP":
            # equality is the default reading; comparison phrasing moves mass
            if choice == "=":
                return cfg.w_bare
            hits = _OP_KEYWORDS.get(choice, ())
            return cfg.w_agg if any(k in lowered for k in hits) else 0.0

        if point.module == "VALUE":
            index = self.config.value_index
            if area == "where" and index is not None:
                pred = pq.where.predicates[point.context[1]]
                raw = choice
                if isinstance(raw, str):
                    raw = raw.strip("%")
                if pred.column in index.occurrences(str(raw)):
                    return cfg.w_lit
            return 0.0

        if point.module == "HAVING":
            wants = any(k in lowered for k in _HAVING_KEYWORDS)
            return cfg.w_agg if (bool(choice) == wants) else 0.0

        if point.module == "DESC/ASC":
            direction, limit = choice
            score = 0.0
            if direction == "DESC" and any(k in lowered for k in _DESC_KEYWORDS):
                score += cfg.w_agg
            if direction == "ASC" and any(k in lowered for k in _ASC_KEYWORDS):
                score += cfg.w_agg
            if limit > 0 and str(limit) in nlq_tokens and \
                    any(k in lowered for k in ("top", "first", "limit")):
                score += cfg.w_agg
            return score

        return 0.0  # AND/OR and anything else: uniform after smoothing


def lexical_model(config: LexicalConfig | None = None) -> GuidanceModel:
    return LexicalModel(config or LexicalConfig())


# ---------------------------------------------------------------------------
# normalized scoring


def choice_sort_key(choice) -> str:
    """Stable textual form of a choice, used to break score ties."""
    if isinstance(choice, frozenset):
        return ",".join(sorted(choice))
    if isinstance(choice, tuple):
        return ",".join(choice_sort_key(c) for c in choice)
    if choice is STAR:
        return "*"
    if choice is None:
        return ""
    return str(choice)


def score_choices(model: GuidanceModel, nlq: str, pq: PartialQuery,
                  catalog: SchemaCatalog, point: DecisionPoint,
                  literals=(), config: ChoiceConfig | None = None
                  ) -> list[ScoredChoice]:
    """All legal choices for `point`, scored, normalized to sum to one.

    Smoothing keeps every score strictly positive; equal scores are ordered
    by the lexicographic rendering of the choice for determinism.
    """
    config = config or ChoiceConfig()
    options = legal_choices(pq, point, catalog, literals, config)
    if not options:
        return []
    raws = [model.weigh(nlq, pq, catalog, point, choice, literals)
            for choice in options]
    if model.sharpness > 0:
        from math import exp
        top = max(raws)
        weights = [exp(model.sharpness * (raw - top)) + model.epsilon
                   for raw in raws]
    else:
        weights = [raw + model.epsilon for raw in raws]
    total = sum(weights)
    scored = [ScoredChoice(choice, w / total)
              for choice, w in zip(options, weights)]
    scored.sort(key=lambda sc: (-sc.score, choice_sort_key(sc.choice)))
    return scored
