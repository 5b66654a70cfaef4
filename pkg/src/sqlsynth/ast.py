"""Partial SQL query trees: any element may be a placeholder.

A `PartialQuery` is immutable; resolving a placeholder produces a new value.
Executable rendering is deliberately conservative so that the result set of a
partial query is a superset of the result set of any of its completions
(unresolved predicates and clauses are dropped, and a predicate chain is only
rendered once its connectives can no longer turn disjunctive).  That superset
property is what makes pruning on partial queries safe.

WHERE clauses are flat predicate chains with one connective per gap, read with
SQL precedence (AND binds tighter than OR), i.e. a disjunction of conjunctive
groups.  Arbitrary nesting is out of scope.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .catalog import ColumnRef, SchemaCatalog, FkPkEdge


class ScopeError(Exception):
    """Query uses constructs outside the supported SPJA subset."""


class QueryBuildError(Exception):
    """Illegal choice for a decision point, or rendering precondition unmet."""


class _Hole:
    """Singleton placeholder marker."""
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "?"


class _Star:
    """Singleton `*` projection marker (only valid under COUNT)."""
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "*"


HOLE = _Hole()
STAR = _Star()

KW_WHERE = "WHERE"
KW_GROUP = "GROUP BY"
KW_ORDER = "ORDER BY"
KEYWORDS = (KW_WHERE, KW_GROUP, KW_ORDER)

AGGREGATES = ("MAX", "MIN", "SUM", "COUNT", "AVG")
NUMBER_OPS = ("=", "!=", ">", "<", ">=", "<=", "BETWEEN")
TEXT_OPS = ("=", "!=", "LIKE")
ALL_OPS = ("=", "!=", ">", "<", ">=", "<=", "BETWEEN", "LIKE")


def legal_aggregates(column, catalog: SchemaCatalog) -> tuple:
    """Aggregate options for a projection of `column` (None = bare)."""
    if column is STAR:
        return ("COUNT",)
    if catalog.column_type(column) == "number":
        return (None,) + tuple(AGGREGATES)
    return (None, "COUNT")


def legal_operators(column, catalog: SchemaCatalog) -> tuple[str, ...]:
    return NUMBER_OPS if catalog.column_type(column) == "number" else TEXT_OPS


# ---------------------------------------------------------------------------
# structure


@dataclass(frozen=True)
class SelectItem:
    """A projection or aggregate term: column (or `*`) plus optional aggregate."""
    column: object            # ColumnRef | STAR
    aggregate: object = None  # str | None | HOLE

    def resolved(self) -> bool:
        return self.aggregate is not HOLE

    def is_aggregate(self) -> bool:
        return self.aggregate not in (None, HOLE)

    def output_type(self, catalog: SchemaCatalog) -> str:
        if self.is_aggregate():
            return "number"
        if self.column is STAR:
            return "number"
        return catalog.column_type(self.column)


@dataclass(frozen=True)
class Predicate:
    column: ColumnRef
    op: object = HOLE     # str | HOLE
    value: object = HOLE  # str | int | float | (lo, hi) | HOLE

    def resolved(self) -> bool:
        return self.op is not HOLE and self.value is not HOLE


@dataclass(frozen=True)
class PredicateChain:
    """Predicates joined by per-gap connectives under SQL precedence."""
    predicates: tuple[Predicate, ...]
    connectives: tuple = ()   # len = len(predicates) - 1; "AND" | "OR" | HOLE

    def resolved(self) -> bool:
        return (all(p.resolved() for p in self.predicates)
                and all(c is not HOLE for c in self.connectives))

    def connectives_resolved(self) -> bool:
        return all(c is not HOLE for c in self.connectives)

    def groups(self) -> list[list[Predicate]]:
        """Conjunctive groups of the disjunction (requires resolved connectives)."""
        groups: list[list[Predicate]] = [[self.predicates[0]]]
        for conn, pred in zip(self.connectives, self.predicates[1:]):
            if conn == "AND":
                groups[-1].append(pred)
            else:
                groups.append([pred])
        return groups


@dataclass(frozen=True)
class HavingClause:
    term: object = HOLE   # SelectItem (aggregated) | HOLE
    op: object = HOLE
    value: object = HOLE

    def resolved(self) -> bool:
        return (self.term is not HOLE and self.term.resolved()
                and self.op is not HOLE and self.value is not HOLE)


@dataclass(frozen=True)
class OrderClause:
    term: object = HOLE        # SelectItem | HOLE
    direction: object = HOLE   # "ASC" | "DESC" | HOLE

    def resolved(self) -> bool:
        return (self.term is not HOLE and self.term.resolved()
                and self.direction is not HOLE)


@dataclass(frozen=True)
class JoinPath:
    """A tree of FK-PK joins spanning a table set."""
    tables: frozenset[str]
    joins: tuple[FkPkEdge, ...] = ()

    def __post_init__(self):
        if len(self.joins) != max(len(self.tables) - 1, 0):
            raise QueryBuildError("join path is not a tree over its tables")
        covered = set()
        for edge in self.joins:
            covered.update(edge.tables())
        if self.joins and covered != set(self.tables):
            raise QueryBuildError("join edges do not span the table set")

    @property
    def length(self) -> int:
        return len(self.tables)

    def edge_key(self) -> tuple:
        return tuple(sorted(
            (min(e.from_ref, e.to_ref), max(e.from_ref, e.to_ref))
            for e in self.joins))

    def ordered_tables(self) -> list[str]:
        """Deterministic linearization: smallest root, smallest adjacent next."""
        cached = getattr(self, "_ordered", None)
        if cached is not None:
            return list(cached)
        if not self.tables:
            return []
        order = [min(self.tables)]
        remaining = set(self.tables) - {order[0]}
        edges = list(self.joins)
        while remaining:
            best = None
            for edge in edges:
                a, b = edge.tables()
                for placed, new in ((a, b), (b, a)):
                    if placed in order and new in remaining:
                        if best is None or new < best:
                            best = new
            if best is None:
                raise QueryBuildError("join path is disconnected")
            order.append(best)
            remaining.discard(best)
        object.__setattr__(self, "_ordered", tuple(order))
        return order


@dataclass(frozen=True, eq=False)
class PartialQuery:
    select: object = HOLE      # tuple[SelectItem, ...] | HOLE
    declared: object = HOLE    # frozenset of KEYWORDS | HOLE
    where: object = HOLE       # PredicateChain | None | HOLE
    group_by: object = HOLE    # tuple[ColumnRef, ...] | None | HOLE
    having: object = HOLE      # HavingClause | None | HOLE
    order_by: object = HOLE    # OrderClause | None | HOLE
    limit: object = HOLE       # int (0 = none) | HOLE
    join_path: object = HOLE   # JoinPath | HOLE

    def _key(self) -> tuple:
        return (self.select, self.declared, self.where, self.group_by,
                self.having, self.order_by, self.limit, self.join_path)

    def __eq__(self, other):
        if not isinstance(other, PartialQuery):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self):
        cached = getattr(self, "_hash", None)
        if cached is None:
            cached = hash(self._key())
            object.__setattr__(self, "_hash", cached)
        return cached

    # -- state inspection ----------------------------------------------------

    def referenced_tables(self) -> set[str]:
        tables = set()
        if self.select is not HOLE:
            for item in self.select:
                if item.column is not STAR:
                    tables.add(item.column.table)
        if isinstance(self.where, PredicateChain):
            for pred in self.where.predicates:
                tables.add(pred.column.table)
        if isinstance(self.group_by, tuple):
            for col in self.group_by:
                tables.add(col.table)
        having = self.having
        if isinstance(having, HavingClause) and isinstance(having.term, SelectItem):
            if having.term.column is not STAR:
                tables.add(having.term.column.table)
        order = self.order_by
        if isinstance(order, OrderClause) and isinstance(order.term, SelectItem):
            if order.term.column is not STAR:
                tables.add(order.term.column.table)
        return tables

    def select_resolved(self) -> bool:
        return self.select is not HOLE and all(i.resolved() for i in self.select)

    def needs_join_path(self) -> bool:
        return self.select_resolved() and self.join_path is HOLE

    def clause_declared(self, kw: str) -> bool:
        return self.declared is not HOLE and kw in self.declared

    def is_complete(self) -> bool:
        if not self.select_resolved() or self.join_path is HOLE:
            return False
        if self.declared is HOLE:
            return False
        for value in (self.where, self.group_by, self.having, self.order_by):
            if value is HOLE:
                return False
        if isinstance(self.where, PredicateChain) and not self.where.resolved():
            return False
        if isinstance(self.having, HavingClause) and not self.having.resolved():
            return False
        if isinstance(self.order_by, OrderClause) and not self.order_by.resolved():
            return False
        return self.limit is not HOLE

    def aggregate_items(self) -> list[SelectItem]:
        items = []
        if self.select is not HOLE:
            items.extend(i for i in self.select if i.is_aggregate())
        if isinstance(self.having, HavingClause) and isinstance(self.having.term, SelectItem):
            if self.having.term.is_aggregate():
                items.append(self.having.term)
        if isinstance(self.order_by, OrderClause) and isinstance(self.order_by.term, SelectItem):
            if self.order_by.term.is_aggregate():
                items.append(self.order_by.term)
        return items

    def literal_uses(self) -> list[tuple[str, object]]:
        """Typed constants in resolved parts: predicate/having values and limit."""
        uses: list[tuple[str, object]] = []

        def add_value(op, value, column_type):
            if value is HOLE:
                return
            if op == "BETWEEN":
                lo, hi = value
                uses.append(("number", lo))
                uses.append(("number", hi))
            elif op == "LIKE":
                uses.append(("text", str(value).strip("%")))
            else:
                uses.append((column_type, value))

        if isinstance(self.where, PredicateChain):
            for pred in self.where.predicates:
                if pred.resolved():
                    kind = "number" if isinstance(pred.value, (int, float)) \
                        and pred.op != "LIKE" else "text"
                    if pred.op == "BETWEEN":
                        kind = "number"
                    add_value(pred.op, pred.value, kind)
        having = self.having
        if isinstance(having, HavingClause) and having.resolved():
            add_value(having.op, having.value, "number")
        if isinstance(self.limit, int) and self.limit > 0:
            uses.append(("number", self.limit))
        return uses


# ---------------------------------------------------------------------------
# decision points and schedule


@dataclass(frozen=True)
class DecisionPoint:
    """One inference decision: which module fires and which hole it resolves."""
    module: str      # KW | COL | OP | AGG | AND/OR | DESC/ASC | HAVING | VALUE
    context: tuple   # e.g. ("select",), ("where", 2), ("having",)

    def __str__(self):
        return f"{self.module}{self.context}"


def new_root() -> PartialQuery:
    """The all-placeholder query; its confidence is 1 by convention."""
    return PartialQuery()


def next_decision(pq: PartialQuery):
    """The next open decision point per the fixed schedule, or None.

    Join-path resolution is not a scored decision; it happens right after the
    SELECT list is fully resolved (see `PartialQuery.needs_join_path`).
    """
    if pq.select is HOLE:
        return DecisionPoint("COL", ("select",))
    for i, item in enumerate(pq.select):
        if item.aggregate is HOLE:
            return DecisionPoint("AGG", ("select", i))
    if pq.declared is HOLE:
        return DecisionPoint("KW", ("kw",))
    if pq.clause_declared(KW_WHERE):
        if pq.where is HOLE:
            return DecisionPoint("COL", ("where",))
        chain = pq.where
        # connectives resolve before predicate contents: once a chain is known
        # to be purely conjunctive, each resolved predicate can prune eagerly
        for i, conn in enumerate(chain.connectives):
            if conn is HOLE:
                return DecisionPoint("AND/OR", ("where", i))
        for i, pred in enumerate(chain.predicates):
            if pred.op is HOLE:
                return DecisionPoint("OP", ("where", i))
            if pred.value is HOLE:
                return DecisionPoint("VALUE", ("where", i))
    if pq.clause_declared(KW_GROUP):
        if pq.group_by is HOLE:
            return DecisionPoint("COL", ("group",))
        if pq.having is HOLE:
            return DecisionPoint("HAVING", ("having",))
        having = pq.having
        if isinstance(having, HavingClause):
            if having.term is HOLE:
                return DecisionPoint("AGG", ("having",))
            if having.op is HOLE:
                return DecisionPoint("OP", ("having",))
            if having.value is HOLE:
                return DecisionPoint("VALUE", ("having",))
    if pq.clause_declared(KW_ORDER):
        order = pq.order_by
        if order is HOLE or order.term is HOLE:
            return DecisionPoint("COL", ("order",))
        if order.term.aggregate is HOLE:
            return DecisionPoint("AGG", ("order",))
        if order.direction is HOLE or pq.limit is HOLE:
            return DecisionPoint("DESC/ASC", ("order",))
    return None


def holes(pq: PartialQuery) -> list:
    """Currently visible placeholders in schedule order; empty iff complete.

    Only placeholders whose existence is already certain are listed (the root
    shows a single select placeholder; clause holes appear once the keyword
    decision declares them).  A pending join path appears as the string "join"
    in its schedule slot after the SELECT list.
    """
    out: list = []
    if pq.select is HOLE:
        return [DecisionPoint("COL", ("select",))]
    for i, item in enumerate(pq.select):
        if item.aggregate is HOLE:
            out.append(DecisionPoint("AGG", ("select", i)))
    if pq.join_path is HOLE:
        out.append("join")
    if pq.declared is HOLE:
        out.append(DecisionPoint("KW", ("kw",)))
        return out
    if pq.clause_declared(KW_WHERE):
        if pq.where is HOLE:
            out.append(DecisionPoint("COL", ("where",)))
        else:
            for i, conn in enumerate(pq.where.connectives):
                if conn is HOLE:
                    out.append(DecisionPoint("AND/OR", ("where", i)))
            for i, pred in enumerate(pq.where.predicates):
                if pred.op is HOLE:
                    out.append(DecisionPoint("OP", ("where", i)))
                if pred.value is HOLE:
                    out.append(DecisionPoint("VALUE", ("where", i)))
    if pq.clause_declared(KW_GROUP):
        if pq.group_by is HOLE:
            out.append(DecisionPoint("COL", ("group",)))
        elif pq.having is HOLE:
            out.append(DecisionPoint("HAVING", ("having",)))
        elif isinstance(pq.having, HavingClause):
            having = pq.having
            if having.term is HOLE or having.term.aggregate is HOLE:
                out.append(DecisionPoint("AGG", ("having",)))
            if having.op is HOLE:
                out.append(DecisionPoint("OP", ("having",)))
            if having.value is HOLE:
                out.append(DecisionPoint("VALUE", ("having",)))
    if pq.clause_declared(KW_ORDER):
        order = pq.order_by
        if order is HOLE or order.term is HOLE:
            out.append(DecisionPoint("COL", ("order",)))
        else:
            if order.term.aggregate is HOLE:
                out.append(DecisionPoint("AGG", ("order",)))
            if order.direction is HOLE or pq.limit is HOLE:
                out.append(DecisionPoint("DESC/ASC", ("order",)))
    return out


def apply_decision(pq: PartialQuery, point: DecisionPoint, choice) -> PartialQuery:
    """Resolve exactly one placeholder; the input query is left untouched."""
    expected = next_decision(pq)
    if point != expected:
        raise QueryBuildError(f"decision point {point} is not next (expected {expected})")
    area = point.context[0]

    if point.module == "COL" and area == "select":
        if not choice:
            raise QueryBuildError("empty select list")
        items = tuple(SelectItem(col, HOLE) for col in choice)
        return replace(pq, select=items)

    if point.module == "AGG" and area == "select":
        idx = point.context[1]
        item = pq.select[idx]
        if choice is not None and choice not in AGGREGATES:
            raise QueryBuildError(f"unknown aggregate {choice!r}")
        if item.column is STAR and choice != "COUNT":
            raise QueryBuildError("star projection requires COUNT")
        items = tuple(replace(it, aggregate=choice) if i == idx else it
                      for i, it in enumerate(pq.select))
        return replace(pq, select=items)

    if point.module == "KW":
        declared = frozenset(choice)
        if not declared <= set(KEYWORDS):
            raise QueryBuildError(f"unknown clause keywords {choice!r}")
        return replace(
            pq,
            declared=declared,
            where=HOLE if KW_WHERE in declared else None,
            group_by=HOLE if KW_GROUP in declared else None,
            having=HOLE if KW_GROUP in declared else None,
            order_by=OrderClause() if KW_ORDER in declared else None,
            limit=HOLE if KW_ORDER in declared else 0,
        )

    if point.module == "COL" and area == "where":
        preds = tuple(Predicate(col) for col in choice)
        if not preds:
            raise QueryBuildError("empty predicate column list")
        connectives = tuple(HOLE for _ in range(len(preds) - 1))
        return replace(pq, where=PredicateChain(preds, connectives))

    if area == "where" and point.module in ("OP", "VALUE"):
        idx = point.context[1]
        chain = pq.where
        pred = chain.predicates[idx]
        if point.module == "OP":
            if choice not in ALL_OPS:
                raise QueryBuildError(f"unknown operator {choice!r}")
            pred = replace(pred, op=choice)
        else:
            if pred.op == "BETWEEN":
                lo, hi = choice
                if lo > hi:
                    raise QueryBuildError("BETWEEN bounds out of order")
            pred = replace(pred, value=choice)
        preds = tuple(pred if i == idx else p
                      for i, p in enumerate(chain.predicates))
        return replace(pq, where=replace(chain, predicates=preds))

    if point.module == "AND/OR":
        idx = point.context[1]
        if choice not in ("AND", "OR"):
            raise QueryBuildError(f"connective must be AND or OR, got {choice!r}")
        chain = pq.where
        conns = tuple(choice if i == idx else c
                      for i, c in enumerate(chain.connectives))
        return replace(pq, where=replace(chain, connectives=conns))

    if point.module == "COL" and area == "group":
        if not choice:
            raise QueryBuildError("empty group key")
        return replace(pq, group_by=tuple(choice))

    if point.module == "HAVING":
        return replace(pq, having=HavingClause() if choice else None)

    if area == "having":
        having = pq.having
        if point.module == "AGG":
            agg, col = choice
            having = replace(having, term=SelectItem(col, agg))
        elif point.module == "OP":
            having = replace(having, op=choice)
        else:
            having = replace(having, value=choice)
        return replace(pq, having=having)

    if point.module == "COL" and area == "order":
        return replace(pq, order_by=OrderClause(term=SelectItem(choice, HOLE)))

    if point.module == "AGG" and area == "order":
        order = pq.order_by
        term = replace(order.term, aggregate=choice)
        return replace(pq, order_by=replace(order, term=term))

    if point.module == "DESC/ASC":
        direction, limit = choice
        if direction not in ("ASC", "DESC") or limit < 0:
            raise QueryBuildError(f"bad direction/limit choice {choice!r}")
        order = replace(pq.order_by, direction=direction)
        return replace(pq, order_by=order, limit=limit)

    raise QueryBuildError(f"unhandled decision point {point}")


# ---------------------------------------------------------------------------
# rendering


def sql_literal(value) -> str:
    if isinstance(value, str):
        return "'" + value.replace("'", "''") + "'"
    if isinstance(value, float) and value.is_integer():
        return str(int(value))
    return str(value)


class _Naming:
    """Alias assignment: none for single-table queries, t1..tn otherwise."""

    def __init__(self, pq: PartialQuery, display: bool):
        self.display = display
        self.alias: dict[str, str] = {}
        self.single_table = None
        if isinstance(pq.join_path, JoinPath):
            ordered = pq.join_path.ordered_tables()
            if len(ordered) == 1:
                self.single_table = ordered[0]
            else:
                self.alias = {t: f"t{i + 1}" for i, t in enumerate(ordered)}

    def column(self, ref) -> str:
        if ref is STAR:
            return "*"
        if self.single_table == ref.table:
            return ref.column
        if ref.table in self.alias:
            return f"{self.alias[ref.table]}.{ref.column}"
        return f"{ref.table}.{ref.column}"

    def table_intro(self, table: str) -> str:
        if table in self.alias:
            return f"{table} AS {self.alias[table]}"
        return table


def _render_item(item: SelectItem, naming: _Naming) -> str:
    col = naming.column(item.column)
    if item.aggregate is HOLE:
        return f"?({col})" if naming.display else col
    if item.aggregate is None:
        return col
    return f"{item.aggregate}({col})"


def _render_comparison(lhs: str, op, value) -> str:
    if op is HOLE:
        return f"{lhs} ?"
    if op == "BETWEEN":
        if value is HOLE:
            return f"{lhs} BETWEEN ?"
        lo, hi = value
        return f"{lhs} BETWEEN {sql_literal(lo)} AND {sql_literal(hi)}"
    rendered = "?" if value is HOLE else sql_literal(value)
    return f"{lhs} {op} {rendered}"


def _render_predicate(pred: Predicate, naming: _Naming) -> str:
    return _render_comparison(naming.column(pred.column), pred.op, pred.value)


def _from_clause(pq: PartialQuery, naming: _Naming) -> str | None:
    path = pq.join_path
    if path is HOLE:
        return "?" if naming.display else None
    ordered = path.ordered_tables()
    parts = [naming.table_intro(ordered[0])]
    placed = {ordered[0]}
    remaining = list(path.joins)
    for table in ordered[1:]:
        chosen = None
        for edge in remaining:
            a, b = edge.tables()
            if table in (a, b) and ({a, b} - {table}) <= placed:
                chosen = edge
                break
        if chosen is None:
            raise QueryBuildError("join path is disconnected")
        remaining.remove(chosen)
        other = chosen.from_ref.table if chosen.to_ref.table == table else chosen.to_ref.table
        left, right = chosen.condition_for(other, table)
        parts.append(f"JOIN {naming.table_intro(table)} "
                     f"ON {naming.column(left)} = {naming.column(right)}")
        placed.add(table)
    return " ".join(parts)


def _executable_where(chain: PredicateChain, naming: _Naming) -> str | None:
    """The executable WHERE body, or None if the clause must be dropped.

    Predicates may only appear once no unresolved connective could still turn
    the chain disjunctive: a fully resolved chain renders whole; an all-AND
    chain renders its resolved atoms; anything else is omitted so the partial
    result stays a superset of every completion's result.
    """
    if chain.resolved():
        bits = [_render_predicate(chain.predicates[0], naming)]
        for conn, pred in zip(chain.connectives, chain.predicates[1:]):
            bits.append(conn)
            bits.append(_render_predicate(pred, naming))
        return " ".join(bits)
    if not chain.connectives_resolved():
        return None
    if any(c == "OR" for c in chain.connectives):
        return None
    resolved = [p for p in chain.predicates if p.resolved()]
    if not resolved:
        return None
    return " AND ".join(_render_predicate(p, naming) for p in resolved)


def render_sql(pq: PartialQuery, mode: str = "display") -> str:
    """Deterministic SQL text; display shows `?`, executable drops holes."""
    if mode not in ("display", "executable"):
        raise ValueError("mode must be 'display' or 'executable'")
    display = mode == "display"
    naming = _Naming(pq, display)
    complete = pq.is_complete()

    if pq.select is HOLE:
        if display:
            return "SELECT ?"
        raise QueryBuildError("cannot render executable SQL for an unresolved select list")

    parts = ["SELECT " + ", ".join(_render_item(i, naming) for i in pq.select)]

    from_part = _from_clause(pq, naming)
    if from_part is not None:
        parts.append("FROM " + from_part)
    elif not display:
        raise QueryBuildError("executable rendering requires a resolved join path")

    if pq.where is HOLE and pq.declared is not HOLE and display:
        parts.append("WHERE ?")
    elif isinstance(pq.where, PredicateChain):
        chain = pq.where
        if display:
            bits = [_render_predicate(chain.predicates[0], naming)]
            for conn, pred in zip(chain.connectives, chain.predicates[1:]):
                bits.append("?" if conn is HOLE else conn)
                bits.append(_render_predicate(pred, naming))
            parts.append("WHERE " + " ".join(bits))
        else:
            body = _executable_where(chain, naming)
            if body is not None:
                parts.append("WHERE " + body)

    if pq.group_by is HOLE and display and pq.clause_declared(KW_GROUP):
        parts.append("GROUP BY ?")
    elif isinstance(pq.group_by, tuple):
        parts.append("GROUP BY " + ", ".join(naming.column(c) for c in pq.group_by))
        having = pq.having
        if having is HOLE and display:
            parts.append("HAVING ?")
        elif isinstance(having, HavingClause):
            if having.resolved():
                parts.append("HAVING " + _render_comparison(
                    _render_item(having.term, naming), having.op, having.value))
            elif display:
                parts.append("HAVING ?")

    order = pq.order_by
    if pq.clause_declared(KW_ORDER):
        if display:
            if order is HOLE or order is None or order.term is HOLE:
                parts.append("ORDER BY ?")
            else:
                direction = "?" if order.direction is HOLE else order.direction
                parts.append(f"ORDER BY {_render_item(order.term, naming)} {direction}")
        elif complete and isinstance(order, OrderClause):
            parts.append(f"ORDER BY {_render_item(order.term, naming)} {order.direction}")
    if isinstance(pq.limit, int) and pq.limit > 0 and (display or complete):
        parts.append(f"LIMIT {pq.limit}")

    return " ".join(parts)


# ---------------------------------------------------------------------------
# canonical form and equality


def _column_key(col) -> tuple:
    if col is STAR:
        return ("*", "*")
    return (col.table, col.column)


def _value_key(op, value) -> tuple:
    if op == "BETWEEN":
        lo, hi = value
        return ("pair", str(lo), str(hi))
    return ("one", str(value))


def _atom_key(pred: Predicate) -> tuple:
    return (_column_key(pred.column), pred.op, _value_key(pred.op, pred.value))


def canonical_key(pq: PartialQuery) -> tuple:
    """Structural identity for complete queries.

    The select list keeps its declared order (positions are significant for
    sketch matching); predicate groups and join edges are sorted.
    """
    if not pq.is_complete():
        raise QueryBuildError("canonical form requires a complete query")
    select = tuple((item.aggregate or "", _column_key(item.column))
                   for item in pq.select)
    joins = pq.join_path.edge_key()
    if isinstance(pq.where, PredicateChain):
        groups = tuple(sorted(
            tuple(sorted(_atom_key(p) for p in group))
            for group in pq.where.groups()))
    else:
        groups = ()
    group_by = tuple(sorted(_column_key(c) for c in pq.group_by)) \
        if isinstance(pq.group_by, tuple) else ()
    having = ()
    if isinstance(pq.having, HavingClause):
        term = pq.having.term
        having = ((term.aggregate or "", _column_key(term.column)),
                  pq.having.op, _value_key(pq.having.op, pq.having.value))
    order = ()
    if isinstance(pq.order_by, OrderClause):
        term = pq.order_by.term
        order = ((term.aggregate or "", _column_key(term.column)),
                 pq.order_by.direction)
    return (select, joins, groups, group_by, having, order, pq.limit or 0)


def canonical_eq(q1: PartialQuery, q2: PartialQuery) -> bool:
    """True iff two complete queries are equal after canonicalization."""
    return canonical_key(q1) == canonical_key(q2)


# ---------------------------------------------------------------------------
# decision traces


@dataclass(frozen=True)
class TraceStep:
    point: object        # DecisionPoint, or the string "join"
    choice: object
    score: float = 1.0


@dataclass(frozen=True)
class DecisionTrace:
    steps: tuple[TraceStep, ...] = ()

    def extend(self, point, choice, score: float) -> "DecisionTrace":
        return DecisionTrace(self.steps + (TraceStep(point, choice, score),))

    def confidence(self) -> float:
        out = 1.0
        for step in self.steps:
            out *= step.score
        return out


def replay(trace: DecisionTrace) -> PartialQuery:
    """Rebuild the query a trace describes, starting from the root."""
    pq = new_root()
    for step in trace.steps:
        if step.point == "join":
            pq = replace(pq, join_path=step.choice)
        else:
            pq = apply_decision(pq, step.point, step.choice)
    return pq
