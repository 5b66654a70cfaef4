"""Ascending-cost cascading verification of partial queries against a sketch.

Stages run cheapest first and short-circuit on the first failure: clause
presence, semantic rules, projected column types (all schema-only), then
column-wise probes, row-wise probes, and finally, for complete queries,
literal coverage and a full execution check.  Probes are `SELECT 1 ... LIMIT
1` statements built so that a failing probe proves no completion of the
partial query can satisfy the sketch.
"""

from __future__ import annotations

from dataclasses import dataclass

from .ast import (
    HOLE, KW_GROUP, KW_ORDER, KW_WHERE, HavingClause, JoinPath, OrderClause,
    PartialQuery, Predicate, PredicateChain, STAR, SelectItem,
    _executable_where, _from_clause, _Naming, _render_comparison, _render_item,
    render_sql, sql_literal,
)
from .catalog import ColumnRef, SchemaCatalog
from .database import Database
from .tsq import ExampleCell, ExampleTuple, TableSketchQuery, satisfies

SEMANTIC_RULES = (
    "inconsistent-predicates",
    "constant-output-column",
    "ungrouped-aggregation",
    "singleton-groups",
    "unnecessary-groupby",
    "aggregate-type-usage",
    "faulty-type-comparison",
)


@dataclass(frozen=True)
class VerificationOutcome:
    passed: bool
    failed_stage: str | None = None   # e.g. "clauses", "semantics:...", "by_column:1"
    probes_executed: int = 0


# ---------------------------------------------------------------------------
# stage 1: clause presence


def verify_clauses(tau: bool, k: int, pq: PartialQuery,
                   strict: bool = False) -> bool:
    """Check declared clauses against the sketch's sort flag and limit.

    The default is the permissive reading: a sort flag or limit in the sketch
    REQUIRES the clause, but their absence forbids nothing (an unchecked sort
    box means "no constraint", and satisfaction is decided by execution).
    `strict` additionally rejects queries that declare ORDER BY under tau =
    false or carry a LIMIT under k = 0, and demands a LIMIT when k > 0.
    """
    declared_known = pq.declared is not HOLE
    has_order = pq.clause_declared(KW_ORDER)
    limit_known = isinstance(pq.limit, int)
    if tau and declared_known and not has_order:
        return False
    if strict:
        if not tau and has_order:
            return False
        if k > 0:
            if declared_known and not has_order:
                return False  # no limit can ever be decided
            if limit_known and pq.limit == 0:
                return False
        if k == 0 and limit_known and pq.limit > 0:
            return False
    return True


# ---------------------------------------------------------------------------
# stage 2: semantic rules


def _resolved_chain_groups(chain: PredicateChain):
    if not chain.connectives_resolved():
        return None
    return chain.groups()


def verify_semantics(pq: PartialQuery, catalog: SchemaCatalog) -> str | None:
    """First violated semantic rule id, or None.

    Rules fire only on resolved portions, so pruning a partial query here
    means every completion of it would violate the same rule.
    """
    chain = pq.where if isinstance(pq.where, PredicateChain) else None
    groups = _resolved_chain_groups(chain) if chain else None

    # inconsistent predicates: contradictory equalities inside one AND group
    if groups:
        for group in groups:
            seen: dict[ColumnRef, object] = {}
            for pred in group:
                if pred.op == "=" and pred.value is not HOLE:
                    if pred.column in seen and seen[pred.column] != pred.value:
                        return "inconsistent-predicates"
                    seen.setdefault(pred.column, pred.value)

    # constant output column: equality-pinned column projected (AND-only chains)
    if groups and len(groups) == 1 and pq.select is not HOLE:
        bare = {item.column for item in pq.select if item.aggregate is None}
        for pred in groups[0]:
            if pred.op == "=" and pred.column in bare:
                return "constant-output-column"

    if pq.select is not HOLE and pq.declared is not HOLE:
        has_agg = any(i.is_aggregate() for i in pq.select)
        has_bare = any(i.aggregate is None for i in pq.select)
        # ungrouped aggregation: mixed select with no GROUP BY declared
        if has_agg and has_bare and not pq.clause_declared(KW_GROUP):
            return "ungrouped-aggregation"
        # aggregates elsewhere with bare projections also need grouping
        if has_bare and not pq.clause_declared(KW_GROUP):
            order = pq.order_by
            if isinstance(order, OrderClause) and isinstance(order.term, SelectItem) \
                    and order.term.is_aggregate():
                return "ungrouped-aggregation"

    # GROUP BY with singleton groups: group key contains a declared primary key
    if isinstance(pq.group_by, tuple):
        by_table: dict[str, set[str]] = {}
        for col in pq.group_by:
            by_table.setdefault(col.table, set()).add(col.column)
        for table, cols in by_table.items():
            pk = catalog.table(table).primary_key
            if pk and set(pk) <= cols:
                return "singleton-groups"

    # unnecessary GROUP BY: grouping with no aggregate anywhere
    if isinstance(pq.group_by, tuple) and pq.select is not HOLE:
        select_agg = any(i.is_aggregate() for i in pq.select)
        having = pq.having
        having_known = having is None or (
            isinstance(having, HavingClause) and having.term is not HOLE
            and having.term.resolved())
        having_agg = isinstance(having, HavingClause) and \
            isinstance(having.term, SelectItem) and having.term.is_aggregate()
        order = pq.order_by
        order_known = order is None or (
            isinstance(order, OrderClause) and isinstance(order.term, SelectItem)
            and order.term.resolved())
        order_agg = isinstance(order, OrderClause) and \
            isinstance(order.term, SelectItem) and order.term.is_aggregate()
        if having_known and order_known and not (select_agg or having_agg or order_agg):
            return "unnecessary-groupby"

    # aggregate type usage: MIN/MAX/AVG/SUM over text
    for item in pq.aggregate_items():
        if item.aggregate in ("MIN", "MAX", "AVG", "SUM") and item.column is not STAR:
            if catalog.column_type(item.column) == "text":
                return "aggregate-type-usage"

    # faulty type comparison: ordering ops on text, LIKE on numbers
    if chain:
        for pred in chain.predicates:
            if pred.op is HOLE:
                continue
            ctype = catalog.column_type(pred.column)
            if ctype == "text" and pred.op in (">", "<", ">=", "<=", "BETWEEN"):
                return "faulty-type-comparison"
            if ctype == "number" and pred.op == "LIKE":
                return "faulty-type-comparison"

    return None


# ---------------------------------------------------------------------------
# stage 3: projected column types


def verify_column_types(alpha, pq: PartialQuery, catalog: SchemaCatalog) -> bool:
    """Projected types must match the annotations position-wise.

    Unresolved aggregates are judged by their possible outcomes, so a text
    annotation over a number column prunes even before the aggregate decision.
    """
    if alpha is None or pq.select is HOLE:
        return True
    if len(pq.select) != len(alpha):
        return False
    for item, annotation in zip(pq.select, alpha):
        if item.aggregate is HOLE:
            if item.column is STAR:
                possible = {"number"}
            elif catalog.column_type(item.column) == "number":
                possible = {"number"}
            else:
                possible = {"text", "number"}  # bare text or COUNT
            if annotation not in possible:
                return False
        elif item.output_type(catalog) != annotation:
            return False
    return True


# ---------------------------------------------------------------------------
# stage 4: column-wise probes


@dataclass(frozen=True)
class CvProbe:
    sql: str
    kind: str = "exists"          # "exists" | "avg_range"
    column: ColumnRef | None = None
    bounds: tuple | None = None   # cell bounds for avg_range checks


def _cell_condition(column_sql: str, cell: ExampleCell) -> str:
    if cell.kind == "exact":
        return f"{column_sql} = {sql_literal(cell.value)}"
    lo, hi = cell.value
    return (f"{column_sql} >= {sql_literal(lo)} "
            f"AND {column_sql} <= {sql_literal(hi)}")


def build_cv_query(pq: PartialQuery, col: int, cell: ExampleCell
                   ) -> CvProbe | None:
    """Column-wise probe for one select item and one example cell, or None.

    Empty cells and COUNT/SUM projections are skipped; MIN/MAX behave like
    bare columns; AVG turns into a column-range intersection check.
    """
    item = pq.select[col]
    if cell.kind == "empty" or item.aggregate is HOLE:
        return None
    if item.column is STAR or item.aggregate in ("COUNT", "SUM"):
        return None
    table = item.column.table
    column = item.column.column
    if item.aggregate == "AVG":
        bounds = (cell.value if cell.kind == "range"
                  else (cell.value, cell.value))
        return CvProbe(
            sql=f"SELECT MIN({column}), MAX({column}) FROM {table}",
            kind="avg_range", column=item.column, bounds=bounds)
    condition = _cell_condition(column, cell)
    return CvProbe(sql=f"SELECT 1 FROM {table} WHERE {condition} LIMIT 1")


# ---------------------------------------------------------------------------
# stage 5: row-wise probes


def can_check_rows(pq: PartialQuery) -> bool:
    """Row probes are sound unless unresolved holes could change aggregates."""
    if pq.select is HOLE:
        return False
    if not any(i.is_aggregate() for i in pq.select):
        return True
    if pq.declared is HOLE:
        return False
    where_done = pq.where is None or (
        isinstance(pq.where, PredicateChain) and pq.where.resolved())
    group_done = pq.group_by is None or isinstance(pq.group_by, tuple)
    return where_done and group_done


def build_rv_query(pq: PartialQuery, example: ExampleTuple) -> str:
    """Row-wise probe: the query's FROM / predicates / grouping, with cell
    conditions appended to WHERE (bare items) or HAVING (aggregated items).

    Aggregate conditions without grouping (e.g. a bare COUNT(*) projection)
    become a subquery comparison, since HAVING needs a GROUP BY."""
    naming = _Naming(pq, display=False)
    from_sql = _from_clause(pq, naming)
    if from_sql is None:
        raise ValueError("row probe requires a resolved join path")

    where_parts: list[str] = []
    having_terms: list[tuple[str, ExampleCell | None, object]] = []
    if isinstance(pq.where, PredicateChain):
        existing = _executable_where(pq.where, naming)
        if existing is not None:
            if any(c == "OR" for c in pq.where.connectives):
                existing = f"({existing})"
            where_parts.append(existing)
    if isinstance(pq.having, HavingClause) and pq.having.resolved():
        having_terms.append((
            _render_item(pq.having.term, naming), None,
            (pq.having.op, pq.having.value)))

    for item, cell in zip(pq.select, example.cells):
        if cell.kind == "empty" or item.aggregate is HOLE:
            continue
        if item.is_aggregate():
            term = f"{item.aggregate}({naming.column(item.column)})"
            having_terms.append((term, cell, None))
        else:
            condition = _cell_condition(naming.column(item.column), cell)
            if cell.kind == "range":
                condition = f"({condition})"
            where_parts.append(condition)

    base = f"FROM {from_sql}"
    if where_parts:
        base += " WHERE " + " AND ".join(where_parts)

    if isinstance(pq.group_by, tuple):
        sql = f"SELECT 1 {base} GROUP BY " + \
            ", ".join(naming.column(c) for c in pq.group_by)
        having = []
        for term, cell, opval in having_terms:
            if cell is not None:
                condition = _cell_condition(term, cell)
                if cell.kind == "range":
                    condition = f"({condition})"
            else:
                condition = _render_comparison(term, *opval)
            having.append(condition)
        if having:
            sql += " HAVING " + " AND ".join(having)
        return sql + " LIMIT 1"

    if having_terms:
        aliased = ", ".join(f"{term} AS agg_{i}"
                            for i, (term, _, _) in enumerate(having_terms))
        outer = []
        for i, (term, cell, opval) in enumerate(having_terms):
            lhs = f"agg_{i}"
            if cell is not None:
                condition = _cell_condition(lhs, cell)
                if cell.kind == "range":
                    condition = f"({condition})"
            else:
                condition = _render_comparison(lhs, *opval)
            outer.append(condition)
        return (f"SELECT 1 FROM (SELECT {aliased} {base}) "
                f"WHERE {' AND '.join(outer)} LIMIT 1")

    return f"SELECT 1 {base} LIMIT 1"


# ---------------------------------------------------------------------------
# stage 6/7: literals and full execution


def verify_literals(pq: PartialQuery, literals) -> bool:
    """Every tagged literal must appear as a constant in the complete query."""
    uses = pq.literal_uses()
    for lit in literals:
        found = None
        for i, (kind, value) in enumerate(uses):
            if lit.matches(kind, value):
                found = i
                break
        if found is None:
            return False
        del uses[found]
    return True


def execution_meta(pq: PartialQuery, catalog: SchemaCatalog) -> dict:
    return {
        "has_order_by": pq.clause_declared(KW_ORDER),
        "limit": pq.limit if isinstance(pq.limit, int) else 0,
        "projected_types": [i.output_type(catalog) for i in pq.select],
    }


def verify_by_order(chi, pq: PartialQuery, db: Database,
                    catalog: SchemaCatalog) -> bool:
    """Execute the complete query and require the example tuples to be
    fulfilled injectively in sketch order."""
    _, rows = db.execute(render_sql(pq, "executable"))
    probe_tsq = TableSketchQuery(types=None, tuples=tuple(chi), sorted=True)
    return satisfies(probe_tsq, rows, execution_meta(pq, catalog))


# ---------------------------------------------------------------------------
# the cascade


class Verifier:
    """Cascade runner bound to one catalog/database, with the AVG-range cache."""

    def __init__(self, catalog: SchemaCatalog, db: Database,
                 strict_clauses: bool = False):
        self.catalog = catalog
        self.db = db
        self.strict_clauses = strict_clauses
        self._avg_ranges: dict[ColumnRef, tuple] = {}
        self._cv_cache: dict = {}   # (select items, sketch tuples) -> probes

    # -- probe helpers -------------------------------------------------------

    def _avg_range(self, probe: CvProbe) -> tuple:
        cached = self._avg_ranges.get(probe.column)
        if cached is None:
            _, rows = self.db.execute(probe.sql)
            cached = rows[0] if rows else (None, None)
            self._avg_ranges[probe.column] = cached
        return cached

    def _run_cv(self, probe: CvProbe) -> bool:
        if probe.kind == "avg_range":
            lo, hi = self._avg_range(probe)
            if lo is None or hi is None:
                return False
            cell_lo, cell_hi = probe.bounds
            return not (hi < cell_lo or lo > cell_hi)
        return self.db.probe(probe.sql)

    def _cv_probes(self, tsq: TableSketchQuery, pq: PartialQuery) -> list:
        """Column probes depend only on the SELECT list and the sketch, which
        stay fixed across a whole subtree of states; cache accordingly."""
        key = (pq.select, tsq.tuples)
        cached = self._cv_cache.get(key)
        if cached is None:
            cached = []
            for example in tsq.tuples:
                for col in range(len(pq.select)):
                    probe = build_cv_query(pq, col, example.cells[col])
                    if probe is not None:
                        cached.append((col, probe))
            self._cv_cache[key] = cached
        return cached

    # -- cascade -------------------------------------------------------------

    def verify(self, tsq: TableSketchQuery, literals,
               pq: PartialQuery) -> VerificationOutcome:
        probes = 0
        if not verify_clauses(tsq.sorted, tsq.limit, pq, self.strict_clauses):
            return VerificationOutcome(False, "clauses", probes)
        rule = verify_semantics(pq, self.catalog)
        if rule is not None:
            return VerificationOutcome(False, f"semantics:{rule}", probes)
        if not verify_column_types(tsq.types, pq, self.catalog):
            return VerificationOutcome(False, "column_types", probes)

        select_ready = pq.select is not HOLE
        if tsq.tuples and select_ready:
            arity = len(pq.select)
            if any(len(example.cells) != arity for example in tsq.tuples):
                return VerificationOutcome(False, "by_column:arity", probes)
            for col, probe in self._cv_probes(tsq, pq):
                probes += 1
                if not self._run_cv(probe):
                    return VerificationOutcome(False, f"by_column:{col}", probes)

        join_ready = isinstance(pq.join_path, JoinPath)
        if tsq.tuples and select_ready and join_ready and can_check_rows(pq):
            for example in tsq.tuples:
                probes += 1
                if not self.db.probe(build_rv_query(pq, example)):
                    return VerificationOutcome(False, "by_row", probes)

        if pq.is_complete():
            if not verify_literals(pq, literals):
                return VerificationOutcome(False, "literals", probes)
            if self._needs_full_execution(tsq, pq):
                probes += 1
                _, rows = self.db.execute(render_sql(pq, "executable"))
                if not satisfies(tsq, rows, execution_meta(pq, self.catalog)):
                    return VerificationOutcome(False, "order", probes)
        return VerificationOutcome(True, None, probes)

    @staticmethod
    def _needs_full_execution(tsq: TableSketchQuery, pq: PartialQuery) -> bool:
        """Row probes check each example independently; a full execution is
        needed where that is not conclusive: several examples competing for
        witness rows (injectivity/order), a LIMIT that may cut witnesses, or
        a sketch row bound."""
        if len(tsq.tuples) >= 2:
            return True
        if tsq.tuples and isinstance(pq.limit, int) and pq.limit > 0:
            return True
        return tsq.limit > 0


def verify(tsq: TableSketchQuery, literals, pq: PartialQuery, db: Database,
           catalog: SchemaCatalog, strict_clauses: bool = False
           ) -> VerificationOutcome:
    """One-shot cascade run (see `Verifier` for reuse across states)."""
    return Verifier(catalog, db, strict_clauses).verify(tsq, literals, pq)
