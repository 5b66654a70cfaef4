"""Benchmark driver: sketch synthesis from gold queries, task runs, reports.

Also houses the brute-force oracle: an independent generator of the bounded
query family that decides satisfaction by full execution only, used to check
both the soundness and the completeness of the probe-driven search.
"""

from __future__ import annotations

import json
import random
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from itertools import combinations, combinations_with_replacement, permutations
from pathlib import Path

from .ast import (
    HOLE, HavingClause, JoinPath, KW_GROUP, KW_ORDER, KW_WHERE, OrderClause,
    PartialQuery, Predicate, PredicateChain, STAR, SelectItem, canonical_key,
    legal_aggregates, legal_operators, render_sql,
)
from .catalog import SchemaCatalog, build_value_index, join_graph, load_catalog
from .database import Database, EngineError
from .guidance import (
    GuidanceModel, LexicalConfig, Literal, lexical_model, uniform_model,
)
from .joins import construct_join_paths
from .parser import parse_gold
from .search import Candidate, EnumConfig, enumerate_queries
from .tsq import (
    EMPTY_TSQ, ExampleCell, ExampleTuple, TableSketchQuery, satisfies,
)
from .verify import execution_meta, verify_literals, verify_semantics


class HarnessError(Exception):
    pass


@dataclass(frozen=True)
class Task:
    id: str
    nlq: str
    literals: tuple[Literal, ...]
    gold_sql: str
    db: str
    tsq: TableSketchQuery | None = None

    @classmethod
    def from_json(cls, record: dict) -> "Task":
        from .tsq import parse_tsq
        literals = tuple(Literal(l["type"], l["value"])
                         for l in record.get("literals", ()))
        raw_tsq = record.get("tsq")
        return cls(
            id=str(record["id"]),
            nlq=record["nlq"],
            literals=literals,
            gold_sql=record["gold_sql"],
            db=record["db"],
            tsq=parse_tsq(raw_tsq) if raw_tsq else None,
        )


def load_tasks(path: str | Path) -> list[Task]:
    tasks = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if line:
            tasks.append(Task.from_json(json.loads(line)))
    return tasks


def difficulty(gold: PartialQuery) -> str:
    """Easy: project-join (with aggregates/sort/limit); medium adds selection
    predicates; hard adds grouping."""
    if isinstance(gold.group_by, tuple):
        return "hard"
    if isinstance(gold.where, PredicateChain):
        return "medium"
    return "easy"


# ---------------------------------------------------------------------------
# sketch synthesis


def synthesize_tsq(gold: PartialQuery, db: Database, catalog: SchemaCatalog,
                   detail: str = "full", seed: int = 42) -> TableSketchQuery:
    """Derive a sketch from the desired query's own result.

    `full`: type annotations, two seeded-random distinct result rows as exact
    tuples, and the query's sort/limit settings.  `partial`: one random column
    of the examples erased (for queries with at least two projected columns).
    `minimal`: annotations only.  `none`: the empty, always-satisfied sketch.
    """
    if detail == "none":
        return EMPTY_TSQ
    types = tuple(item.output_type(catalog) for item in gold.select)
    sorted_flag = gold.clause_declared(KW_ORDER)
    limit = gold.limit if isinstance(gold.limit, int) else 0
    if detail == "minimal":
        return TableSketchQuery(types=types, tuples=(), sorted=sorted_flag,
                                limit=limit)
    if detail not in ("full", "partial"):
        raise HarnessError(f"unknown detail level {detail!r}")

    _, rows = db.execute(render_sql(gold, "executable"), timeout=30.0)
    if not rows:
        raise HarnessError("gold query has an empty result; nothing to sketch")
    rng = random.Random(seed)
    preferred = [i for i, row in enumerate(rows)
                 if all(v is not None for v in row)] or list(range(len(rows)))
    count = min(2, len(preferred))
    picked = sorted(rng.sample(preferred, count))  # result order, for tau

    def cell(value) -> ExampleCell:
        if value is None:
            return ExampleCell("empty")
        return ExampleCell("exact", value)

    tuples = [ExampleTuple(tuple(cell(v) for v in rows[i])) for i in picked]
    if detail == "partial" and len(types) >= 2:
        erased = rng.randrange(len(types))
        tuples = [
            ExampleTuple(tuple(
                ExampleCell("empty") if j == erased else c
                for j, c in enumerate(t.cells)))
            for t in tuples
        ]
    return TableSketchQuery(types=types, tuples=tuple(tuples),
                            sorted=sorted_flag, limit=limit)


# ---------------------------------------------------------------------------
# single task execution


@dataclass
class TaskResult:
    id: str
    difficulty: str
    rank: int | None
    candidates: int
    probes: int
    probes_at_gold: int | None
    expansions: int
    reason: str
    time: float
    error: str | None = None

    def to_json(self) -> dict:
        return {
            "id": self.id, "difficulty": self.difficulty, "rank": self.rank,
            "candidates": self.candidates, "probes": self.probes,
            "probes_at_gold": self.probes_at_gold,
            "expansions": self.expansions, "reason": self.reason,
            "time": round(self.time, 4), "error": self.error,
        }


def run_task(task: Task, config: EnumConfig, detail: str = "full",
             db_root: str | Path | None = None,
             model: GuidanceModel | None = None) -> TaskResult:
    """Run one synthesis task and locate the gold query in the stream."""
    db_path = Path(task.db)
    if not db_path.is_absolute() and db_root is not None:
        db_path = Path(db_root) / db_path
    started = time.monotonic()
    db = None
    try:
        db = Database.open(db_path)
        catalog = load_catalog(db)
        gold = parse_gold(task.gold_sql, catalog)
        level = difficulty(gold)
        if task.tsq is not None:
            tsq = task.tsq
        else:
            tsq = synthesize_tsq(gold, db, catalog, detail, config.seed)
        if model is None:
            index = build_value_index(catalog, db)
            model = lexical_model(LexicalConfig(value_index=index))
        gold_key = canonical_key(gold)
        db.reset_counters()

        found: list[tuple[int, int]] = []
        ranks = [0]

        def emit(candidate: Candidate):
            ranks[0] = candidate.rank
            if not found and canonical_key(candidate.state.pq) == gold_key:
                found.append((candidate.rank, db.executions))

        report = enumerate_queries(
            task.nlq, list(task.literals), model, tsq, db, catalog, config,
            emit)
        rank = found[0][0] if found else None
        probes_at_gold = found[0][1] if found else None
        return TaskResult(
            id=task.id, difficulty=level, rank=rank, candidates=ranks[0],
            probes=report.probes_executed, probes_at_gold=probes_at_gold,
            expansions=report.expansions, reason=report.reason,
            time=time.monotonic() - started)
    except EngineError as exc:
        return TaskResult(
            id=task.id, difficulty="unknown", rank=None, candidates=0,
            probes=0, probes_at_gold=None, expansions=0, reason="error",
            time=time.monotonic() - started, error=str(exc))
    finally:
        if db is not None:
            db.close()


# ---------------------------------------------------------------------------
# reports


@dataclass
class Report:
    detail: str
    mode: str
    results: list[TaskResult] = field(default_factory=list)

    def hit_counts(self, k: int) -> dict[str, int]:
        counts: dict[str, int] = {}
        for result in self.results:
            bucket = result.difficulty
            counts.setdefault(bucket, 0)
            counts.setdefault("total", 0)
            if result.rank is not None and result.rank <= k:
                counts[bucket] += 1
                counts["total"] += 1
        return counts

    def to_json(self) -> dict:
        buckets = sorted({r.difficulty for r in self.results} | {"total"})
        totals = {b: sum(1 for r in self.results
                         if b in (r.difficulty, "total")) for b in buckets}
        aggregate = {}
        for k, label in ((1, "top1"), (10, "top10"), (100, "top100")):
            counts = self.hit_counts(k)
            aggregate[label] = {
                b: {"count": counts.get(b, 0),
                    "pct": round(100.0 * counts.get(b, 0) / totals[b], 1)
                    if totals[b] else 0.0}
                for b in buckets
            }
        return {
            "mode": self.mode,
            "detail": self.detail,
            "tasks": [r.to_json() for r in self.results],
            "aggregate": aggregate,
        }

    def to_table(self) -> str:
        header = f"{'task':10s} {'level':8s} {'rank':>6s} {'cands':>6s} " \
                 f"{'probes':>8s} {'time':>8s} {'reason':10s}"
        lines = [header, "-" * len(header)]
        for r in self.results:
            rank = str(r.rank) if r.rank is not None else "miss"
            lines.append(
                f"{r.id:10s} {r.difficulty:8s} {rank:>6s} {r.candidates:>6d} "
                f"{r.probes:>8d} {r.time:>8.2f} {r.reason:10s}")
        counts = {k: self.hit_counts(k).get("total", 0) for k in (1, 10, 100)}
        lines.append("-" * len(header))
        lines.append(
            f"top-1: {counts[1]}/{len(self.results)}   "
            f"top-10: {counts[10]}/{len(self.results)}   "
            f"top-100: {counts[100]}/{len(self.results)}")
        return "\n".join(lines)


def run_benchmark(tasks, config: EnumConfig, detail: str = "full",
                  db_root: str | Path | None = None, jobs: int = 1) -> Report:
    """Run every task, tolerating per-task engine errors."""
    if isinstance(tasks, (str, Path)):
        if db_root is None:
            db_root = Path(tasks).parent
        tasks = load_tasks(tasks)
    report = Report(detail=detail, mode=config.mode)
    if jobs <= 1:
        for task in tasks:
            report.results.append(run_task(task, config, detail, db_root))
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(run_task, task, config, detail, db_root)
                       for task in tasks]
            report.results = [f.result() for f in futures]
    return report


# ---------------------------------------------------------------------------
# the brute-force oracle


@dataclass(frozen=True)
class OracleBound:
    """Size caps for exhaustive generation (small by construction)."""
    set_size: int = 2       # select items, predicates, group key size
    join_depth: int = 1


def _oracle_where_chains(columns, literals, catalog, bound):
    """Every predicate chain over sorted column multisets within budget.

    Yields (chain, leftover-literal index tuple) so callers can propagate the
    consumption requirement without re-deriving it.
    """
    budget_text = sum(1 for l in literals if l.type == "text")
    budget_num = sum(1 for l in literals if l.type == "number")

    def values_for(column, op, remaining):
        kind = catalog.column_type(column)
        if op == "BETWEEN":
            nums = sorted((_num(l.value), i) for i, l in remaining
                          if l.type == "number")
            out = []
            for a in range(len(nums)):
                for b in range(a + 1, len(nums)):
                    out.append(((nums[a][0], nums[b][0]),
                                (nums[a][1], nums[b][1])))
            return out
        picks = []
        for i, lit in remaining:
            if lit.type != kind:
                continue
            value = _num(lit.value) if kind == "number" else str(lit.value)
            if op == "LIKE":
                value = f"%{lit.value}%"
            picks.append((value, (i,)))
        return picks

    chains = []
    indexed = list(enumerate(literals))
    for size in range(1, bound.set_size + 1):
        for combo in combinations_with_replacement(columns, size):
            texts = sum(1 for c in combo if catalog.column_type(c) == "text")
            nums = size - texts
            if texts > budget_text or nums > budget_num:
                continue
            variants = [([], indexed)]
            for col in combo:
                grown = []
                for atoms, remaining in variants:
                    for op in legal_operators(col, catalog):
                        for value, used in values_for(col, op, remaining):
                            left = [(i, l) for i, l in remaining
                                    if i not in used]
                            grown.append(
                                (atoms + [Predicate(col, op, value)], left))
                variants = grown
            for gaps in _gap_patterns(size):
                for atoms, left in variants:
                    chains.append((PredicateChain(tuple(atoms), gaps),
                                   tuple(l for _, l in left)))
    return chains


def _gap_patterns(size: int):
    if size == 1:
        return [()]
    patterns = [()]
    for _ in range(size - 1):
        patterns = [p + (conn,) for p in patterns for conn in ("AND", "OR")]
    return patterns


def _num(value):
    out = float(value)
    return int(out) if out.is_integer() else out


def _projected_types_match(select, alpha, catalog) -> bool:
    if alpha is None:
        return True
    if len(select) != len(alpha):
        return False
    return all(item.output_type(catalog) == a
               for item, a in zip(select, alpha))


def oracle_enumerate(bound: OracleBound, catalog: SchemaCatalog, db: Database,
                     tsq: TableSketchQuery, literals) -> dict:
    """Exhaustively generate the bounded query family and keep what satisfies.

    Generation is direct nested construction (independent of the search), and
    satisfaction is decided by full execution plus the literal-coverage and
    semantic-rule filters.  Two of those filters are hoisted into generation
    for tractability (skipping projections whose types cannot match the
    annotations, and branches whose leftover literals nothing can consume);
    both merely skip queries the final filters would discard.  Returns
    canonical key -> query.
    """
    graph = join_graph(catalog)
    literals = list(literals)
    out: dict = {}

    def consider(pq: PartialQuery):
        if verify_semantics(pq, catalog) is not None:
            return
        if not verify_literals(pq, literals):
            return
        key = canonical_key(pq)
        if key in out:
            return
        _, rows = db.execute(render_sql(pq, "executable"), timeout=30.0)
        if satisfies(tsq, rows, execution_meta(pq, catalog)):
            out[key] = pq

    chain_cache: dict = {}
    items = sorted(catalog.all_columns()) + [STAR]
    for size in range(1, bound.set_size + 1):
        for raw_cols in permutations(items, size):
            agg_menu = [legal_aggregates(col, catalog) for col in raw_cols]
            for aggs in _product(agg_menu):
                select = tuple(SelectItem(c, a)
                               for c, a in zip(raw_cols, aggs))
                if not _projected_types_match(select, tsq.types, catalog):
                    continue
                base = PartialQuery(select=select)
                for jp in construct_join_paths(base, graph, bound.join_depth):
                    _oracle_clauses(
                        replace(base, join_path=jp), catalog, literals,
                        bound, consider, chain_cache)
    return out


def oracle_accepts(bound: OracleBound, catalog: SchemaCatalog, db: Database,
                   tsq: TableSketchQuery, literals, pq: PartialQuery) -> bool:
    """Membership test for the oracle's family-and-filter definition."""
    if len(pq.select) > bound.set_size:
        return False
    if isinstance(pq.where, PredicateChain) and \
            len(pq.where.predicates) > bound.set_size:
        return False
    if isinstance(pq.group_by, tuple) and len(pq.group_by) > bound.set_size:
        return False
    if verify_semantics(pq, catalog) is not None:
        return False
    if not verify_literals(pq, list(literals)):
        return False
    _, rows = db.execute(render_sql(pq, "executable"), timeout=30.0)
    return satisfies(tsq, rows, execution_meta(pq, catalog))


def _product(menus):
    if not menus:
        yield ()
        return
    for head in menus[0]:
        for rest in _product(menus[1:]):
            yield (head,) + rest


def _oracle_clauses(base: PartialQuery, catalog, literals, bound, consider,
                    chain_cache):
    columns = sorted(catalog.columns_of(base.join_path.tables))
    bare = [i.column for i in base.select
            if i.aggregate is None and i.column is not STAR]
    has_agg = any(i.is_aggregate() for i in base.select)

    cache_key = frozenset(base.join_path.tables)
    where_options = chain_cache.get(cache_key)
    if where_options is None:
        where_options = [(None, tuple(literals))]
        where_options += _oracle_where_chains(columns, literals, catalog, bound)
        chain_cache[cache_key] = where_options

    group_options: list = [None]
    for size in range(1, bound.set_size + 1):
        for combo in combinations(columns, size):
            if set(bare) <= set(combo):
                group_options.append(tuple(combo))

    for chain, leftover in where_options:
        if any(l.type == "text" for l in leftover):
            continue  # only predicates can consume text literals
        for group in group_options:
            if group is None and has_agg and bare:
                continue  # ungrouped aggregation never satisfies semantics
            having_options: list = [(None, leftover)]
            if group is not None:
                having_options += _oracle_havings(columns, catalog, leftover)
            for having, remaining in having_options:
                for order, limit in _oracle_orders(
                        columns, catalog, remaining, group):
                    declared = frozenset(
                        kw for kw, present in (
                            (KW_WHERE, chain is not None),
                            (KW_GROUP, group is not None),
                            (KW_ORDER, order is not None),
                        ) if present)
                    consider(replace(
                        base, declared=declared, where=chain, group_by=group,
                        having=having, order_by=order, limit=limit))


def _oracle_havings(columns, catalog, leftover):
    """(clause, remaining literal tuple) pairs consuming leftover numbers."""
    numbers = [(_num(l.value), i) for i, l in enumerate(leftover)
               if l.type == "number"]
    terms = [SelectItem(STAR, "COUNT")]
    for agg in sorted(("COUNT", "SUM", "AVG", "MIN", "MAX")):
        for col in columns:
            if catalog.column_type(col) == "number":
                terms.append(SelectItem(col, agg))
    out = []
    for term in terms:
        for op in ("=", "!=", ">", "<", ">=", "<="):
            for value, idx in numbers:
                rest = tuple(l for i, l in enumerate(leftover) if i != idx)
                out.append((HavingClause(term, op, value), rest))
        for a in range(len(numbers)):
            for b in range(len(numbers)):
                if numbers[a][0] <= numbers[b][0] and a != b:
                    rest = tuple(l for i, l in enumerate(leftover)
                                 if i not in (numbers[a][1], numbers[b][1]))
                    out.append((HavingClause(
                        term, "BETWEEN", (numbers[a][0], numbers[b][0])), rest))
    return out


def _oracle_orders(columns, catalog, remaining, group):
    """(order clause, limit) pairs; every leftover literal must be consumed,
    and a limit is the only remaining consumer."""
    numbers = [_num(l.value) for l in remaining if l.type == "number"]
    if not remaining:
        limits = [0]
    elif (len(remaining) == 1 and numbers
          and isinstance(numbers[0], int) and numbers[0] > 0):
        limits = [numbers[0]]   # the limit must consume the final literal
    else:
        return                  # unconsumable literals: not a valid member
    if not remaining:
        yield (None, 0)
    grouped = group is not None
    order_terms = []
    for col in columns:
        if grouped:
            aggs = legal_aggregates(col, catalog)
            if col not in group:
                aggs = tuple(a for a in aggs if a is not None)
            order_terms.extend(SelectItem(col, a) for a in aggs)
        else:
            order_terms.append(SelectItem(col, None))
    if grouped:
        order_terms.append(SelectItem(STAR, "COUNT"))
    for term in order_terms:
        for direction in ("ASC", "DESC"):
            for limit in limits:
                yield (OrderClause(term, direction), limit)
