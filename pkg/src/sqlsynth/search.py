"""Best-first enumeration of partial queries, gated by verification.

States are ranked by confidence (the product of per-decision scores), with
join path length and then the rendered query as tiebreakers.  Children that
fail verification are discarded; complete survivors stream out as ranked
candidates.  Two ablation modes are built in: `noguide` switches to
breadth-first order under a uniform model, and `nopq` verifies only complete
queries (the naive chaining of a language model into an example checker).
"""

from __future__ import annotations

import heapq
import time
from collections import deque
from dataclasses import dataclass, field, replace

from . import ast, guidance
from .ast import DecisionTrace, PartialQuery, new_root, render_sql
from .catalog import SchemaCatalog, SchemaGraph, join_graph
from .database import Database, EngineError
from .guidance import ChoiceConfig, GuidanceModel, Literal, score_choices
from .joins import construct_join_paths
from .tsq import TableSketchQuery
from .verify import Verifier


@dataclass(frozen=True)
class SearchState:
    pq: PartialQuery
    confidence: float
    trace: DecisionTrace
    join_len: int = 0


@dataclass(frozen=True)
class Candidate:
    rank: int
    sql: str
    confidence: float
    state: SearchState

    def to_record(self) -> dict:
        return {"rank": self.rank, "confidence": self.confidence, "sql": self.sql}


@dataclass(frozen=True)
class EnumConfig:
    mode: str = "gpqe"            # gpqe | noguide | nopq
    timeout: float = 60.0
    max_candidates: int = 0       # 0 = unbounded
    max_set_size: int = 3
    join_expand_depth: int = 1
    seed: int = 42
    strict_clauses: bool = False
    max_expansions: int = 0       # 0 = unbounded; deterministic work budget

    def __post_init__(self):
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        if self.mode not in ("gpqe", "noguide", "nopq"):
            raise ValueError(f"unknown mode {self.mode!r}")


@dataclass
class TerminationReport:
    reason: str                   # exhausted | timeout | max_candidates | stopped
    candidates: int
    expansions: int
    probes_executed: int
    elapsed: float


def root_state() -> SearchState:
    return SearchState(new_root(), 1.0, DecisionTrace(), 0)


def children(state: SearchState, model: GuidanceModel, nlq: str,
             literals, catalog: SchemaCatalog, graph: SchemaGraph,
             config: EnumConfig) -> list[SearchState]:
    """Expand one state: score the next decision, then fan out join paths
    whenever the choice completed the SELECT list (which fixes the referenced
    tables).  Join variants replicate their parent's confidence; ties between
    them are broken later by join path length."""
    pq = state.pq
    if pq.is_complete():
        raise ValueError("cannot expand a complete state")
    choice_config = ChoiceConfig(max_set_size=config.max_set_size)

    if pq.needs_join_path():
        return _join_fanout(state, graph, config)

    point = guidance.next_decision(pq)
    if point is None:
        return []
    scored = score_choices(model, nlq, pq, catalog, point, literals, choice_config)
    out: list[SearchState] = []
    for sc in scored:
        child_pq = ast.apply_decision(pq, point, sc.choice)
        child = SearchState(
            pq=child_pq,
            confidence=state.confidence * sc.score,
            trace=state.trace.extend(point, sc.choice, sc.score),
            join_len=state.join_len,
        )
        if child_pq.needs_join_path():
            out.extend(_join_fanout(child, graph, config))
        else:
            out.append(child)
    return out


def _join_fanout(state: SearchState, graph: SchemaGraph,
                 config: EnumConfig) -> list[SearchState]:
    paths = construct_join_paths(state.pq, graph, depth=config.join_expand_depth)
    out = []
    for jp in paths:
        out.append(SearchState(
            pq=replace(state.pq, join_path=jp),
            confidence=state.confidence,
            trace=state.trace.extend("join", jp, 1.0),
            join_len=jp.length,
        ))
    return out


class _Frontier:
    """Priority collection: best-first for gpqe/nopq, FIFO for noguide."""

    def __init__(self, breadth_first: bool):
        self.breadth_first = breadth_first
        self._heap: list = []
        self._queue: deque = deque()
        self._seq = 0

    def push(self, state: SearchState) -> None:
        if self.breadth_first:
            self._queue.append(state)
            return
        # generation order is itself deterministic, so it serves as the final
        # tiebreaker after confidence and join path length
        self._seq += 1
        key = (-state.confidence, state.join_len, self._seq)
        heapq.heappush(self._heap, (key, state))

    def pop(self) -> SearchState:
        if self.breadth_first:
            return self._queue.popleft()
        return heapq.heappop(self._heap)[1]

    def __len__(self) -> int:
        return len(self._queue) if self.breadth_first else len(self._heap)


def enumerate_queries(nlq: str, literals, model: GuidanceModel,
                      tsq: TableSketchQuery, db: Database,
                      catalog: SchemaCatalog, config: EnumConfig,
                      emit, stop=None,
                      on_expansion=None) -> TerminationReport:
    """Run the synthesis loop, streaming complete verified queries to `emit`.

    `emit(candidate)` receives candidates in rank order.  `stop` is an optional
    zero-argument callable polled each iteration (cooperative cancellation).
    `on_expansion(parent, children)` is a test hook for search invariants.
    In `nopq` mode partial queries are not verified, only complete ones; in
    `noguide` mode the model is replaced by a uniform one and the frontier is
    breadth-first.  The report's probe count is the number of statements the
    database actually executed for this run (memoized probe hits are free).
    """
    graph = join_graph(catalog)
    verifier = Verifier(catalog, db, strict_clauses=config.strict_clauses)
    if config.mode == "noguide":
        model = guidance.uniform_model()
    frontier = _Frontier(breadth_first=config.mode == "noguide")
    frontier.push(root_state())
    seen: set[PartialQuery] = set()
    emitted: set = set()
    verify_partials = config.mode in ("gpqe", "noguide")

    started = time.monotonic()
    deadline = started + config.timeout
    probes_before = db.executions
    rank = 0
    expansions = 0
    reason = "exhausted"

    def report(why: str) -> TerminationReport:
        return TerminationReport(why, rank, expansions,
                                 db.executions - probes_before,
                                 time.monotonic() - started)

    while len(frontier):
        if stop is not None and stop():
            return report("stopped")
        if time.monotonic() > deadline:
            return report("timeout")
        if config.max_expansions and expansions >= config.max_expansions:
            return report("budget")
        state = frontier.pop()
        expansions += 1
        brood = children(state, model, nlq, literals, catalog, graph, config)
        if on_expansion is not None:
            on_expansion(state, brood)
        for child in brood:
            if child.pq in seen:
                continue
            seen.add(child.pq)
            complete = child.pq.is_complete()
            if verify_partials or complete:
                if not verifier.verify(tsq, literals, child.pq).passed:
                    continue
            if complete:
                key = ast.canonical_key(child.pq)
                if key in emitted:
                    continue
                emitted.add(key)
                rank += 1
                emit(Candidate(rank, render_sql(child.pq, "executable"),
                               child.confidence, child))
                if config.max_candidates and rank >= config.max_candidates:
                    return report("max_candidates")
            else:
                frontier.push(child)

    return report(reason)
