"""Join path construction: Steiner trees over the FK-PK graph plus expansions.

Every partial query gets the minimum-weight tree connecting its referenced
tables, plus expansions that pull in FK-adjacent tables the final query may
need even though no projected or filtered column mentions them yet.  Schemas
are small (tens of tables), so the Steiner tree is computed exactly by
searching over subsets of non-terminal nodes rather than approximating.
"""

from __future__ import annotations

from itertools import combinations

from .ast import JoinPath, PartialQuery
from .catalog import SchemaGraph


class JoinError(Exception):
    """Terminals cannot be connected in the schema graph."""


def _spanning_tree(nodes: frozenset[str], graph: SchemaGraph):
    """Deterministic minimum spanning tree of the induced subgraph, or None."""
    if len(nodes) == 1:
        return ()
    edges = sorted(
        (e for e in graph.edges
         if e.from_ref.table in nodes and e.to_ref.table in nodes),
        key=lambda e: (e.weight, e))
    parent = {n: n for n in nodes}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    chosen = []
    for edge in edges:
        a, b = edge.tables()
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
            chosen.append(edge)
    if len(chosen) != len(nodes) - 1:
        return None
    return tuple(chosen)


def steiner(tables, graph: SchemaGraph) -> JoinPath:
    """Minimum-weight tree spanning `tables`, possibly through other tables.

    Exhaustive over supersets of the terminal set; ties broken by the
    lexicographically smallest edge list so results are reproducible.
    """
    terminals = frozenset(tables)
    if not terminals:
        raise JoinError("empty terminal set")
    extras = sorted(set(graph.nodes) - terminals)
    uniform = all(e.weight == 1 for e in graph.edges)
    best = None
    for size in range(len(extras) + 1):
        for added in combinations(extras, size):
            nodes = terminals | set(added)
            tree = _spanning_tree(frozenset(nodes), graph)
            if tree is None:
                continue
            weight = sum(e.weight for e in tree)
            key = (weight, tuple(sorted(tree)))
            if best is None or key < best[0]:
                best = (key, JoinPath(frozenset(nodes), tree))
        if best is not None and uniform:
            break  # under unit weights, adding nodes only adds weight
    if best is None:
        raise JoinError(f"tables {sorted(terminals)} are not connected")
    return best[1]


def expand_one_hop(jp: JoinPath, graph: SchemaGraph) -> list[JoinPath]:
    """One new JoinPath per FK edge from the path to a table outside it."""
    out = []
    seen = set()
    for table in sorted(jp.tables):
        for edge in sorted(graph.incident(table), key=lambda e: e):
            a, b = edge.tables()
            new = b if a == table else a
            if new in jp.tables:
                continue
            candidate = JoinPath(jp.tables | {new}, jp.joins + (edge,))
            key = (frozenset(candidate.tables), candidate.edge_key())
            if key not in seen:
                seen.add(key)
                out.append(candidate)
    return out


def construct_join_paths(pq: PartialQuery, graph: SchemaGraph,
                         depth: int = 1) -> list[JoinPath]:
    """All candidate join paths for a partial query.

    No referenced tables (e.g. a bare COUNT(*)) yields one single-table path
    per table.  Otherwise: the Steiner tree over the referenced tables plus
    up to `depth` levels of one-hop FK expansions, deduplicated and ordered by
    join path length ascending (the enumeration tiebreaker).
    """
    referenced = pq.referenced_tables()
    if not referenced:
        return [JoinPath(frozenset([t]), ()) for t in sorted(graph.nodes)]
    if not all(t in graph.nodes for t in referenced):
        return []
    try:
        base = steiner(referenced, graph)
    except JoinError:
        return []
    results = [base]
    seen = {(frozenset(base.tables), base.edge_key())}
    frontier = [base]
    for _ in range(max(depth, 0)):
        next_frontier = []
        for jp in frontier:
            for expanded in expand_one_hop(jp, graph):
                key = (frozenset(expanded.tables), expanded.edge_key())
                if key not in seen:
                    seen.add(key)
                    results.append(expanded)
                    next_frontier.append(expanded)
        frontier = next_frontier
    results.sort(key=lambda jp: (jp.length, jp.edge_key()))
    return results
