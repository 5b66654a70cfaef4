"""Schema catalog: tables, typed columns, FK-PK join graph, and the value index.

The catalog is loaded once per database and is immutable afterwards, so it can
be shared freely across concurrent synthesis tasks.  Join conditions are only
ever taken from declared FK-PK edges; nothing is inferred from the data.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .database import Database, EngineError, storage_to_semantic


class CatalogError(Exception):
    """Schema descriptor violates a catalog invariant."""


@dataclass(frozen=True, order=True)
class ColumnRef:
    """A (table, column) reference."""
    table: str
    column: str

    def __str__(self) -> str:
        return f"{self.table}.{self.column}"


@dataclass(frozen=True)
class ColumnDef:
    name: str
    semantic_type: str  # "text" | "number"


@dataclass(frozen=True)
class TableDef:
    name: str
    columns: tuple[ColumnDef, ...]
    primary_key: tuple[str, ...] = ()

    def column(self, name: str) -> ColumnDef:
        for col in self.columns:
            if col.name == name:
                return col
        raise CatalogError(f"no column {name!r} in table {self.name!r}")


@dataclass(frozen=True, order=True)
class FkPkEdge:
    """A declared foreign key (from) to primary key (to) relationship."""
    from_ref: ColumnRef
    to_ref: ColumnRef
    weight: float = 1.0

    def tables(self) -> tuple[str, str]:
        return (self.from_ref.table, self.to_ref.table)

    def condition_for(self, a: str, b: str) -> tuple[ColumnRef, ColumnRef] | None:
        """The (a-side, b-side) join columns if this edge links tables a and b."""
        if self.from_ref.table == a and self.to_ref.table == b:
            return (self.from_ref, self.to_ref)
        if self.from_ref.table == b and self.to_ref.table == a:
            return (self.to_ref, self.from_ref)
        return None


@dataclass(frozen=True)
class SchemaCatalog:
    tables: tuple[TableDef, ...]
    edges: tuple[FkPkEdge, ...]

    def __post_init__(self):
        names = [t.name for t in self.tables]
        if len(set(names)) != len(names):
            raise CatalogError("duplicate table names")
        for table in self.tables:
            cols = [c.name for c in table.columns]
            if len(set(cols)) != len(cols):
                raise CatalogError(f"duplicate column names in {table.name!r}")
            for pk_col in table.primary_key:
                if pk_col not in cols:
                    raise CatalogError(
                        f"primary key column {pk_col!r} missing from {table.name!r}")
        for edge in self.edges:
            if edge.weight <= 0:
                raise CatalogError("edge weight must be positive")
            for ref in (edge.from_ref, edge.to_ref):
                self.column_type(ref)  # raises if missing
            to_table = self.table(edge.to_ref.table)
            if edge.to_ref.column not in to_table.primary_key:
                raise CatalogError(
                    f"FK target {edge.to_ref} is not a declared primary key")

    def table(self, name: str) -> TableDef:
        for t in self.tables:
            if t.name == name:
                return t
        raise CatalogError(f"no table {name!r}")

    def has_table(self, name: str) -> bool:
        return any(t.name == name for t in self.tables)

    def column_type(self, ref: ColumnRef) -> str:
        return self.table(ref.table).column(ref.column).semantic_type

    def all_columns(self) -> list[ColumnRef]:
        return [ColumnRef(t.name, c.name) for t in self.tables for c in t.columns]

    def columns_of(self, tables) -> list[ColumnRef]:
        wanted = set(tables)
        return [ref for ref in self.all_columns() if ref.table in wanted]

    def is_primary_key(self, ref: ColumnRef) -> bool:
        return ref.column in self.table(ref.table).primary_key

    def to_descriptor(self) -> dict:
        """The schema.json shape, also served by the HTTP schema endpoint."""
        return {
            "tables": [
                {
                    "name": t.name,
                    "columns": [{"name": c.name, "type": c.semantic_type}
                                for c in t.columns],
                    "primary_key": list(t.primary_key),
                }
                for t in self.tables
            ],
            "foreign_keys": [
                {"from": [e.from_ref.table, e.from_ref.column],
                 "to": [e.to_ref.table, e.to_ref.column]}
                for e in self.edges
            ],
        }


class SchemaGraph:
    """Undirected weighted multigraph over tables; one edge per FK-PK pair."""

    def __init__(self, catalog: SchemaCatalog):
        self.nodes: tuple[str, ...] = tuple(t.name for t in catalog.tables)
        self.edges: tuple[FkPkEdge, ...] = tuple(catalog.edges)
        self._adjacent: dict[str, list[FkPkEdge]] = {n: [] for n in self.nodes}
        for edge in self.edges:
            a, b = edge.tables()
            self._adjacent[a].append(edge)
            if b != a:
                self._adjacent[b].append(edge)

    def incident(self, table: str) -> list[FkPkEdge]:
        return list(self._adjacent.get(table, ()))

    def neighbors(self, table: str) -> set[str]:
        out = set()
        for edge in self.incident(table):
            a, b = edge.tables()
            out.add(b if a == table else a)
        out.discard(table)
        return out


def join_graph(catalog: SchemaCatalog) -> SchemaGraph:
    """The FK-PK join graph: one node per table, one edge per declared FK."""
    return SchemaGraph(catalog)


# ---------------------------------------------------------------------------
# loading


def load_catalog(source) -> SchemaCatalog:
    """Load the catalog from a path (sqlite file / CSV dir) or an open Database.

    Fails rather than guessing: every FK edge must be declared, every FK target
    must be an existing declared primary key, and every column must map onto
    the two-type system.
    """
    db = source if isinstance(source, Database) else Database.open(source)
    descriptor = _embedded_descriptor(db)
    if descriptor is not None:
        return _catalog_from_descriptor(descriptor)
    return _catalog_from_sqlite(db)


def _embedded_descriptor(db: Database) -> dict | None:
    if "__schema_descriptor__" not in db.table_names():
        return None
    _, rows = db.execute("SELECT body FROM __schema_descriptor__")
    return json.loads(rows[0][0])


def _catalog_from_descriptor(schema: dict) -> SchemaCatalog:
    tables = []
    for t in schema.get("tables", []):
        columns = tuple(ColumnDef(c["name"], c["type"]) for c in t["columns"])
        for col in columns:
            if col.semantic_type not in ("text", "number"):
                raise EngineError(
                    f"unsupported column type {col.semantic_type!r}")
        tables.append(TableDef(t["name"], columns,
                               tuple(t.get("primary_key") or ())))
    edges = []
    for fk in schema.get("foreign_keys", []):
        edges.append(FkPkEdge(ColumnRef(*fk["from"]), ColumnRef(*fk["to"]),
                              float(fk.get("weight", 1.0))))
    try:
        return SchemaCatalog(tuple(tables), tuple(edges))
    except CatalogError as exc:
        raise CatalogError(f"invalid schema descriptor: {exc}") from exc


def _catalog_from_sqlite(db: Database) -> SchemaCatalog:
    tables = []
    edges = []
    names = [n for n in db.table_names() if n != "__schema_descriptor__"]
    for name in names:
        info = db.table_info(name)
        columns = tuple(ColumnDef(row[1], storage_to_semantic(row[2]))
                        for row in info)
        pk = tuple(row[1] for row in sorted(
            (r for r in info if r[5]), key=lambda r: r[5]))
        tables.append(TableDef(name, columns, pk))
    by_name = {t.name: t for t in tables}
    for name in names:
        for fk in db.foreign_keys(name):
            target_table, from_col, to_col = fk[2], fk[3], fk[4]
            if target_table not in by_name:
                raise CatalogError(
                    f"FK {name}.{from_col} references undeclared table {target_table!r}")
            if to_col is None:
                pk = by_name[target_table].primary_key
                if len(pk) != 1:
                    raise CatalogError(
                        f"FK {name}.{from_col} has no resolvable target column")
                to_col = pk[0]
            edges.append(FkPkEdge(ColumnRef(name, from_col),
                                  ColumnRef(target_table, to_col)))
    return SchemaCatalog(tuple(tables), tuple(sorted(edges)))


# ---------------------------------------------------------------------------
# value index / autocomplete


@dataclass
class ValueIndex:
    """Inverted index over distinct text values and the columns housing them."""
    entries: dict[str, set[ColumnRef]] = field(default_factory=dict)

    def occurrences(self, value: str) -> set[ColumnRef]:
        return self.entries.get(value, set())

    def __len__(self) -> int:
        return len(self.entries)


def build_value_index(catalog: SchemaCatalog, db: Database) -> ValueIndex:
    """Index every distinct non-NULL text value across all text columns."""
    index = ValueIndex()
    for table in catalog.tables:
        for col in table.columns:
            if col.semantic_type != "text":
                continue
            sql = (f'SELECT DISTINCT "{col.name}" FROM "{table.name}" '
                   f'WHERE "{col.name}" IS NOT NULL')
            _, rows = db.execute(sql, timeout=30.0)
            ref = ColumnRef(table.name, col.name)
            for (value,) in rows:
                index.entries.setdefault(str(value), set()).add(ref)
    return index


def autocomplete(index: ValueIndex, prefix: str, limit: int
                 ) -> list[tuple[str, set[ColumnRef]]]:
    """At most `limit` indexed values with a case-insensitive prefix match.

    Ordered by (value length ascending, value lexicographic) so completions are
    deterministic and the shortest matches surface first.
    """
    if limit < 1:
        raise ValueError("limit must be >= 1")
    needle = prefix.lower()
    matches = [v for v in index.entries if v.lower().startswith(needle)]
    matches.sort(key=lambda v: (len(v), v))
    return [(v, index.entries[v]) for v in matches[:limit]]
