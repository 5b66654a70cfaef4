"""Embedded database access: SQLite files or CSV directories with a schema descriptor.

A `Database` wraps a single read-only SQLite connection and is the unit that
verification probes and full query executions run against.  Probe results are
memoized per handle (the data never changes during a task), and the handle
counts actual engine executions so benchmark runs can compare probe economy
across modes.
"""

from __future__ import annotations

import csv
import json
import sqlite3
import threading
import time
from pathlib import Path


class EngineError(Exception):
    """Database-level failure (bad source, execution error, probe timeout)."""


_NUMBER_AFFINITIES = (
    "INT", "INTEGER", "TINYINT", "SMALLINT", "MEDIUMINT", "BIGINT",
    "REAL", "DOUBLE", "FLOAT", "NUMERIC", "DECIMAL", "NUMBER", "BOOLEAN",
)
_TEXT_AFFINITIES = ("CHAR", "VARCHAR", "TEXT", "CLOB", "STRING", "DATE", "TIME")


def storage_to_semantic(declared: str) -> str:
    """Map a declared storage type to the two-type system (text / number)."""
    upper = (declared or "").strip().upper()
    base = upper.split("(")[0].strip()
    if any(base.startswith(a) or a in base for a in _NUMBER_AFFINITIES):
        return "number"
    if upper == "" or any(a in base for a in _TEXT_AFFINITIES):
        return "text"
    raise EngineError(f"unsupported column storage type: {declared!r}")


class Database:
    """A handle on one loaded database.

    Safe for use from the single task that owns it; open one handle per
    concurrent task.  `probe` runs `SELECT 1 ... LIMIT 1`-style checks with
    memoization; `execute` returns full result sets.
    """

    def __init__(self, conn: sqlite3.Connection, source: str,
                 probe_timeout: float = 2.0):
        self._conn = conn
        self.source = source
        self.probe_timeout = probe_timeout
        self._probe_memo: dict[str, bool] = {}
        self._lock = threading.Lock()
        self.executions = 0

    # -- construction ------------------------------------------------------

    @classmethod
    def open(cls, source: str | Path, probe_timeout: float = 2.0) -> "Database":
        """Open a SQLite file or a directory of CSV files plus schema.json."""
        path = Path(source)
        if not path.exists():
            raise EngineError(f"database source not found: {source}")
        if path.is_dir():
            conn = _load_csv_directory(path)
        else:
            conn = sqlite3.connect(path, check_same_thread=False)
        conn.execute("PRAGMA query_only = ON")
        return cls(conn, str(source), probe_timeout)

    def clone(self) -> "Database":
        """A fresh handle on the same source with independent counters."""
        return Database.open(self.source, self.probe_timeout)

    def close(self) -> None:
        self._conn.close()

    # -- execution ---------------------------------------------------------

    def execute(self, sql: str, timeout: float | None = None) -> tuple[list[str], list[tuple]]:
        """Run `sql`, returning (column names, rows). Raises EngineError."""
        deadline = time.monotonic() + (timeout or self.probe_timeout or 60.0)

        def guard():
            if time.monotonic() > deadline:
                return 1  # non-zero aborts the statement
            return 0

        with self._lock:
            self.executions += 1
            try:
                self._conn.set_progress_handler(guard, 10_000)
                try:
                    cur = self._conn.execute(sql)
                    rows = cur.fetchall()
                    columns = [d[0] for d in cur.description] if cur.description else []
                finally:
                    self._conn.set_progress_handler(None, 0)
            except sqlite3.OperationalError as exc:
                if "interrupted" in str(exc):
                    raise EngineError(
                        f"query timed out after {timeout or self.probe_timeout}s: {sql}") from exc
                raise EngineError(f"execution failed: {exc}: {sql}") from exc
            except sqlite3.Error as exc:
                raise EngineError(f"execution failed: {exc}: {sql}") from exc
        return columns, rows

    def probe(self, sql: str) -> bool:
        """True iff `sql` returns at least one row; memoized per handle."""
        hit = self._probe_memo.get(sql)
        if hit is not None:
            return hit
        _, rows = self.execute(sql, timeout=self.probe_timeout)
        result = bool(rows)
        self._probe_memo[sql] = result
        return result

    def reset_counters(self) -> None:
        self.executions = 0
        self._probe_memo.clear()

    # -- introspection (used by catalog loading) ----------------------------

    def table_names(self) -> list[str]:
        _, rows = self.execute(
            "SELECT name FROM sqlite_master WHERE type = 'table' "
            "AND name NOT LIKE 'sqlite_%' ORDER BY name")
        return [r[0] for r in rows]

    def table_info(self, table: str) -> list[tuple]:
        _, rows = self.execute(f"PRAGMA table_info({_quote_ident(table)})")
        return rows

    def foreign_keys(self, table: str) -> list[tuple]:
        _, rows = self.execute(f"PRAGMA foreign_key_list({_quote_ident(table)})")
        return rows


def _quote_ident(name: str) -> str:
    return '"' + name.replace('"', '""') + '"'


def _load_csv_directory(path: Path) -> sqlite3.Connection:
    """Materialize a CSV directory + schema.json into an in-memory database."""
    descriptor = path / "schema.json"
    if not descriptor.exists():
        raise EngineError(f"missing schema descriptor: {descriptor}")
    try:
        schema = json.loads(descriptor.read_text())
    except ValueError as exc:
        raise EngineError(f"malformed schema.json: {exc}") from exc

    conn = sqlite3.connect(":memory:", check_same_thread=False)
    for table in schema.get("tables", []):
        name = table["name"]
        cols = []
        types = {}
        for col in table["columns"]:
            ctype = col["type"]
            if ctype not in ("text", "number"):
                raise EngineError(
                    f"unsupported column type {ctype!r} for {name}.{col['name']}")
            types[col["name"]] = ctype
            cols.append(f"{_quote_ident(col['name'])} "
                        f"{'NUMERIC' if ctype == 'number' else 'TEXT'}")
        pk = table.get("primary_key") or []
        ddl = f"CREATE TABLE {_quote_ident(name)} ({', '.join(cols)}"
        if pk:
            ddl += f", PRIMARY KEY ({', '.join(_quote_ident(c) for c in pk)})"
        ddl += ")"
        conn.execute(ddl)

        csv_file = path / f"{name}.csv"
        if not csv_file.exists():
            continue
        with csv_file.open(newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None:
                continue
            placeholders = ", ".join("?" for _ in header)
            insert = (f"INSERT INTO {_quote_ident(name)} "
                      f"({', '.join(_quote_ident(h) for h in header)}) "
                      f"VALUES ({placeholders})")
            for row in reader:
                values = []
                for col_name, cell in zip(header, row):
                    if cell == "":
                        values.append(None)
                    elif types.get(col_name) == "number":
                        num = float(cell)
                        values.append(int(num) if num.is_integer() else num)
                    else:
                        values.append(cell)
                conn.execute(insert, values)
    # schema.json metadata rides along for catalog loading
    conn.execute("CREATE TABLE __schema_descriptor__ (body TEXT)")
    conn.execute("INSERT INTO __schema_descriptor__ VALUES (?)",
                 (json.dumps(schema),))
    conn.commit()
    return conn
